#include "layersep/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "layersep/esra.hpp"
#include "layersep/rng.hpp"

namespace layersep::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int parse_env_workers(const char* text) {
  char* end = nullptr;
  const long v = std::strtol(text, &end, 10);
  if (end == text || *end != '\0' || v < 0)
    throw UsageError("LAYERSEP_WORKERS must be a nonnegative integer, got '" +
                     std::string(text) + "'");
  return static_cast<int>(v);
}

template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

ProblemInstance load_instance(const io::RunConfig& cfg) {
  ProblemInstance inst;
  inst.lambda = cfg.lambda;
  inst.coeffs = cfg.coeffs;
  for (const std::string& path : cfg.mixtures)
    inst.mixtures.push_back(io::read_pgm(path));
  for (const std::string& path : cfg.targets)
    inst.targets.push_back(io::read_gradient_file(path));
  validate_instance(inst);
  return inst;
}

// Smooth seeded field for bench instances: a few quadratic bumps plus noise,
// kept inside [0,1]. No transcendentals, so values are identical everywhere.
Image synthetic_layer(Eigen::Index h, Eigen::Index w, SplitMix64& rng,
                      double lo, double hi) {
  Image img = Image::Zero(h, w);
  for (int b = 0; b < 4; ++b) {
    const double ci = rng.uniform(0.0, static_cast<double>(h));
    const double cj = rng.uniform(0.0, static_cast<double>(w));
    const double radius = rng.uniform(0.2, 0.6) * static_cast<double>(std::max(h, w));
    const double amp = rng.uniform(0.2, 1.0);
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j) {
        const double di = (static_cast<double>(i) - ci) / radius;
        const double dj = (static_cast<double>(j) - cj) / radius;
        const double fall = 1.0 - (di * di + dj * dj);
        if (fall > 0.0) img(i, j) += amp * fall;
      }
  }
  const double top = img.maxCoeff();
  if (top > 0.0) img /= top;
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j)
      img(i, j) = lo + (hi - lo) * (0.8 * img(i, j) + 0.2 * rng.uniform01());
  return img;
}

}  // namespace

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&]() {
        if (opts.layer_paths.size() < 2)
          throw UsageError("synth: need at least 2 ground-truth layers");
        if (opts.coeffs.size() + 1 != opts.layer_paths.size())
          throw UsageError("synth: " + std::to_string(opts.layer_paths.size()) +
                           " layers need " +
                           std::to_string(opts.layer_paths.size() - 1) +
                           " coefficients, got " +
                           std::to_string(opts.coeffs.size()));
        if (opts.out_dir.empty()) throw UsageError("synth: --out is required");
        if (opts.noise < 0.0) throw UsageError("synth: noise must be nonnegative");

        LayerVector truth;
        for (const std::string& path : opts.layer_paths)
          truth.layers.push_back(io::read_pgm(path));
        const Eigen::Index h = truth.layers[0].rows(), w = truth.layers[0].cols();
        for (const Image& l : truth.layers)
          if (l.rows() != h || l.cols() != w)
            throw ShapeError("synth: ground-truth layers differ in size");

        fs::create_directories(opts.out_dir);
        std::vector<Image> mixtures = apply_mixing(truth, opts.coeffs);
        SplitMix64 rng(opts.seed);
        if (opts.noise > 0.0)
          for (Image& I : mixtures)
            for (Eigen::Index i = 0; i < h; ++i)
              for (Eigen::Index j = 0; j < w; ++j)
                I(i, j) += rng.uniform(-opts.noise, opts.noise);

        io::RunConfig manifest;
        manifest.lambda = 0.05;
        manifest.coeffs = opts.coeffs;
        long clipped = 0;
        const long total = static_cast<long>(mixtures.size()) * h * w;
        for (std::size_t i = 0; i < mixtures.size(); ++i) {
          clipped += ((mixtures[i] < 0.0) || (mixtures[i] > 1.0)).count();
          mixtures[i] = project_box(mixtures[i], 0.0, 1.0);
          const std::string path =
              (fs::path(opts.out_dir) / ("mixture_" + std::to_string(i + 1) + ".pgm"))
                  .string();
          io::write_pgm(path, mixtures[i], 65535);
          manifest.mixtures.push_back(path);
          out << "wrote " << path << "\n";
        }
        if (clipped > 0)
          err << "warning: clipped " << clipped << "/" << total
              << " mixture samples ("
              << fmt(static_cast<double>(clipped) / static_cast<double>(total))
              << ") to [0,1]\n";

        for (std::size_t i = 0; i < truth.size(); ++i) {
          const std::string path =
              (fs::path(opts.out_dir) / ("target_" + std::to_string(i + 1) + ".grad"))
                  .string();
          io::write_gradient_file(path, grad_forward(truth.layers[i]));
          manifest.targets.push_back(path);
          out << "wrote " << path << "\n";
        }

        manifest.out_dir = (fs::path(opts.out_dir) / "recovered").string();
        const std::string manifest_path =
            (fs::path(opts.out_dir) / "manifest.cfg").string();
        io::write_run_config(manifest_path, manifest);
        out << "wrote " << manifest_path << "\n";
        return kExitOk;
      },
      err);
}

int cmd_recover(const RecoverOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&]() {
        const io::RunConfig& cfg = opts.config;
        if (cfg.out_dir.empty()) throw UsageError("recover: no output directory");
        ProblemInstance inst = load_instance(cfg);

        EsraParams params;
        params.total_iters = cfg.total_iters;
        params.step_constant = cfg.step_multiplier * lipschitz_f(inst.coeffs);
        params.fgp.max_iters = cfg.fgp_iters;
        params.fgp.tol = cfg.fgp_tol;
        params.parallel_workers = cfg.workers;
        params.warm_start_fgp = cfg.warm_start;
        EsraResult result = esra_solve(inst, params);

        fs::create_directories(cfg.out_dir);
        for (std::size_t i = 0; i < result.layers.size(); ++i) {
          Image layer = result.layers.layers[i];
          const bool reflection = i > 0;
          if (reflection && opts.enhance_reflections)
            layer = project_box(2.0 * layer, 0.0, 1.0);
          const std::string name =
              reflection ? "reflection_" + std::to_string(i) + ".pgm"
                         : "transmitted.pgm";
          const std::string path = (fs::path(cfg.out_dir) / name).string();
          io::write_pgm(path, layer, 65535);
          out << "wrote " << path << "\n";
        }
        if (!cfg.trace_path.empty()) {
          io::write_trace_csv(cfg.trace_path, result.trace);
          out << "wrote " << cfg.trace_path << "\n";
        }
        const TraceRow& last = result.trace.rows.back();
        out << "finished " << last.iter << " iterations, objective "
            << fmt(last.total) << " (smooth " << fmt(last.smooth) << ", tv "
            << fmt(last.tv) << ")\n";
        return kExitOk;
      },
      err);
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&]() {
        std::vector<std::string> names;
        if (!fs::is_directory(opts.recovered_dir))
          throw IoError("eval: '" + opts.recovered_dir + "' is not a directory");
        for (const auto& entry : fs::directory_iterator(opts.recovered_dir))
          if (entry.path().extension() == ".pgm")
            names.push_back(entry.path().filename().string());
        std::sort(names.begin(), names.end());
        if (names.empty())
          throw IoError("eval: no .pgm files in '" + opts.recovered_dir + "'");

        out << "layer,rmse,psnr\n";
        for (const std::string& name : names) {
          const Image got = io::read_pgm((fs::path(opts.recovered_dir) / name).string());
          const Image want = io::read_pgm((fs::path(opts.truth_dir) / name).string());
          if (got.rows() != want.rows() || got.cols() != want.cols())
            throw ShapeError("eval: '" + name + "' is " + std::to_string(got.rows()) +
                             "x" + std::to_string(got.cols()) + " recovered vs " +
                             std::to_string(want.rows()) + "x" +
                             std::to_string(want.cols()) + " truth");
          const double rmse = std::sqrt((got - want).square().mean());
          out << fs::path(name).stem().string() << ',' << fmt(rmse) << ',';
          if (rmse == 0.0)
            out << "inf";
          else
            out << fmt(-20.0 * std::log10(rmse));
          out << "\n";
        }
        return kExitOk;
      },
      err);
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&]() {
        if (opts.size < 2 || opts.m < 1 || opts.iters < 1 || opts.workers < 1)
          throw UsageError("bench: size, m, iters and workers must be positive");
        const Eigen::Index n = opts.size;
        SplitMix64 rng(20240801);
        LayerVector truth;
        truth.layers.push_back(synthetic_layer(n, n, rng, 0.0, 0.55));
        for (int i = 0; i < opts.m; ++i)
          truth.layers.push_back(synthetic_layer(n, n, rng, 0.0, 0.45));
        ProblemInstance inst;
        for (int i = 0; i < opts.m; ++i)
          inst.coeffs.push_back(0.5 + 0.3 * (i + 1.0) / opts.m);
        inst.mixtures = apply_mixing(truth, inst.coeffs);
        for (Image& I : inst.mixtures) I = project_box(I, 0.0, 1.0);
        for (const Image& l : truth.layers)
          inst.targets.push_back(grad_forward(l));
        inst.lambda = 0.05;

        auto run_once = [&](int workers) {
          EsraParams params;
          params.total_iters = opts.iters;
          params.parallel_workers = workers;
          using clock = std::chrono::steady_clock;
          const auto started = clock::now();
          EsraResult r = esra_solve(inst, params);
          const double ms =
              std::chrono::duration<double, std::milli>(clock::now() - started)
                  .count();
          return std::pair<double, EsraResult>(ms / opts.iters, std::move(r));
        };

        out << "size " << n << "x" << n << " m=" << opts.m
            << " iters=" << opts.iters << "\n";
        auto [base_ms, base] = run_once(1);
        out << "workers=1: " << fmt(base_ms) << " ms/iter\n";
        if (opts.workers > 1) {
          auto [par_ms, par] = run_once(opts.workers);
          out << "workers=" << opts.workers << ": " << fmt(par_ms)
              << " ms/iter  speedup=" << fmt(base_ms / par_ms) << "\n";
          bool identical = base.trace.rows.size() == par.trace.rows.size();
          for (std::size_t i = 0; identical && i < base.trace.rows.size(); ++i)
            identical = base.trace.rows[i].total == par.trace.rows[i].total &&
                        base.trace.rows[i].smooth == par.trace.rows[i].smooth &&
                        base.trace.rows[i].tv == par.trace.rows[i].tv;
          out << "objective traces identical: " << (identical ? "yes" : "no") << "\n";
          if (!identical)
            throw NumericalError("bench: traces diverged across worker counts");
        }
        return kExitOk;
      },
      err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent transparent-layer recovery from aligned superimposed images"};
  app.require_subcommand(1);

  SynthOptions synth;
  std::string synth_coeffs;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Mix ground-truth layers into synthetic inputs");
  synth_cmd->add_option("layers", synth.layer_paths, "ground-truth layer PGMs")
      ->required()
      ->expected(-2);
  synth_cmd->add_option("--coeffs", synth_coeffs, "comma-separated mixing coefficients")
      ->required();
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--noise", synth.noise, "uniform noise amplitude");
  synth_cmd->add_option("--seed", synth.seed, "noise seed");

  CLI::App* recover_cmd =
      app.add_subcommand("recover", "Recover latent layers from mixtures");
  std::string config_path, rec_coeffs, rec_trace, rec_out;
  double rec_lambda = 0, rec_fgp_tol = 0, rec_step_mult = 0;
  int rec_iters = 0, rec_fgp_iters = 0, rec_workers = 0;
  bool rec_warm = false, rec_enhance = false;
  recover_cmd->add_option("--config", config_path, "run configuration file")
      ->required();
  recover_cmd->add_option("--lambda", rec_lambda, "TV weight");
  recover_cmd->add_option("--coeffs", rec_coeffs, "mixing coefficients");
  recover_cmd->add_option("--iters", rec_iters, "outer iterations");
  recover_cmd->add_option("--fgp-iters", rec_fgp_iters, "inner iteration cap");
  recover_cmd->add_option("--fgp-tol", rec_fgp_tol, "inner stopping tolerance");
  recover_cmd->add_option("--step-mult", rec_step_mult,
                          "step constant as a multiple of the Lipschitz bound");
  recover_cmd->add_option("--workers", rec_workers, "parallel prox workers");
  recover_cmd->add_flag("--warm-start", rec_warm, "reuse dual pairs across iterations");
  recover_cmd->add_option("--trace", rec_trace, "write per-iteration CSV here");
  recover_cmd->add_flag("--enhance-reflections", rec_enhance,
                        "double reflection intensities before writing");
  recover_cmd->add_option("--out", rec_out, "output directory override");

  EvalOptions eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Compare recovered layers against ground truth");
  eval_cmd->add_option("recovered_dir", eval.recovered_dir, "recovered layer directory")
      ->required();
  eval_cmd->add_option("truth_dir", eval.truth_dir, "ground-truth directory")
      ->required();

  BenchOptions bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Time the solver on a synthetic instance");
  bench_cmd->add_option("--size", bench.size, "image side length");
  bench_cmd->add_option("--m", bench.m, "number of mixtures");
  bench_cmd->add_option("--iters", bench.iters, "outer iterations");
  bench_cmd->add_option("--workers", bench.workers, "parallel prox workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const char* env_workers = std::getenv("LAYERSEP_WORKERS");

  if (synth_cmd->parsed()) {
    return guarded(
        [&]() {
          try {
            synth.coeffs = io::parse_double_list(synth_coeffs);
          } catch (const FormatError& e) {
            throw UsageError(std::string("synth: bad --coeffs: ") + e.what());
          }
          return cmd_synth(synth, out, err);
        },
        err);
  }
  if (recover_cmd->parsed()) {
    return guarded(
        [&]() {
          RecoverOptions opts;
          opts.config = io::load_run_config(config_path);
          opts.enhance_reflections = rec_enhance;
          // Flags override the file; LAYERSEP_WORKERS fills in for --workers.
          if (recover_cmd->count("--lambda")) opts.config.lambda = rec_lambda;
          if (recover_cmd->count("--coeffs"))
            opts.config.coeffs = io::parse_double_list(rec_coeffs);
          if (recover_cmd->count("--iters")) opts.config.total_iters = rec_iters;
          if (recover_cmd->count("--fgp-iters")) opts.config.fgp_iters = rec_fgp_iters;
          if (recover_cmd->count("--fgp-tol")) opts.config.fgp_tol = rec_fgp_tol;
          if (recover_cmd->count("--step-mult"))
            opts.config.step_multiplier = rec_step_mult;
          if (recover_cmd->count("--workers"))
            opts.config.workers = rec_workers;
          else if (env_workers)
            opts.config.workers = parse_env_workers(env_workers);
          if (rec_warm) opts.config.warm_start = true;
          if (recover_cmd->count("--trace")) opts.config.trace_path = rec_trace;
          if (recover_cmd->count("--out")) opts.config.out_dir = rec_out;
          if (opts.config.lambda < 0 || opts.config.total_iters < 1 ||
              opts.config.fgp_iters < 1 || opts.config.fgp_tol < 0 ||
              opts.config.step_multiplier < 1 || opts.config.workers < 0)
            throw UsageError("recover: invalid parameter after overrides");
          return cmd_recover(opts, out, err);
        },
        err);
  }
  if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
  if (bench_cmd->parsed()) {
    return guarded(
        [&]() {
          if (!bench_cmd->count("--workers") && env_workers)
            bench.workers = parse_env_workers(env_workers);
          return cmd_bench(bench, out, err);
        },
        err);
  }
  err << "error: no subcommand given\n";
  return kExitUsage;
}

}  // namespace layersep::cli
