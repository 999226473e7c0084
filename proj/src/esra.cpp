#include "layersep/esra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <utility>

namespace layersep {

double momentum_t(double t_prev) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
}

LayerVector extrapolate(const LayerVector& lv_k, const LayerVector& lv_km1,
                        double t_km1, double t_k) {
  if (!lv_k.same_shape(lv_km1))
    throw ShapeError("extrapolate: layer stacks differ in shape");
  const double coeff = (t_km1 - 1.0) / t_k;
  LayerVector out;
  out.layers.reserve(lv_k.size());
  for (std::size_t i = 0; i < lv_k.size(); ++i)
    out.layers.push_back(lv_k.layers[i] +
                         coeff * (lv_k.layers[i] - lv_km1.layers[i]));
  return out;
}

std::vector<Image> split_prox_targets(const LayerVector& Y,
                                      const ProblemInstance& inst, double L_s) {
  if (!(L_s > 0.0)) throw ArgumentError("split_prox_targets: step constant must be positive");
  const LayerVector g = grad_f(Y, inst);
  std::vector<Image> targets;
  targets.reserve(Y.size());
  for (std::size_t i = 0; i < Y.size(); ++i)
    targets.push_back(Y.layers[i] - g.layers[i] / L_s);
  return targets;
}

std::vector<ProxResult> pactv_prox_detailed(
    const std::vector<Image>& targets, const ProblemInstance& inst, double beta,
    const ProxParams& fgp, int workers, const std::vector<DualPair>* warm_starts) {
  const std::size_t n = inst.layer_count();
  if (targets.size() != n)
    throw ShapeError("pactv_prox: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(n) + " layers");
  if (warm_starts && warm_starts->size() != n)
    throw ShapeError("pactv_prox: warm start count mismatch");

  std::vector<ProxResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  auto solve_one = [&](std::size_t i) {
    try {
      ProxParams p = fgp;
      p.beta = beta;
      if (warm_starts) p.warm_start = (*warm_starts)[i];
      results[i] = fgp_solve(targets[i], inst.targets[i], p);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t nthreads = workers > 0 ? static_cast<std::size_t>(workers)
                                     : static_cast<std::size_t>(hw);
  nthreads = std::min(nthreads, n);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) solve_one(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += nthreads) solve_one(i);
      });
    for (std::thread& th : pool) th.join();
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error("prox layer " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return results;
}

LayerVector pactv_prox(const std::vector<Image>& targets,
                       const ProblemInstance& inst, double beta,
                       const ProxParams& fgp, int workers) {
  std::vector<ProxResult> results =
      pactv_prox_detailed(targets, inst, beta, fgp, workers);
  LayerVector lv;
  lv.layers.reserve(results.size());
  for (ProxResult& r : results) lv.layers.push_back(std::move(r.solution));
  return lv;
}

EsraResult esra_solve(const ProblemInstance& inst, const EsraParams& params) {
  validate_instance(inst);
  if (params.total_iters < 1)
    throw ArgumentError("esra_solve: total_iters must be at least 1");
  const double lip = lipschitz_f(inst.coeffs);
  const double L_s = params.step_constant > 0.0 ? params.step_constant : 2.0 * lip;
  if (L_s < lip * (1.0 - 1e-12))
    throw ArgumentError("esra_solve: step constant " + std::to_string(L_s) +
                        " is below the Lipschitz constant " + std::to_string(lip));
  const double beta = inst.lambda / L_s;
  const std::size_t n = inst.layer_count();
  const Eigen::Index h = inst.height(), w = inst.width();

  LayerVector cur = params.initial ? *params.initial : LayerVector::zero(n, h, w);
  if (params.initial) {
    if (cur.size() != n) throw ShapeError("esra_solve: initial layer count mismatch");
    for (const Image& l : cur.layers)
      if (l.rows() != h || l.cols() != w)
        throw ShapeError("esra_solve: initial layer size mismatch");
  }
  LayerVector mom = cur;
  double t = 1.0;

  std::vector<DualPair> warm;
  if (params.warm_start_fgp) warm.assign(n, DualPair::zero(h, w));

  EsraResult out;
  out.trace.rows.reserve(static_cast<std::size_t>(params.total_iters));
  using clock = std::chrono::steady_clock;
  for (int k = 1; k <= params.total_iters; ++k) {
    const auto started = clock::now();
    const std::vector<Image> targets = split_prox_targets(mom, inst, L_s);
    std::vector<ProxResult> prox = pactv_prox_detailed(
        targets, inst, beta, params.fgp, params.parallel_workers,
        params.warm_start_fgp ? &warm : nullptr);

    LayerVector next;
    next.layers.reserve(n);
    TraceRow row;
    row.fgp_iters.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      row.fgp_iters.push_back(prox[i].iters_used);
      if (params.warm_start_fgp) warm[i] = prox[i].dual;
      next.layers.push_back(std::move(prox[i].solution));
    }

    const double t_next = momentum_t(t);
    mom = extrapolate(next, cur, t, t_next);
    cur = std::move(next);
    t = t_next;

    const ObjectiveParts obj = objective_F(cur, inst);
    if (!std::isfinite(obj.total))
      throw NumericalError("esra_solve: non-finite objective at iteration " +
                           std::to_string(k));
    row.iter = k;
    row.total = obj.total;
    row.smooth = obj.smooth;
    row.tv = obj.tv;
    row.elapsed_ms =
        std::chrono::duration<double, std::milli>(clock::now() - started).count();
    out.trace.rows.push_back(std::move(row));
    if (params.on_iterate) params.on_iterate(k, cur);
  }

  out.layers = std::move(cur);
  return out;
}

}  // namespace layersep
