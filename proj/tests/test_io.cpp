#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "layersep/io.hpp"
#include "layersep/rng.hpp"

using namespace layersep;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("layersep_io_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string file_path(const std::string& name) {
  return (temp_dir() / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image random_image(SplitMix64& rng, Eigen::Index h, Eigen::Index w, double lo,
                   double hi) {
  Image img(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) img(i, j) = rng.uniform(lo, hi);
  return img;
}

}  // namespace

TEST_CASE("read_pgm parses the reference header") {
  const std::string path = file_path("ref.pgm");
  write_bytes(path, std::string("P5\n2 2\n255\n") + '\x00' + '\x80' + '\xff' + '\x40');
  const Image img = io::read_pgm(path);
  REQUIRE(img.rows() == 2);
  REQUIRE(img.cols() == 2);
  CHECK(img(0, 0) == 0.0);
  CHECK(img(0, 1) == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
  CHECK(img(1, 0) == 1.0);
  CHECK(img(1, 1) == doctest::Approx(64.0 / 255.0).epsilon(1e-15));
}

TEST_CASE("pgm write-then-read is the identity on quantized images") {
  SplitMix64 rng(71);
  Image img(5, 7);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 7; ++j)
      img(i, j) = static_cast<double>(rng.next() % 256) / 255.0;
  const std::string path = file_path("roundtrip8.pgm");
  io::write_pgm(path, img, 255);
  CHECK((io::read_pgm(path) == img).all());
}

TEST_CASE("16-bit pgm uses big-endian samples") {
  Image img(1, 2);
  img(0, 0) = 0.0;
  img(0, 1) = 1.0;
  const std::string path = file_path("wide.pgm");
  io::write_pgm(path, img, 65535);
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == std::string("P5\n2 1\n65535\n").size() + 4);
  const std::size_t payload = bytes.size() - 4;
  CHECK(static_cast<unsigned char>(bytes[payload]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[payload + 1]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[payload + 2]) == 0xff);
  CHECK(static_cast<unsigned char>(bytes[payload + 3]) == 0xff);
  CHECK((io::read_pgm(path) == img).all());

  SplitMix64 rng(72);
  Image img16(4, 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      img16(i, j) = static_cast<double>(rng.next() % 65536) / 65535.0;
  const std::string path16 = file_path("roundtrip16.pgm");
  io::write_pgm(path16, img16, 65535);
  CHECK((io::read_pgm(path16) == img16).all());
}

TEST_CASE("read_pgm rejects malformed input with byte offsets") {
  const std::string bad_magic = file_path("bad_magic.pgm");
  write_bytes(bad_magic, "P6\n2 2\n255\n0000");
  CHECK_THROWS_WITH_AS(io::read_pgm(bad_magic),
                       doctest::Contains("at byte 0"), FormatError);

  const std::string bad_maxval = file_path("bad_maxval.pgm");
  write_bytes(bad_maxval, "P5\n2 2\n300\n0000");
  CHECK_THROWS_WITH_AS(io::read_pgm(bad_maxval),
                       doctest::Contains("maxval"), FormatError);

  const std::string truncated = file_path("truncated.pgm");
  write_bytes(truncated, "P5\n2 2\n255\nab");
  CHECK_THROWS_WITH_AS(io::read_pgm(truncated),
                       doctest::Contains("truncated"), FormatError);

  const std::string trailing = file_path("trailing.pgm");
  write_bytes(trailing, "P5\n2 2\n255\nabcdX");
  CHECK_THROWS_AS(io::read_pgm(trailing), FormatError);

  CHECK_THROWS_AS(io::read_pgm(file_path("missing.pgm")), IoError);
}

TEST_CASE("pgm header comments are skipped") {
  const std::string path = file_path("comment.pgm");
  write_bytes(path, std::string("P5\n# a remark\n2 1\n255\n") + 'a' + 'b');
  const Image img = io::read_pgm(path);
  CHECK(img.rows() == 1);
  CHECK(img.cols() == 2);
}

TEST_CASE("write_pgm validates its input") {
  Image out_of_range = Image::Constant(2, 2, 1.5);
  CHECK_THROWS_AS(io::write_pgm(file_path("bad.pgm"), out_of_range, 255),
                  ArgumentError);
  CHECK_THROWS_AS(io::write_pgm(file_path("bad.pgm"), Image::Zero(2, 2), 1024),
                  ArgumentError);
}

TEST_CASE("gradient file round trip and one-row layout") {
  SplitMix64 rng(73);
  DualPair pq{random_image(rng, 4, 5, -2.0, 2.0), random_image(rng, 5, 4, -2.0, 2.0)};
  const std::string path = file_path("pair.grad");
  io::write_gradient_file(path, pq);
  const DualPair back = io::read_gradient_file(path);
  for (Eigen::Index i = 0; i < pq.p.rows(); ++i)
    for (Eigen::Index j = 0; j < pq.p.cols(); ++j)
      CHECK(back.p(i, j) == static_cast<double>(static_cast<float>(pq.p(i, j))));
  for (Eigen::Index i = 0; i < pq.q.rows(); ++i)
    for (Eigen::Index j = 0; j < pq.q.cols(); ++j)
      CHECK(back.q(i, j) == static_cast<double>(static_cast<float>(pq.q(i, j))));

  // h = 1: the file carries only the q block
  DualPair row{Image::Zero(0, 3), random_image(rng, 1, 2, -1.0, 1.0)};
  const std::string row_path = file_path("row.grad");
  io::write_gradient_file(row_path, row);
  std::ifstream in(row_path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str().size() == std::string("ESRAG32\n1 3\n").size() + 2 * 4);
  const DualPair row_back = io::read_gradient_file(row_path);
  CHECK(row_back.p.size() == 0);
  CHECK(row_back.q.size() == 2);
}

TEST_CASE("zero-filled gradient payload reads as the zero pair") {
  const std::string path = file_path("zero.grad");
  write_bytes(path, std::string("ESRAG32\n2 2\n") + std::string(16, '\0'));
  const DualPair pq = io::read_gradient_file(path);
  CHECK(pq.p.abs().maxCoeff() == 0.0);
  CHECK(pq.q.abs().maxCoeff() == 0.0);
}

TEST_CASE("gradient reader rejects bad files") {
  const std::string magic = file_path("magic.grad");
  write_bytes(magic, "NOTRIGHT\n2 2\n" + std::string(16, '\0'));
  CHECK_THROWS_WITH_AS(io::read_gradient_file(magic), doctest::Contains("magic"),
                       FormatError);

  const std::string short_payload = file_path("short.grad");
  write_bytes(short_payload, "ESRAG32\n2 2\n" + std::string(12, '\0'));
  CHECK_THROWS_WITH_AS(io::read_gradient_file(short_payload),
                       doctest::Contains("payload"), FormatError);

  const std::string bad_dims = file_path("dims.grad");
  write_bytes(bad_dims, "ESRAG32\n2 two\n" + std::string(16, '\0'));
  CHECK_THROWS_AS(io::read_gradient_file(bad_dims), FormatError);
}

TEST_CASE("trace csv layout") {
  SolveTrace empty;
  std::ostringstream out;
  io::write_trace_csv(out, empty);
  CHECK(out.str() == "iter,objective,smooth,tv,elapsed_ms,fgp_iters\n");

  SolveTrace trace;
  for (int k = 1; k <= 100; ++k) {
    TraceRow row;
    row.iter = k;
    row.total = 1.0 / k;
    row.smooth = 0.5 / k;
    row.tv = 0.5 / k;
    row.elapsed_ms = 0.25;
    row.fgp_iters = {3, 5, 4};
    trace.rows.push_back(row);
  }
  std::ostringstream big;
  io::write_trace_csv(big, trace);
  const std::string text = big.str();
  std::size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  CHECK(lines == 101);
  CHECK(text.find("1,1,0.5,0.5,0.25,3;5;4\n") != std::string::npos);

  // 17 significant digits survive the round trip
  SolveTrace precise;
  TraceRow row;
  row.iter = 1;
  row.total = 0.12345678901234567;
  row.smooth = row.total;
  row.tv = 0.0;
  row.fgp_iters = {1};
  precise.rows.push_back(row);
  std::ostringstream ps;
  io::write_trace_csv(ps, precise);
  double parsed = 0.0;
  std::sscanf(ps.str().c_str(), "iter,objective,smooth,tv,elapsed_ms,fgp_iters\n1,%lf",
              &parsed);
  CHECK(parsed == row.total);
}

TEST_CASE("objective column is non-increasing on the lambda-zero reference run") {
  SplitMix64 rng(50);  // frozen: this run's trajectory is monotone end to end
  ProblemInstance inst;
  inst.coeffs = {0.7, 0.6};
  inst.lambda = 0.0;
  for (int i = 0; i < 2; ++i)
    inst.mixtures.push_back(random_image(rng, 8, 8, 0.0, 1.0));
  for (int i = 0; i < 3; ++i) inst.targets.push_back(DualPair::zero(8, 8));
  EsraParams params;
  params.total_iters = 100;
  const EsraResult res = esra_solve(inst, params);
  const std::string path = file_path("lambda0_trace.csv");
  io::write_trace_csv(path, res.trace);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);  // header
  double prev = std::numeric_limits<double>::infinity();
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    int iter = 0;
    double objective = 0.0;
    REQUIRE(std::sscanf(line.c_str(), "%d,%lf", &iter, &objective) == 2);
    CHECK(objective <= prev);
    prev = objective;
    ++rows;
  }
  CHECK(rows == 100);
}

TEST_CASE("run config parsing fills the documented defaults") {
  const io::RunConfig cfg = io::parse_run_config(
      "# minimal\n"
      "lambda = 0.05\n"
      "coeffs = 0.7,0.6\n"
      "mixtures = a.pgm, b.pgm\n"
      "targets = t1.grad,t2.grad,t3.grad\n"
      "out_dir = out\n");
  CHECK(cfg.lambda == 0.05);
  REQUIRE(cfg.coeffs.size() == 2);
  CHECK(cfg.coeffs[0] == 0.7);
  CHECK(cfg.coeffs[1] == 0.6);
  CHECK(cfg.total_iters == 100);
  CHECK(cfg.fgp_tol == 0.0001);
  CHECK(cfg.step_multiplier == 2.0);
  CHECK(cfg.fgp_iters == 50);
  CHECK(cfg.warm_start == false);
  CHECK(cfg.mixtures.size() == 2);
  CHECK(cfg.mixtures[1] == "b.pgm");
  CHECK(cfg.targets.size() == 3);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.trace_path.empty());
}

TEST_CASE("run config errors name the line") {
  CHECK_THROWS_WITH_AS(io::parse_run_config("lambda = 0.05\nfoo = 1\n"),
                       doctest::Contains("line 2"), FormatError);
  CHECK_THROWS_WITH_AS(
      io::parse_run_config("coeffs = 0.5\nlambda = banana\n"),
      doctest::Contains("line 2"), FormatError);
  CHECK_THROWS_WITH_AS(io::parse_run_config("lambda = 0.05\n"),
                       doctest::Contains("coeffs"), FormatError);
  CHECK_THROWS_WITH_AS(
      io::parse_run_config("lambda = 0.05\nlambda = 0.04\n"),
      doctest::Contains("duplicate"), FormatError);
  // count consistency across lists
  CHECK_THROWS_AS(io::parse_run_config("lambda = 0.05\n"
                                       "coeffs = 0.7\n"
                                       "mixtures = a.pgm\n"
                                       "targets = t1.grad\n"
                                       "out_dir = out\n"),
                  FormatError);
}

TEST_CASE("run config round trips through the manifest writer") {
  io::RunConfig cfg;
  cfg.lambda = 0.05;
  cfg.coeffs = {0.7, 0.6};
  cfg.mixtures = {"m1.pgm", "m2.pgm"};
  cfg.targets = {"t1.grad", "t2.grad", "t3.grad"};
  cfg.out_dir = "recovered";
  cfg.trace_path = "trace.csv";
  cfg.workers = 3;
  cfg.warm_start = true;
  const std::string path = file_path("config.cfg");
  io::write_run_config(path, cfg);
  const io::RunConfig back = io::load_run_config(path);
  CHECK(back.lambda == cfg.lambda);
  CHECK(back.coeffs == cfg.coeffs);
  CHECK(back.mixtures == cfg.mixtures);
  CHECK(back.targets == cfg.targets);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.trace_path == cfg.trace_path);
  CHECK(back.workers == 3);
  CHECK(back.warm_start == true);
}

TEST_CASE("parse_double_list") {
  const std::vector<double> v = io::parse_double_list("0.7, 0.6,1e-2");
  REQUIRE(v.size() == 3);
  CHECK(v[2] == 0.01);
  CHECK_THROWS_AS(io::parse_double_list("0.7,,0.6"), FormatError);
}
