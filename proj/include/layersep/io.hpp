#pragma once

// File formats: binary PGM for intensity images, a small float32 container
// for signed gradient targets, CSV for solve traces, and the line-based
// run configuration. All formats are byte-order explicit; values are 32-bit
// on disk for gradients and 64-bit in memory.

#include <iosfwd>
#include <string>
#include <vector>

#include "layersep/esra.hpp"
#include "layersep/grid.hpp"

namespace layersep::io {

// Binary "P5" PGM, maxval 255 or 65535 (16-bit samples are big-endian).
// Values map linearly to [0,1] on read; writes round half away from zero.
Image read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Image& img, int maxval = 255);

// Gradient-target container: "ESRAG32\n", "h w\n", then the p block
// ((h-1)*w floats) followed by the q block (h*(w-1) floats), row-major,
// little-endian IEEE float32.
DualPair read_gradient_file(const std::string& path);
void write_gradient_file(const std::string& path, const DualPair& pq);

// "iter,objective,smooth,tv,elapsed_ms,fgp_iters"; doubles carry 17
// significant digits; per-layer inner iteration counts join with ';'.
void write_trace_csv(std::ostream& out, const SolveTrace& trace);
void write_trace_csv(const std::string& path, const SolveTrace& trace);

struct RunConfig {
  double lambda = 0.0;
  std::vector<double> coeffs;
  int total_iters = 100;
  int fgp_iters = 50;
  double fgp_tol = 1e-4;
  double step_multiplier = 2.0;  // step constant = multiplier * lipschitz_f(coeffs)
  bool warm_start = false;
  int workers = 0;
  std::vector<std::string> mixtures;
  std::vector<std::string> targets;
  std::string out_dir;
  std::string trace_path;  // empty: no trace
};

// Line-based "key = value"; '#' starts a comment; keys are case-sensitive;
// lists are comma-separated. Required: lambda, coeffs, mixtures, targets,
// out_dir. Errors name the offending line.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);
void write_run_config(const std::string& path, const RunConfig& cfg);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace layersep::io
