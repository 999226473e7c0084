#pragma once

// Command implementations behind the layersep binary. Exit codes:
// 0 success, 1 usage error, 2 data/format error, 3 numerical failure.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "layersep/io.hpp"

namespace layersep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

struct SynthOptions {
  std::vector<std::string> layer_paths;  // m+1 ground-truth PGMs
  std::vector<double> coeffs;            // m mixing coefficients
  std::string out_dir;
  double noise = 0.0;  // uniform amplitude added to mixtures; 0 disables
  std::uint64_t seed = 0;
};

struct RecoverOptions {
  io::RunConfig config;
  bool enhance_reflections = false;
};

struct EvalOptions {
  std::string recovered_dir;
  std::string truth_dir;
};

struct BenchOptions {
  int size = 64;
  int m = 2;
  int iters = 10;
  int workers = 4;
};

int cmd_synth(const SynthOptions& opts, std::ostream& out, std::ostream& err);
int cmd_recover(const RecoverOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

// Full argv entry point used by the binary; writes to the given streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace layersep::cli
