#pragma once

// Reference solvers for tests and acceptance runs. Deliberately simple and
// slow: straight scalar loops, no shared code with the production path.
// Correctness anchors only; not for real workloads.

#include <cstdint>

#include "layersep/esra.hpp"

namespace layersep::oracle {

struct OracleConfig {
  long long iters = 100000;
  double step_constant = 0.1;  // diminishing schedule c / sqrt(k)
  std::uint64_t seed = 1;
};

// Projected subgradient on the primal TV subproblem; returns the iterate
// with the smallest objective seen.
Image prox_subgradient_reference(const Image& d, const DualPair& E, double beta,
                                 const OracleConfig& cfg);

// Accelerated projected gradient on the pure data term; only valid when the
// instance has lambda == 0. Emits iterates through params.on_iterate.
LayerVector accelerated_projected_gradient_reference(const ProblemInstance& inst,
                                                     const EsraParams& params);

// Exhaustive minimization over a uniform grid on [0,1]^pixels; at most
// 3 pixels and 2001 grid points per pixel.
Image grid_search_reference(const Image& d, const DualPair& E, double beta,
                            int resolution);

// Largest eigenvalue of the data-term normal matrix by power iteration;
// optionally returns the (normalized) eigendirection.
double lipschitz_power_iteration(const std::vector<double>& coeffs,
                                 Eigen::Index h, Eigen::Index w, int iters,
                                 std::uint64_t seed,
                                 LayerVector* direction = nullptr);

}  // namespace layersep::oracle
