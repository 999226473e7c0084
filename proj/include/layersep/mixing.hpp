#pragma once

// Smooth data term of the layer-recovery objective: per-mixture residuals
// r_i = a_i * L_1 + L_{i+1} - I_i, their least-squares energy, its gradient
// and Lipschitz constant, plus the full composite objective for diagnostics.
// The mixing matrix is never materialized; all actions are per-layer image
// arithmetic.

#include <vector>

#include "layersep/grid.hpp"

namespace layersep {

struct ProblemInstance {
  std::vector<Image> mixtures;    // I_1..I_m, intensities in [0,1]
  std::vector<double> coeffs;     // a_1..a_m applied to the shared layer
  std::vector<DualPair> targets;  // gradient targets, one per layer (m+1)
  double lambda = 0.0;            // TV weight

  Eigen::Index height() const { return mixtures.empty() ? 0 : mixtures.front().rows(); }
  Eigen::Index width() const { return mixtures.empty() ? 0 : mixtures.front().cols(); }
  std::size_t mixture_count() const { return mixtures.size(); }
  std::size_t layer_count() const { return mixtures.size() + 1; }
};

// Throws ArgumentError/ShapeError when an invariant is broken.
void validate_instance(const ProblemInstance& inst);

// Predicted mixtures a_i * L_1 + L_{i+1}.
std::vector<Image> apply_mixing(const LayerVector& layers,
                                const std::vector<double>& coeffs);

// Gradient of the smooth term. Block 1 collects sum_i a_i * r_i, block i+1
// is r_i.
LayerVector grad_f(const LayerVector& lv, const ProblemInstance& inst);

// sum_i a_i^2 + 1, the largest eigenvalue of the normal matrix.
double lipschitz_f(const std::vector<double>& coeffs);

struct ObjectiveParts {
  double total = 0.0;
  double smooth = 0.0;
  double tv = 0.0;
};

// Full composite objective, split into the quadratic part and the weighted
// absolute gradient-target residual.
ObjectiveParts objective_F(const LayerVector& lv, const ProblemInstance& inst);

}  // namespace layersep
