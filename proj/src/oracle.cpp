#include "layersep/oracle.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "layersep/rng.hpp"

namespace layersep::oracle {

namespace {

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double tv_objective(const Image& L, const Image& d, double beta,
                    const DualPair& E) {
  const Eigen::Index h = L.rows(), w = L.cols();
  double obj = 0.0;
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) {
      const double r = L(i, j) - d(i, j);
      obj += 0.5 * r * r;
    }
  for (Eigen::Index i = 0; i + 1 < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j)
      obj += beta * std::abs(L(i + 1, j) - L(i, j) - E.p(i, j));
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j + 1 < w; ++j)
      obj += beta * std::abs(L(i, j + 1) - L(i, j) - E.q(i, j));
  return obj;
}

}  // namespace

Image prox_subgradient_reference(const Image& d, const DualPair& E, double beta,
                                 const OracleConfig& cfg) {
  if (!(beta >= 0.0))
    throw ArgumentError("prox_subgradient_reference: beta must be nonnegative");
  if (cfg.iters < 1 || !(cfg.step_constant > 0.0))
    throw ArgumentError("prox_subgradient_reference: bad oracle config");
  const Eigen::Index h = d.rows(), w = d.cols();

  Image x(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) x(i, j) = clamp01(d(i, j));

  Image best = x;
  double best_obj = tv_objective(x, d, beta, E);
  Image g(h, w);
  for (long long k = 1; k <= cfg.iters; ++k) {
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j) g(i, j) = x(i, j) - d(i, j);
    for (Eigen::Index i = 0; i + 1 < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j) {
        const double s = sign_of(x(i + 1, j) - x(i, j) - E.p(i, j));
        g(i + 1, j) += beta * s;
        g(i, j) -= beta * s;
      }
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j + 1 < w; ++j) {
        const double s = sign_of(x(i, j + 1) - x(i, j) - E.q(i, j));
        g(i, j + 1) += beta * s;
        g(i, j) -= beta * s;
      }
    const double step = cfg.step_constant / std::sqrt(static_cast<double>(k));
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j)
        x(i, j) = clamp01(x(i, j) - step * g(i, j));
    const double obj = tv_objective(x, d, beta, E);
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
    }
  }
  return best;
}

LayerVector accelerated_projected_gradient_reference(const ProblemInstance& inst,
                                                     const EsraParams& params) {
  validate_instance(inst);
  if (inst.lambda != 0.0)
    throw ArgumentError(
        "accelerated_projected_gradient_reference: instance must have lambda == 0");
  const std::size_t m = inst.mixture_count();
  const Eigen::Index h = inst.height(), w = inst.width();
  double lip = 1.0;
  for (double a : inst.coeffs) lip += a * a;
  const double L_s = params.step_constant > 0.0 ? params.step_constant : 2.0 * lip;

  LayerVector cur =
      params.initial ? *params.initial : LayerVector::zero(m + 1, h, w);
  LayerVector mom = cur;
  double t = 1.0;
  for (int k = 1; k <= params.total_iters; ++k) {
    // gradient of the data term at the extrapolated point, block by block
    LayerVector g = LayerVector::zero(m + 1, h, w);
    for (std::size_t i = 0; i < m; ++i) {
      Image r = inst.coeffs[i] * mom.layers[0] + mom.layers[i + 1] - inst.mixtures[i];
      g.layers[0] += inst.coeffs[i] * r;
      g.layers[i + 1] = std::move(r);
    }
    LayerVector next;
    next.layers.reserve(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
      next.layers.push_back(
          (mom.layers[i] - g.layers[i] / L_s).max(0.0).min(1.0));

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double coeff = (t - 1.0) / t_next;
    LayerVector extrapolated;
    extrapolated.layers.reserve(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
      extrapolated.layers.push_back(next.layers[i] +
                                    coeff * (next.layers[i] - cur.layers[i]));
    mom = std::move(extrapolated);
    cur = std::move(next);
    t = t_next;
    if (params.on_iterate) params.on_iterate(k, cur);
  }
  return cur;
}

Image grid_search_reference(const Image& d, const DualPair& E, double beta,
                            int resolution) {
  const Eigen::Index pixels = d.rows() * d.cols();
  if (pixels > 3)
    throw ArgumentError("grid_search_reference: at most 3 pixels, got " +
                        std::to_string(pixels));
  if (resolution < 2 || resolution > 2001)
    throw ArgumentError("grid_search_reference: resolution out of range");

  const double spacing = 1.0 / static_cast<double>(resolution - 1);
  Image candidate(d.rows(), d.cols());
  Image best(d.rows(), d.cols());
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(pixels), 0);
  while (true) {
    for (Eigen::Index k = 0; k < pixels; ++k)
      candidate(k / d.cols(), k % d.cols()) =
          idx[static_cast<std::size_t>(k)] * spacing;
    const double obj = tv_objective(candidate, d, beta, E);
    if (obj < best_obj) {
      best_obj = obj;
      best = candidate;
    }
    // odometer increment over the grid
    Eigen::Index pos = 0;
    while (pos < pixels) {
      if (++idx[static_cast<std::size_t>(pos)] < resolution) break;
      idx[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == pixels) break;
  }
  return best;
}

double lipschitz_power_iteration(const std::vector<double>& coeffs,
                                 Eigen::Index h, Eigen::Index w, int iters,
                                 std::uint64_t seed, LayerVector* direction) {
  if (coeffs.empty())
    throw ArgumentError("lipschitz_power_iteration: empty coefficient list");
  const std::size_t m = coeffs.size();
  SplitMix64 rng(seed);
  LayerVector x = LayerVector::zero(m + 1, h, w);
  for (Image& l : x.layers)
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j) l(i, j) = rng.uniform(-1.0, 1.0);

  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double nrm = std::sqrt(squared_norm(x));
    for (Image& l : x.layers) l /= nrm;
    // y = A^T A x
    LayerVector y = LayerVector::zero(m + 1, h, w);
    for (std::size_t i = 0; i < m; ++i) {
      Image r = coeffs[i] * x.layers[0] + x.layers[i + 1];
      y.layers[0] += coeffs[i] * r;
      y.layers[i + 1] = std::move(r);
    }
    estimate = 0.0;  // Rayleigh quotient with the normalized x
    for (std::size_t i = 0; i <= m; ++i) estimate += dot(x.layers[i], y.layers[i]);
    x = std::move(y);
  }
  if (direction) {
    const double nrm = std::sqrt(squared_norm(x));
    for (Image& l : x.layers) l /= nrm;
    *direction = std::move(x);
  }
  return estimate;
}

}  // namespace layersep::oracle
