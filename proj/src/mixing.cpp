#include "layersep/mixing.hpp"

#include <cmath>
#include <string>

namespace layersep {

namespace {

void check_shapes(const LayerVector& lv, const ProblemInstance& inst,
                  const char* where) {
  if (lv.size() != inst.layer_count())
    throw ShapeError(std::string(where) + ": expected " +
                     std::to_string(inst.layer_count()) + " layers, got " +
                     std::to_string(lv.size()));
  for (const Image& l : lv.layers)
    if (l.rows() != inst.height() || l.cols() != inst.width())
      throw ShapeError(std::string(where) + ": layer size " +
                       std::to_string(l.rows()) + "x" + std::to_string(l.cols()) +
                       " does not match instance " + std::to_string(inst.height()) +
                       "x" + std::to_string(inst.width()));
}

}  // namespace

void validate_instance(const ProblemInstance& inst) {
  if (inst.mixtures.empty()) throw ArgumentError("instance: needs at least one mixture");
  const Eigen::Index h = inst.height(), w = inst.width();
  if (h < 1 || w < 1) throw ArgumentError("instance: empty mixture image");
  for (std::size_t i = 0; i < inst.mixtures.size(); ++i) {
    const Image& I = inst.mixtures[i];
    if (I.rows() != h || I.cols() != w)
      throw ShapeError("instance: mixture " + std::to_string(i + 1) +
                       " has size " + std::to_string(I.rows()) + "x" +
                       std::to_string(I.cols()) + ", expected " +
                       std::to_string(h) + "x" + std::to_string(w));
    if (!I.isFinite().all() || (I < 0.0).any() || (I > 1.0).any())
      throw ArgumentError("instance: mixture " + std::to_string(i + 1) +
                          " has intensities outside [0,1]");
  }
  if (inst.coeffs.size() != inst.mixtures.size())
    throw ShapeError("instance: " + std::to_string(inst.coeffs.size()) +
                     " coefficients for " + std::to_string(inst.mixtures.size()) +
                     " mixtures");
  for (double a : inst.coeffs)
    if (!std::isfinite(a)) throw ArgumentError("instance: non-finite coefficient");
  if (inst.targets.size() != inst.layer_count())
    throw ShapeError("instance: " + std::to_string(inst.targets.size()) +
                     " gradient targets for " + std::to_string(inst.layer_count()) +
                     " layers");
  for (std::size_t i = 0; i < inst.targets.size(); ++i)
    if (!inst.targets[i].shape_consistent() || inst.targets[i].height() != h ||
        inst.targets[i].width() != w)
      throw ShapeError("instance: gradient target " + std::to_string(i + 1) +
                       " inconsistent with " + std::to_string(h) + "x" +
                       std::to_string(w));
  if (!(inst.lambda >= 0.0))
    throw ArgumentError("instance: lambda must be nonnegative");
}

std::vector<Image> apply_mixing(const LayerVector& layers,
                                const std::vector<double>& coeffs) {
  if (layers.size() != coeffs.size() + 1)
    throw ShapeError("apply_mixing: " + std::to_string(layers.size()) +
                     " layers for " + std::to_string(coeffs.size()) +
                     " coefficients");
  std::vector<Image> predicted;
  predicted.reserve(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    predicted.push_back(coeffs[i] * layers.layers[0] + layers.layers[i + 1]);
  return predicted;
}

LayerVector grad_f(const LayerVector& lv, const ProblemInstance& inst) {
  check_shapes(lv, inst, "grad_f");
  const std::size_t m = inst.mixture_count();
  LayerVector g = LayerVector::zero(m + 1, inst.height(), inst.width());
  for (std::size_t i = 0; i < m; ++i) {
    Image r = inst.coeffs[i] * lv.layers[0] + lv.layers[i + 1] - inst.mixtures[i];
    g.layers[0] += inst.coeffs[i] * r;
    g.layers[i + 1] = std::move(r);
  }
  return g;
}

double lipschitz_f(const std::vector<double>& coeffs) {
  if (coeffs.empty()) throw ArgumentError("lipschitz_f: empty coefficient list");
  double s = 0.0;
  for (double a : coeffs) s += a * a;
  return s + 1.0;
}

ObjectiveParts objective_F(const LayerVector& lv, const ProblemInstance& inst) {
  check_shapes(lv, inst, "objective_F");
  ObjectiveParts parts;
  for (std::size_t i = 0; i < inst.mixture_count(); ++i) {
    Image r = inst.coeffs[i] * lv.layers[0] + lv.layers[i + 1] - inst.mixtures[i];
    parts.smooth += 0.5 * r.square().sum();
  }
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const DualPair g = grad_forward(lv.layers[i]);
    parts.tv += (g.p - inst.targets[i].p).abs().sum() +
                (g.q - inst.targets[i].q).abs().sum();
  }
  parts.tv *= inst.lambda;
  parts.total = parts.smooth + parts.tv;
  return parts;
}

}  // namespace layersep
