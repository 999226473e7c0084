#pragma once

// Grid types and the discrete difference operators everything else builds on.
//
// Conventions (fixed throughout the project):
//  - An image is an h x w array, h >= 1, w >= 1, row-major.
//  - grad_forward maps an image to the pair of forward differences
//      p(i,j) = L(i+1,j) - L(i,j)   shape (h-1) x w
//      q(i,j) = L(i,j+1) - L(i,j)   shape h x (w-1)
//  - div_adjoint is the exact adjoint of grad_forward:
//      out(i,j) = p(i-1,j) - p(i,j) + q(i,j-1) - q(i,j)
//    with out-of-range p/q entries taken as zero. The sign on the last q
//    term is forced by <div_adjoint(pq), L> == <pq, grad_forward(L)>; the
//    adjointness property test pins it.
//  - h == 1 or w == 1 leaves the corresponding difference block empty
//    (0 x w or h x 0); every operator stays total on such inputs.

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "layersep/errors.hpp"

namespace layersep {

using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A (p,q) pair of difference fields. Used both for dual variables (feasible
// when every entry lies in [-1,1]) and for gradient targets.
struct DualPair {
  Image p;  // (h-1) x w
  Image q;  // h x (w-1)

  static DualPair zero(Eigen::Index h, Eigen::Index w) {
    return DualPair{Image::Zero(h - 1, w), Image::Zero(h, w - 1)};
  }

  Eigen::Index height() const { return q.rows(); }
  Eigen::Index width() const { return p.cols(); }

  bool shape_consistent() const {
    return p.rows() + 1 == q.rows() && q.cols() + 1 == p.cols();
  }
  bool same_shape(const DualPair& o) const {
    return p.rows() == o.p.rows() && p.cols() == o.p.cols() &&
           q.rows() == o.q.rows() && q.cols() == o.q.cols();
  }
  bool matches(const Image& img) const {
    return shape_consistent() && height() == img.rows() && width() == img.cols();
  }
};

// Ordered stack of m+1 equally sized layers.
struct LayerVector {
  std::vector<Image> layers;

  static LayerVector zero(std::size_t count, Eigen::Index h, Eigen::Index w) {
    LayerVector lv;
    lv.layers.assign(count, Image::Zero(h, w));
    return lv;
  }

  std::size_t size() const { return layers.size(); }

  bool same_shape(const LayerVector& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].rows() != o.layers[i].rows() ||
          layers[i].cols() != o.layers[i].cols())
        return false;
    }
    return true;
  }
};

inline void check_pair(const DualPair& pq, const char* where) {
  if (!pq.shape_consistent())
    throw ShapeError(std::string(where) + ": p is " + std::to_string(pq.p.rows()) +
                     "x" + std::to_string(pq.p.cols()) + " but q is " +
                     std::to_string(pq.q.rows()) + "x" + std::to_string(pq.q.cols()));
}

inline DualPair grad_forward(const Image& L) {
  const Eigen::Index h = L.rows(), w = L.cols();
  DualPair pq;
  pq.p = L.bottomRows(h - 1) - L.topRows(h - 1);
  pq.q = L.rightCols(w - 1) - L.leftCols(w - 1);
  return pq;
}

inline Image div_adjoint(const DualPair& pq) {
  check_pair(pq, "div_adjoint");
  const Eigen::Index h = pq.height(), w = pq.width();
  Image out = Image::Zero(h, w);
  out.topRows(h - 1) -= pq.p;
  out.bottomRows(h - 1) += pq.p;
  out.leftCols(w - 1) -= pq.q;
  out.rightCols(w - 1) += pq.q;
  return out;
}

inline Image project_box(const Image& L, double lo, double hi) {
  if (lo > hi)
    throw ArgumentError("project_box: lo " + std::to_string(lo) + " > hi " +
                        std::to_string(hi));
  return L.max(lo).min(hi);
}

inline DualPair project_dual_ball(const DualPair& pq) {
  return DualPair{pq.p.max(-1.0).min(1.0), pq.q.max(-1.0).min(1.0)};
}

inline Image residual_from_box(const Image& L) {
  return L - project_box(L, 0.0, 1.0);
}

inline double dot(const Image& a, const Image& b) { return (a * b).sum(); }

inline double dot(const DualPair& a, const DualPair& b) {
  return (a.p * b.p).sum() + (a.q * b.q).sum();
}

inline double squared_norm(const Image& a) { return a.square().sum(); }

inline double squared_norm(const DualPair& a) {
  return a.p.square().sum() + a.q.square().sum();
}

inline double squared_norm(const LayerVector& lv) {
  double s = 0.0;
  for (const Image& l : lv.layers) s += l.square().sum();
  return s;
}

}  // namespace layersep
