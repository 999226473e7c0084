#include "layersep/fgp.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace layersep {

namespace {

void check_inputs(const DualPair& pq, const Image& d, const DualPair& E,
                  const char* where) {
  check_pair(pq, where);
  if (pq.height() != d.rows() || pq.width() != d.cols())
    throw ShapeError(std::string(where) + ": pair is for " +
                     std::to_string(pq.height()) + "x" + std::to_string(pq.width()) +
                     " but d is " + std::to_string(d.rows()) + "x" +
                     std::to_string(d.cols()));
  if (!pq.same_shape(E))
    throw ShapeError(std::string(where) + ": gradient target shape mismatch");
}

double primal_objective(const Image& L, const Image& d, double beta,
                        const DualPair& E) {
  const DualPair g = grad_forward(L);
  return 0.5 * (L - d).square().sum() +
         beta * ((g.p - E.p).abs().sum() + (g.q - E.q).abs().sum());
}

}  // namespace

double dual_objective(const DualPair& pq, const Image& d, double beta,
                      const DualPair& E) {
  check_inputs(pq, d, E, "dual_objective");
  const Image v = d - beta * div_adjoint(pq);
  return 0.5 * (squared_norm(v) - squared_norm(residual_from_box(v))) +
         beta * dot(pq, E);
}

DualPair grad_H(const DualPair& pq, const Image& d, double beta,
                const DualPair& E) {
  check_inputs(pq, d, E, "grad_H");
  const Image clamped = project_box(d - beta * div_adjoint(pq), 0.0, 1.0);
  DualPair g = grad_forward(clamped);
  g.p = beta * (E.p - g.p);
  g.q = beta * (E.q - g.q);
  return g;
}

Image primal_from_dual(const DualPair& pq, const Image& d, double beta) {
  check_pair(pq, "primal_from_dual");
  if (pq.height() != d.rows() || pq.width() != d.cols())
    throw ShapeError("primal_from_dual: pair/image shape mismatch");
  return project_box(d - beta * div_adjoint(pq), 0.0, 1.0);
}

double duality_gap(const Image& L, const DualPair& pq, const Image& d,
                   double beta, const DualPair& E) {
  check_inputs(pq, d, E, "duality_gap");
  if (L.rows() != d.rows() || L.cols() != d.cols())
    throw ShapeError("duality_gap: L/d shape mismatch");
  constexpr double feas_eps = 1e-12;
  if ((L < -feas_eps).any() || (L > 1.0 + feas_eps).any())
    throw ArgumentError("duality_gap: L is not inside [0,1]");
  if ((pq.p.abs() > 1.0 + feas_eps).any() || (pq.q.abs() > 1.0 + feas_eps).any())
    throw ArgumentError("duality_gap: dual pair is not inside the unit box");
  // Dual value is 1/2||d||^2 - H(p,q).
  return primal_objective(L, d, beta, E) + dual_objective(pq, d, beta, E) -
         0.5 * squared_norm(d);
}

ProxResult fgp_solve(const Image& d, const DualPair& E, const ProxParams& params) {
  const Eigen::Index h = d.rows(), w = d.cols();
  if (!E.shape_consistent() || E.height() != h || E.width() != w)
    throw ShapeError("fgp_solve: gradient target inconsistent with image");
  const double beta = params.beta;
  if (!(beta >= 0.0)) throw ArgumentError("fgp_solve: beta must be nonnegative");

  ProxResult res;
  // No TV coupling at all: the prox is a plain clamp and there is no dual
  // step size (1/(8 beta^2) degenerates).
  if (beta == 0.0 || (h == 1 && w == 1)) {
    res.solution = project_box(d, 0.0, 1.0);
    res.dual = DualPair::zero(h, w);
    res.iters_used = 0;
    res.duality_gap = duality_gap(res.solution, res.dual, d, beta, E);
    return res;
  }

  DualPair cur = params.warm_start ? project_dual_ball(*params.warm_start)
                                   : DualPair::zero(h, w);
  if (!cur.matches(d))
    throw ShapeError("fgp_solve: warm start shape mismatch");
  DualPair mom = cur;  // extrapolated point; kept unprojected by the momentum step
  double t = 1.0;
  const double step = 1.0 / (8.0 * beta * beta);

  Image primal_prev = primal_from_dual(cur, d, beta);
  Image primal = primal_prev;
  int used = 0;
  for (int k = 1; k <= params.max_iters; ++k) {
    used = k;
    const DualPair g = grad_H(mom, d, beta, E);
    DualPair next;
    next.p = (mom.p - step * g.p).max(-1.0).min(1.0);
    next.q = (mom.q - step * g.q).max(-1.0).min(1.0);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double coeff = (t - 1.0) / t_next;
    mom.p = next.p + coeff * (next.p - cur.p);
    mom.q = next.q + coeff * (next.q - cur.q);
    cur = std::move(next);
    t = t_next;

    primal = primal_from_dual(cur, d, beta);
    const double change = (primal - primal_prev).abs().maxCoeff();
    primal_prev = primal;
    if (change <= params.tol) break;
  }

  res.solution = std::move(primal);
  res.dual = std::move(cur);
  res.iters_used = used;
  res.duality_gap = duality_gap(res.solution, res.dual, d, beta, E);
  return res;
}

}  // namespace layersep
