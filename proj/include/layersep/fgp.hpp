#pragma once

// One constrained-TV proximal subproblem
//
//     min_{0<=L<=1}  1/2 ||L - d||^2 + beta * sum |grad_forward(L) - E|
//
// solved through its dual: minimize over pairs with entries in [-1,1]
//
//     H(p,q) = 1/2 (||d - beta*Lpq||^2 - ||residual_from_box(d - beta*Lpq)||^2)
//              + beta * (<p,E.p> + <q,E.q>),      Lpq = div_adjoint(p,q),
//
// by fast gradient projection with the constant step 1/(8 beta^2); the primal
// solution is recovered as project_box(d - beta*div_adjoint(p,q), 0, 1).

#include <optional>

#include "layersep/grid.hpp"

namespace layersep {

struct ProxParams {
  double beta = 0.0;
  int max_iters = 50;
  double tol = 1e-4;  // stop when the primal iterate moves less than this in max-norm
  std::optional<DualPair> warm_start;  // projected onto the dual box before use
};

struct ProxResult {
  Image solution;    // inside [0,1]
  DualPair dual;     // inside the dual box
  int iters_used = 0;
  double duality_gap = 0.0;
};

double dual_objective(const DualPair& pq, const Image& d, double beta,
                      const DualPair& E);

DualPair grad_H(const DualPair& pq, const Image& d, double beta,
                const DualPair& E);

Image primal_from_dual(const DualPair& pq, const Image& d, double beta);

// Primal objective minus the dual value implied by the min-max form; zero iff
// both points are optimal. Requires L in [0,1] and pq in the dual box.
double duality_gap(const Image& L, const DualPair& pq, const Image& d,
                   double beta, const DualPair& E);

ProxResult fgp_solve(const Image& d, const DualPair& E, const ProxParams& params);

}  // namespace layersep
