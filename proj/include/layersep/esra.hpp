#pragma once

// Accelerated outer loop: momentum extrapolation, one gradient step on the
// data term, then a block split into m+1 independent constrained-TV prox
// subproblems dispatched across worker threads. Layer assignment to workers
// is static, so results are identical for any worker count.

#include <functional>
#include <optional>
#include <vector>

#include "layersep/fgp.hpp"
#include "layersep/mixing.hpp"

namespace layersep {

struct EsraParams {
  int total_iters = 100;
  // Upper bound on the Lipschitz constant of the data-term gradient;
  // <= 0 selects the default 2 * lipschitz_f(coeffs).
  double step_constant = 0.0;
  ProxParams fgp;           // beta is derived per solve as lambda / step constant
  int parallel_workers = 0; // 0: one worker per subproblem, capped by hardware
  bool warm_start_fgp = false;  // reuse each layer's dual pair across outer iterations
  std::optional<LayerVector> initial;  // test hook; default is the zero stack
  std::function<void(int, const LayerVector&)> on_iterate;
};

struct TraceRow {
  int iter = 0;
  double total = 0.0;
  double smooth = 0.0;
  double tv = 0.0;
  double elapsed_ms = 0.0;
  std::vector<int> fgp_iters;  // inner iterations, one entry per layer
};

struct SolveTrace {
  std::vector<TraceRow> rows;
};

struct EsraResult {
  LayerVector layers;
  SolveTrace trace;
};

// t_new = (1 + sqrt(1 + 4 t_prev^2)) / 2; grows at least like (k+1)/2.
double momentum_t(double t_prev);

// lv_k + ((t_km1 - 1) / t_k) * (lv_k - lv_km1)
LayerVector extrapolate(const LayerVector& lv_k, const LayerVector& lv_km1,
                        double t_km1, double t_k);

// Per-layer prox targets d_i = Y_i - (1/L_s) * grad_f(Y)_i.
std::vector<Image> split_prox_targets(const LayerVector& Y,
                                      const ProblemInstance& inst, double L_s);

// Solve the m+1 TV subproblems concurrently; warm_starts, when given, must
// hold one pair per layer.
std::vector<ProxResult> pactv_prox_detailed(
    const std::vector<Image>& targets, const ProblemInstance& inst, double beta,
    const ProxParams& fgp, int workers = 0,
    const std::vector<DualPair>* warm_starts = nullptr);

LayerVector pactv_prox(const std::vector<Image>& targets,
                       const ProblemInstance& inst, double beta,
                       const ProxParams& fgp, int workers = 0);

EsraResult esra_solve(const ProblemInstance& inst, const EsraParams& params);

}  // namespace layersep
