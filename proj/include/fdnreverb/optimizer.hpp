// Fits (alpha, beta_1..beta_n) to target metrics by gradient descent with
// step-halving backtracking on the model loss, under the open-box
// constraints 0 < alpha, beta_i < 1 via logistic reparameterization.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fdnreverb/fdn_model.hpp"
#include "fdnreverb/types.hpp"

namespace fdnreverb {

struct FitConfig {
  int max_iterations = 20000;
  double step_size = 1e-2;   // initial backtracking trial step
  double tolerance = 1e-12;  // loss value counted as converged
  LossWeights weights;
  int restarts = 8;
  std::uint64_t seed = 0;
  TimeBase mode = TimeBase::discrete;
  int sample_rate_hz = 48000;
  MetricConfig metric_config;
  bool parallel = true;  // run restarts on multiple threads
};

struct TracePoint {
  int iteration = 0;
  double loss = 0.0;
  Residuals residuals;
};

struct FitReport {
  double final_loss = 0.0;
  Residuals residuals;
  int iterations_used = 0;
  AcousticMetrics achieved_metrics;
  bool converged = false;
  int best_restart = 0;
  /// Accepted iterates of the winning restart (iteration 0 = start point).
  std::vector<TracePoint> trace;
};

/// Logistic map onto (0,1) and its inverse. The inverse throws on 0 and 1.
double sigmoid(double x);
double logit(double p);

/// Unconstrained <-> constrained parameter vectors: element 0 is alpha,
/// the rest are the loop gains.
std::vector<double> unconstrained_from_params(const FdnParams& p);
FdnParams params_from_unconstrained(const std::vector<double>& x,
                                    const std::vector<int>& kappas,
                                    int sample_rate_hz);

/// Start point for a restart. Restart 0 is the deterministic heuristic:
/// alpha decays to the decay target over t30 and the gains are uniform
/// (0.05 by default; fit() substitutes a uniform gain whose tail energy
/// matches the energy the targets imply). Restarts >= 1 jitter the
/// heuristic in unconstrained space with unit standard deviation,
/// reproducibly per (seed, restart).
std::vector<double> initialize(std::uint64_t seed, int restart_index,
                               const TargetMetrics& targets, int n_loops,
                               double uniform_gain = 0.05);

/// Fits the loop parameters to the targets. Returns the best restart; if
/// none reaches the tolerance the result is best-effort with
/// converged == false. achieved_metrics close the loop: they are measured
/// from the synthesized impulse response of the fitted network plus the
/// given early reflections. Deterministic for a fixed config (seed
/// included), whether restarts run in parallel or not.
std::pair<FdnParams, FitReport> fit(const TargetMetrics& targets,
                                    const EarlyReflections& early,
                                    const std::vector<int>& kappas,
                                    const FitConfig& config);

}  // namespace fdnreverb
