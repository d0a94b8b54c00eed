// Closed-form energy/moment integrals of the reverberant-tail network,
// the constraint residuals against target metrics, and the fit loss with
// its exact gradient.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "fdnreverb/types.hpp"

namespace fdnreverb {

/// Time base for the tail integrals. `discrete` sums the sampled envelope
/// exactly (matches the streaming renderer); `continuous` evaluates the
/// piecewise integrals of the continuous-time envelope.
enum class TimeBase { discrete, continuous };

inline constexpr double kInfiniteTime =
    std::numeric_limits<double>::infinity();

/// n strictly increasing integer delays, logarithmically spaced from
/// 1 sample to floor(t_max_ms * fs / 1000). Duplicates after rounding are
/// bumped to the next free integer. n == 1 places the single delay at the
/// upper bound.
std::vector<int> log_spaced_delays(int n, int sample_rate_hz,
                                   double t_max_ms = 50.0);

/// Tail amplitude envelope at integer time t:
///   J(t) = sum_i beta_i * alpha^(t - kappa_i) for kappa_i <= t.
double analytic_tail(const FdnParams& p, std::int64_t t);

/// lambda_i = (sum_{j<=i} beta_j * alpha^-kappa_j)^2, non-decreasing.
/// Throws numeric-range when alpha^-kappa leaves the double range.
std::vector<double> lambda_coefficients(const FdnParams& p);

/// sum/integral of J(t)^2 over [0, upto). upto may be kInfiniteTime and
/// must not be smaller than the largest loop delay.
double tail_energy(const FdnParams& p, double upto, TimeBase mode);

/// sum/integral of t * J(t)^2 over [0, upto).
double tail_moment(const FdnParams& p, double upto, TimeBase mode);

/// Cleared-denominator constraint residuals:
///   l1: early+tail energy in the 50 ms window vs 10^clarity * total
///   l2: same for the 80 ms window vs definition * total
///   l3: first moment vs center time * total
///   l4: tail amplitude at round(t30) vs decay_target_amplitude * i0
///
/// With only the precomputed early constants, the energies are additive
/// (the early-by-tail cross products of the squared sum are neglected).
/// Passing the tap list as well reinstates those cross products exactly:
/// the residuals are then zero precisely when the synthesized full
/// response meets all four targets.
struct Residuals {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
};

Residuals residuals(const FdnParams& p, const EarlyConstants& ec,
                    const TargetMetrics& tm, const WindowSamples& win,
                    TimeBase mode, const EarlyReflections* early = nullptr);

struct LossWeights {
  double w1 = 1.0;
  double w2 = 1.0;
  double w3 = 1.0;
  double w4 = 1.0;
};

/// Per-residual normalization applied before squaring, so that residuals
/// of very different magnitudes contribute comparably. Unit scales leave
/// the raw residuals untouched.
struct ResidualScales {
  double s1 = 1.0;
  double s2 = 1.0;
  double s3 = 1.0;
  double s4 = 1.0;
};

/// Scales that bring each residual to O(1) near a starting point:
/// the total-energy denominator for l1/l2, the center-time-weighted
/// denominator for l3, and the decay target amplitude for l4.
ResidualScales make_residual_scales(const EarlyConstants& ec,
                                    const TargetMetrics& tm,
                                    double tail_energy_at_init);

/// Weighted sum of squared normalized residuals; zero iff all residuals
/// are zero.
double loss(const FdnParams& p, const EarlyConstants& ec,
            const TargetMetrics& tm, const WindowSamples& win,
            const LossWeights& weights, TimeBase mode,
            const ResidualScales& scales = {},
            const EarlyReflections* early = nullptr);

struct LossGradient {
  double d_alpha = 0.0;
  std::vector<double> d_betas;
};

/// Residual values together with their exact partial derivatives:
/// d_alpha[k] = d l_k / d alpha, d_betas[i][k] = d l_k / d beta_i.
struct ResidualJacobian {
  Residuals value;
  std::array<double, 4> d_alpha{};
  std::vector<std::array<double, 4>> d_betas;
};

ResidualJacobian residual_jacobian(const FdnParams& p,
                                   const EarlyConstants& ec,
                                   const TargetMetrics& tm,
                                   const WindowSamples& win, TimeBase mode,
                                   const EarlyReflections* early = nullptr);

/// Exact partial derivatives of loss() with respect to alpha and each
/// beta, computed by forward-mode differentiation of the same closed
/// forms (not finite differences).
LossGradient loss_gradient(const FdnParams& p, const EarlyConstants& ec,
                           const TargetMetrics& tm, const WindowSamples& win,
                           const LossWeights& weights, TimeBase mode,
                           const ResidualScales& scales = {},
                           const EarlyReflections* early = nullptr);

}  // namespace fdnreverb
