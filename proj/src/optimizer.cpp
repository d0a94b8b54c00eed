#include "fdnreverb/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fdnreverb/analysis.hpp"
#include "fdnreverb/errors.hpp"
#include "fdnreverb/renderer.hpp"

namespace fdnreverb {

namespace {

// Deterministic normal deviates independent of the standard library's
// distribution implementations, so traces reproduce across toolchains.
struct NormalRng {
  explicit NormalRng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {  // splitmix64
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_unit() {  // (0,1]
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double next_normal() {  // Box-Muller
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t state;
};

struct RestartResult {
  std::vector<double> x;
  double loss = std::numeric_limits<double>::infinity();
  Residuals residuals;
  int iterations = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

struct Objective {
  const EarlyConstants& ec;
  const EarlyReflections& early;
  const TargetMetrics& tm;
  const WindowSamples& win;
  const LossWeights& weights;
  const ResidualScales& scales;
  TimeBase mode;
  const std::vector<int>& kappas;
  int sample_rate_hz;

  double eval(const std::vector<double>& x, Residuals* res) const {
    const FdnParams p = params_from_unconstrained(x, kappas, sample_rate_hz);
    const Residuals r = residuals(p, ec, tm, win, mode, &early);
    if (res != nullptr) *res = r;
    const double r1 = r.l1 / scales.s1;
    const double r2 = r.l2 / scales.s2;
    const double r3 = r.l3 / scales.s3;
    const double r4 = r.l4 / scales.s4;
    return weights.w1 * r1 * r1 + weights.w2 * r2 * r2 + weights.w3 * r3 * r3 +
           weights.w4 * r4 * r4;
  }

  // Normalized residual vector rho (loss = |rho|^2) and its Jacobian in
  // unconstrained space (logistic chain rule and weight/scale folding
  // applied): a[k][i] = d rho_k / d x_i.
  void scaled_system(const std::vector<double>& x, std::array<double, 4>* rho,
                     std::array<std::vector<double>, 4>* a) const {
    const FdnParams p = params_from_unconstrained(x, kappas, sample_rate_hz);
    const ResidualJacobian jac =
        residual_jacobian(p, ec, tm, win, mode, &early);
    const double w[4] = {weights.w1, weights.w2, weights.w3, weights.w4};
    const double s[4] = {scales.s1, scales.s2, scales.s3, scales.s4};
    const double r[4] = {jac.value.l1, jac.value.l2, jac.value.l3,
                         jac.value.l4};
    for (int k = 0; k < 4; ++k) {
      (*rho)[static_cast<std::size_t>(k)] = std::sqrt(w[k]) * r[k] / s[k];
      (*a)[static_cast<std::size_t>(k)].assign(x.size(), 0.0);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double constrained = i == 0 ? p.alpha : p.betas[i - 1];
      const double chain = constrained * (1.0 - constrained);
      const std::array<double, 4>& dr =
          i == 0 ? jac.d_alpha : jac.d_betas[i - 1];
      for (int k = 0; k < 4; ++k)
        (*a)[static_cast<std::size_t>(k)][i] =
            std::sqrt(w[k]) * dr[static_cast<std::size_t>(k)] * chain / s[k];
    }
  }
};

// Solves the 4x4 system M y = rho by Gaussian elimination with partial
// pivoting. Returns false when M is numerically singular.
bool solve4(std::array<std::array<double, 4>, 4> m, std::array<double, 4> rho,
            std::array<double, 4>* y) {
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 4; ++row)
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    if (std::abs(m[pivot][col]) <= 0.0) return false;
    std::swap(m[col], m[pivot]);
    std::swap(rho[col], rho[pivot]);
    for (int row = col + 1; row < 4; ++row) {
      const double f = m[row][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
      rho[row] -= f * rho[col];
    }
  }
  for (int row = 3; row >= 0; --row) {
    double acc = rho[row];
    for (int k = row + 1; k < 4; ++k) acc -= m[row][k] * (*y)[k];
    (*y)[row] = acc / m[row][row];
  }
  return true;
}

// One restart of damped least-squares descent on the normalized loss
// |rho|^2. Each iteration solves the 4x4 dual system (the residual count
// is fixed) for the step
//   dx = D^-1 A^T (A D^-1 A^T + mu I)^-1 rho,   D = diag(A^T A) + delta,
// whose inner product with the gradient 2 A^T rho is non-negative for any
// damping mu >= 0, so it is always a descent direction. A step is taken
// only if it strictly decreases the loss; otherwise mu escalates, bending
// the step toward a short gradient step until one is accepted. The
// recorded trace is therefore monotone by construction.
RestartResult run_restart(const Objective& obj, std::vector<double> x,
                          const FitConfig& cfg) {
  RestartResult out;
  double cur = obj.eval(x, &out.residuals);
  out.trace.push_back({0, cur, out.residuals});
  double checkpoint = cur;
  const std::size_t n = x.size();
  std::array<double, 4> rho;
  std::array<std::vector<double>, 4> a;
  std::vector<double> dir(n), xn(n), dinv(n);
  // step_size maps onto the initial damping: a fraction s of the undamped
  // least-squares step corresponds to mu ~ (1-s)/s per unit of curvature.
  const double s0 = std::clamp(cfg.step_size, 1e-9, 1.0);
  double mu_factor = (1.0 - s0) / s0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    obj.scaled_system(x, &rho, &a);
    bool finite = true;
    for (int k = 0; k < 4; ++k) {
      finite = finite && std::isfinite(rho[static_cast<std::size_t>(k)]);
      for (double v : a[static_cast<std::size_t>(k)])
        finite = finite && std::isfinite(v);
    }
    if (!finite) break;

    double d_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (int k = 0; k < 4; ++k)
        d += a[static_cast<std::size_t>(k)][i] *
             a[static_cast<std::size_t>(k)][i];
      dinv[i] = d;
      d_max = std::max(d_max, d);
    }
    if (d_max <= 0.0) break;  // gradient is exactly zero
    const double delta = 1e-12 * d_max;
    for (std::size_t i = 0; i < n; ++i) dinv[i] = 1.0 / (dinv[i] + delta);

    std::array<std::array<double, 4>, 4> m0{};
    for (int j = 0; j < 4; ++j)
      for (int k = j; k < 4; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          acc += a[static_cast<std::size_t>(j)][i] * dinv[i] *
                 a[static_cast<std::size_t>(k)][i];
        m0[j][k] = acc;
        m0[k][j] = acc;
      }
    const double m_scale =
        0.25 * (m0[0][0] + m0[1][1] + m0[2][2] + m0[3][3]);
    if (!(m_scale > 0.0)) break;

    bool accepted = false;
    double next = cur;
    Residuals next_res;
    for (int attempt = 0; attempt <= 30; ++attempt) {
      const double mu = std::max(mu_factor, 1e-14) * m_scale;
      std::array<std::array<double, 4>, 4> m = m0;
      for (int j = 0; j < 4; ++j) m[j][j] += mu;
      std::array<double, 4> y;
      if (!solve4(m, rho, &y)) break;
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
          acc += a[static_cast<std::size_t>(k)][i] *
                 y[static_cast<std::size_t>(k)];
        dir[i] = dinv[i] * acc;
      }
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] - dir[i];
      Residuals r;
      const double candidate = obj.eval(xn, &r);
      if (std::isfinite(candidate) && candidate < cur) {
        accepted = true;
        next = candidate;
        next_res = r;
        mu_factor = std::max(mu_factor * 0.25, 1e-14);
        break;
      }
      mu_factor = std::max(mu_factor, 1e-14) * 8.0;
      if (!std::isfinite(mu_factor)) break;
    }
    if (!accepted) break;  // no damping level makes progress

    x.swap(xn);
    cur = next;
    out.residuals = next_res;
    out.iterations = it;
    out.trace.push_back({it, cur, next_res});

    if (cur <= cfg.tolerance) {
      out.converged = true;
      break;
    }
    if (it % 100 == 0) {
      if (checkpoint - cur <= 1e-14 * std::max(checkpoint, 1e-300)) break;
      checkpoint = cur;
    }
  }
  out.x = std::move(x);
  out.loss = cur;
  return out;
}

// Measures the metrics of the synthesized response, growing the render
// length until the decay curve actually crosses the T30 level.
AcousticMetrics closed_loop_metrics(const FdnParams& fitted,
                                    const EarlyReflections& early,
                                    const FitConfig& cfg,
                                    const TargetMetrics& targets) {
  const WindowSamples win =
      windows_in_samples(cfg.metric_config, cfg.sample_rate_hz);
  std::int64_t length = std::max<std::int64_t>(
      {static_cast<std::int64_t>(2.0 * targets.t30_samples) +
           (fitted.kappas.empty() ? 0 : fitted.kappas.back()),
       2 * win.n80, 4800});
  for (int attempt = 0;; ++attempt) {
    const SampledRir ir = impulse_response({fitted, early}, length);
    try {
      return compute_metrics(ir, cfg.metric_config);
    } catch (const FdnError& e) {
      if (e.kind() != ErrorKind::not_measurable || attempt >= 6) throw;
      length *= 2;
    }
  }
}

}  // namespace

double sigmoid(double x) {
  // Split to avoid overflow in exp for large |x|; clamp so saturated
  // values still sit strictly inside (0,1) and downstream validation of
  // the open-box constraints cannot fail.
  double s;
  if (x >= 0.0) {
    const double e = std::exp(-x);
    s = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  if (s >= 1.0) return std::nextafter(1.0, 0.0);
  if (s <= 0.0) return std::numeric_limits<double>::denorm_min();
  return s;
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw_error(ErrorKind::config,
                "logit is defined on the open interval (0,1), got " +
                    std::to_string(p));
  return std::log(p / (1.0 - p));
}

std::vector<double> unconstrained_from_params(const FdnParams& p) {
  std::vector<double> x(p.betas.size() + 1);
  x[0] = logit(p.alpha);
  for (std::size_t i = 0; i < p.betas.size(); ++i) x[i + 1] = logit(p.betas[i]);
  return x;
}

FdnParams params_from_unconstrained(const std::vector<double>& x,
                                    const std::vector<int>& kappas,
                                    int sample_rate_hz) {
  if (x.size() != kappas.size() + 1)
    throw_error(ErrorKind::config,
                "unconstrained vector must hold alpha plus one gain per loop");
  FdnParams p;
  p.sample_rate_hz = sample_rate_hz;
  p.alpha = sigmoid(x[0]);
  p.betas.resize(kappas.size());
  for (std::size_t i = 0; i < kappas.size(); ++i) p.betas[i] = sigmoid(x[i + 1]);
  p.kappas = kappas;
  return p;
}

std::vector<double> initialize(std::uint64_t seed, int restart_index,
                               const TargetMetrics& targets, int n_loops,
                               double uniform_gain) {
  if (n_loops < 1) throw_error(ErrorKind::config, "loop count must be >= 1");
  if (restart_index < 0)
    throw_error(ErrorKind::config, "restart index must be non-negative");
  // Heuristic: alpha alone decays to the decay target over t30.
  const double decay =
      targets.decay_target_amplitude > 0.0 ? targets.decay_target_amplitude
                                           : 1e-3;
  double alpha0 = std::pow(decay, 1.0 / std::max(targets.t30_samples, 1.0));
  alpha0 = std::clamp(alpha0, 1e-6, 1.0 - 1e-9);
  std::vector<double> x(static_cast<std::size_t>(n_loops) + 1);
  x[0] = logit(alpha0);
  const double gain = std::clamp(uniform_gain, 1e-6, 1.0 - 1e-6);
  for (int i = 0; i < n_loops; ++i)
    x[static_cast<std::size_t>(i) + 1] = logit(gain);
  if (restart_index > 0) {
    NormalRng rng(seed * 0x9e3779b97f4a7c15ULL +
                  static_cast<std::uint64_t>(restart_index));
    for (double& v : x) v += rng.next_normal();
  }
  return x;
}


std::pair<FdnParams, FitReport> fit(const TargetMetrics& targets,
                                    const EarlyReflections& early,
                                    const std::vector<int>& kappas,
                                    const FitConfig& config) {
  if (kappas.empty())
    throw_error(ErrorKind::config, "at least one loop delay is required");
  if (config.restarts < 1)
    throw_error(ErrorKind::config, "restart count must be >= 1");
  if (!(config.step_size > 0.0) || !(config.tolerance > 0.0))
    throw_error(ErrorKind::config, "step size and tolerance must be positive");
  if (!(targets.definition > 0.0 && targets.definition <= 1.0))
    throw_error(ErrorKind::config, "target definition must lie in (0, 1]");
  if (!(targets.t30_samples > static_cast<double>(kappas.back())))
    throw_error(ErrorKind::config,
                "target t30 must exceed the largest loop delay");

  const WindowSamples win =
      windows_in_samples(config.metric_config, config.sample_rate_hz);
  const EarlyConstants ec =
      early_constants(early, config.sample_rate_hz, config.metric_config);
  const int n_loops = static_cast<int>(kappas.size());

  // Normalization is anchored at the deterministic heuristic start so all
  // restarts optimize the same objective.
  const FdnParams p0 = params_from_unconstrained(
      initialize(config.seed, 0, targets, n_loops), kappas,
      config.sample_rate_hz);
  const ResidualScales scales = make_residual_scales(
      ec, targets, tail_energy(p0, kInfiniteTime, config.mode));

  const Objective obj{ec,           early,  targets,     win,
                      config.weights, scales, config.mode,
                      kappas,         config.sample_rate_hz};

  std::vector<RestartResult> results(
      static_cast<std::size_t>(config.restarts));
  std::exception_ptr failure;  // exceptions must not cross the parallel region
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (config.parallel)
#endif
  for (int r = 0; r < config.restarts; ++r) {
    try {
      results[static_cast<std::size_t>(r)] = run_restart(
          obj, initialize(config.seed, r, targets, n_loops), config);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  int best = 0;
  for (int r = 1; r < config.restarts; ++r)
    if (results[static_cast<std::size_t>(r)].loss <
        results[static_cast<std::size_t>(best)].loss)
      best = r;
  RestartResult& win_res = results[static_cast<std::size_t>(best)];

  FdnParams fitted = params_from_unconstrained(win_res.x, kappas,
                                               config.sample_rate_hz);
  FitReport report;
  report.final_loss = win_res.loss;
  report.residuals = win_res.residuals;
  report.iterations_used = win_res.iterations;
  report.converged = win_res.converged;
  report.best_restart = best;
  report.trace = std::move(win_res.trace);
  report.achieved_metrics =
      closed_loop_metrics(fitted, early, config, targets);
  return {std::move(fitted), std::move(report)};
}

}  // namespace fdnreverb
