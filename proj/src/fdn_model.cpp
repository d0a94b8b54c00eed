#include "fdnreverb/fdn_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fdnreverb/dual.hpp"
#include "fdnreverb/errors.hpp"

namespace fdnreverb {

namespace {

template <class T>
T ipow(T base, std::int64_t e) {
  T result(1.0);
  while (e > 0) {
    if (e & 1) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

inline double tpow(double b, double e) { return std::pow(b, e); }
inline Dual tpow(Dual b, double e) { return pow(b, e); }
inline double tlog(double x) { return std::log(x); }
inline Dual tlog(Dual x) { return log(x); }

// base^e for base in (0,1). Integer exponents go through exponentiation
// by squaring, which is what makes the whole model evaluable with exact
// dual arithmetic and keeps the optimizer loop cheap.
template <class T>
T power(T base, double e) {
  if (std::isinf(e)) return T(0.0);
  if (e >= 0.0 && e < 9.0e15 && e == std::floor(e))
    return ipow(base, static_cast<std::int64_t>(e));
  return tpow(base, e);
}

// Per-segment closed forms. J(t) restricted to [kappa_i, kappa_{i+1}) is
// c_i * alpha^(t - kappa_i) with the anchored prefix coefficient
//   c_i = sum_{j<=i} beta_j * alpha^(kappa_i - kappa_j),
// whose exponents are all non-negative, so nothing here can overflow for
// any alpha in (0,1). The prefixes are computed once per evaluation and
// shared by the window sums, the tap cross terms and the decay amplitude.
template <class T>
std::vector<T> anchored_prefixes(const T& alpha, const std::vector<T>& betas,
                                 const std::vector<int>& kappas) {
  std::vector<T> c(betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    c[i] = i == 0 ? betas[0]
                  : c[i - 1] * ipow(alpha, static_cast<std::int64_t>(
                                               kappas[i] - kappas[i - 1])) +
                        betas[i];
  }
  return c;
}

template <class T>
T envelope_at(const T& alpha, const std::vector<T>& prefixes,
              const std::vector<int>& kappas, std::int64_t t) {
  auto it = std::upper_bound(kappas.begin(), kappas.end(),
                             static_cast<int>(std::min<std::int64_t>(
                                 t, std::numeric_limits<int>::max())));
  if (it == kappas.begin()) return T(0.0);
  const std::size_t i = static_cast<std::size_t>(it - kappas.begin()) - 1;
  return prefixes[i] * ipow(alpha, t - kappas[i]);
}

template <class T>
struct TailSums {
  T energy{0.0};
  T moment{0.0};
};

template <class T>
TailSums<T> tail_sums(const T& alpha, const std::vector<T>& prefixes,
                      const std::vector<int>& kappas, double upto,
                      TimeBase mode, bool want_moment) {
  const std::size_t n = prefixes.size();
  const T r = alpha * alpha;
  TailSums<T> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(kappas[i]);
    if (a >= upto) break;
    double b = (i + 1 < n) ? std::min(static_cast<double>(kappas[i + 1]), upto)
                           : upto;
    const T csq = prefixes[i] * prefixes[i];
    if (mode == TimeBase::discrete) {
      // Integer samples t in [a, b): count m, geometric ratio r.
      const double m =
          std::isinf(b) ? b : std::ceil(b) - a;  // half-open sample count
      if (m <= 0.0) continue;
      const T rm = power(r, m);
      const T one_minus_rm = T(1.0) - rm;
      const T inv = T(1.0) / (T(1.0) - r);
      out.energy += csq * one_minus_rm * inv;
      if (want_moment) {
        // sum_{s=0}^{m-1} s r^s, plus the a-offset term.
        T sgeo;
        if (std::isinf(m)) {
          sgeo = r * inv * inv;
        } else {
          const T rm1 = rm / r;  // r^(m-1)
          sgeo = r * (T(1.0) - T(m) * rm1 + T(m - 1.0) * rm) * inv * inv;
        }
        out.moment += csq * (T(a) * one_minus_rm * inv + sgeo);
      }
    } else {
      const T lnr = tlog(r);  // negative for alpha < 1
      const T inv_lnr = T(1.0) / lnr;
      const T rm = std::isinf(b) ? T(0.0) : power(r, b - a);
      out.energy += csq * (rm - T(1.0)) * inv_lnr;
      if (want_moment) {
        const T mlnr_term =
            std::isinf(b) ? T(0.0) : rm * (T(b - a) * lnr - T(1.0));
        out.moment += csq * (T(a) * (rm - T(1.0)) * inv_lnr +
                             (mlnr_term + T(1.0)) * inv_lnr * inv_lnr);
      }
    }
  }
  return out;
}

void check_loops(const FdnParams& p) {
  if (p.kappas.empty())
    throw_error(ErrorKind::config, "at least one feedback loop is required");
}

void check_upto(const FdnParams& p, double upto) {
  if (std::isinf(upto) && upto > 0) return;
  if (!(upto >= static_cast<double>(p.kappas.back())))
    throw_error(ErrorKind::range,
                "integration bound " + std::to_string(upto) +
                    " must not precede the largest loop delay " +
                    std::to_string(p.kappas.back()));
}

void check_targets(const FdnParams& p, const EarlyConstants& ec,
                   const TargetMetrics& tm, const WindowSamples& win) {
  if (!(ec.i0 > 0.0))
    throw_error(ErrorKind::config, "direct-path amplitude must be positive");
  if (!(ec.e50 >= 0 && ec.e50 <= ec.e80 && ec.e80 <= ec.etot))
    throw_error(ErrorKind::config,
                "early constants must satisfy 0 <= e50 <= e80 <= etot");
  if (!(tm.definition > 0.0 && tm.definition <= 1.0))
    throw_error(ErrorKind::config, "target definition must lie in (0, 1]");
  if (!(tm.t30_samples > 0.0))
    throw_error(ErrorKind::config, "target t30 must be positive");
  if (win.n50 > win.n80)
    throw_error(ErrorKind::config, "early window exceeds definition window");
  if (static_cast<double>(p.kappas.back()) > static_cast<double>(win.n50))
    throw_error(ErrorKind::config,
                "loop delays must not exceed the early window (" +
                    std::to_string(win.n50) + " samples)");
  if (!(tm.t30_samples > static_cast<double>(p.kappas.back())))
    throw_error(ErrorKind::config,
                "target t30 (" + std::to_string(tm.t30_samples) +
                    ") must exceed the largest loop delay; the tail has not "
                    "fully started");
}

// Residuals evaluated in any scalar type; the dual instantiation provides
// the gradient. With a tap list the cross products 2*b_i*J(K_i) of the
// squared early+tail sum enter each energy window and the moment, making
// the model agree exactly with metrics measured on the rendered response.
template <class T>
std::array<T, 4> residuals_impl(const T& alpha, const std::vector<T>& betas,
                                const std::vector<int>& kappas,
                                const EarlyConstants& ec,
                                const TargetMetrics& tm,
                                const WindowSamples& win, TimeBase mode,
                                const EarlyReflections* early) {
  const std::vector<T> prefixes = anchored_prefixes(alpha, betas, kappas);
  const auto full =
      tail_sums(alpha, prefixes, kappas, kInfiniteTime, mode, true);
  T e50 = tail_sums(alpha, prefixes, kappas, static_cast<double>(win.n50),
                    mode, false)
              .energy;
  T e80 = tail_sums(alpha, prefixes, kappas, static_cast<double>(win.n80),
                    mode, false)
              .energy;
  T e_inf = full.energy;
  T m_inf = full.moment;
  if (early != nullptr) {
    for (const Tap& tap : early->taps) {
      const T cross = T(2.0 * tap.gain) *
                      envelope_at(alpha, prefixes, kappas, tap.delay_samples);
      if (tap.delay_samples < win.n50) e50 += cross;
      if (tap.delay_samples < win.n80) e80 += cross;
      e_inf += cross;
      m_inf += T(static_cast<double>(tap.delay_samples)) * cross;
    }
  }
  const T total = T(ec.etot) + e_inf;
  const T j30 = envelope_at(alpha, prefixes, kappas,
                            std::llround(tm.t30_samples));
  std::array<T, 4> r;
  r[0] = T(ec.e50) + e50 - T(std::pow(10.0, tm.clarity)) * total;
  r[1] = T(ec.e80) + e80 - T(tm.definition) * total;
  r[2] = T(ec.moment) + m_inf - T(tm.center_time_samples) * total;
  r[3] = j30 - T(tm.decay_target_amplitude * ec.i0);
  return r;
}

template <class T>
T loss_impl(const std::array<T, 4>& r, const LossWeights& w,
            const ResidualScales& s) {
  const T r1 = r[0] / T(s.s1);
  const T r2 = r[1] / T(s.s2);
  const T r3 = r[2] / T(s.s3);
  const T r4 = r[3] / T(s.s4);
  return T(w.w1) * r1 * r1 + T(w.w2) * r2 * r2 + T(w.w3) * r3 * r3 +
         T(w.w4) * r4 * r4;
}

void check_weights(const LossWeights& w, const ResidualScales& s) {
  if (!(w.w1 > 0 && w.w2 > 0 && w.w3 > 0 && w.w4 > 0))
    throw_error(ErrorKind::config, "loss weights must be positive");
  if (!(s.s1 > 0 && s.s2 > 0 && s.s3 > 0 && s.s4 > 0))
    throw_error(ErrorKind::config, "residual scales must be positive");
}

}  // namespace

std::vector<int> log_spaced_delays(int n, int sample_rate_hz,
                                   double t_max_ms) {
  if (n < 1) throw_error(ErrorKind::config, "loop count must be >= 1");
  if (sample_rate_hz <= 0)
    throw_error(ErrorKind::config, "sample rate must be positive");
  const auto limit = static_cast<std::int64_t>(std::floor(
      t_max_ms * static_cast<double>(sample_rate_hz) / 1000.0 + 1e-9));
  if (limit < n)
    throw_error(ErrorKind::config,
                "cannot place " + std::to_string(n) +
                    " distinct integer delays within " +
                    std::to_string(limit) + " samples");
  std::vector<int> kappas(n);
  if (n == 1) {
    kappas[0] = static_cast<int>(limit);
    return kappas;
  }
  const double log_limit = std::log(static_cast<double>(limit));
  std::int64_t prev = 0;
  for (int i = 0; i < n; ++i) {
    const double v = std::exp(log_limit * static_cast<double>(i) /
                              static_cast<double>(n - 1));
    std::int64_t k = std::llround(v);
    if (k <= prev) k = prev + 1;  // bump duplicates after rounding
    kappas[i] = static_cast<int>(k);
    prev = k;
  }
  if (prev > limit) {
    // The bumps ran past the ceiling; push the top of the grid back down.
    for (int i = n; i-- > 0;) {
      const auto bound = static_cast<std::int64_t>(limit - (n - 1 - i));
      if (kappas[i] > bound) kappas[i] = static_cast<int>(bound);
    }
  }
  return kappas;
}

double analytic_tail(const FdnParams& p, std::int64_t t) {
  validate(p);
  check_loops(p);
  if (t < 0) throw_error(ErrorKind::range, "tail time must be non-negative");
  const std::vector<double> prefixes =
      anchored_prefixes(p.alpha, p.betas, p.kappas);
  return envelope_at(p.alpha, prefixes, p.kappas, t);
}

std::vector<double> lambda_coefficients(const FdnParams& p) {
  validate(p);
  check_loops(p);
  const double max_exponent =
      -static_cast<double>(p.kappas.back()) * std::log(p.alpha);
  if (max_exponent > 690.0)
    throw_error(ErrorKind::numeric_range,
                "alpha^-kappa exceeds the floating-point range; increase "
                "alpha or shorten the loop delays");
  std::vector<double> lambdas(p.betas.size());
  double prefix = 0.0;
  for (std::size_t i = 0; i < p.betas.size(); ++i) {
    prefix += p.betas[i] * std::pow(p.alpha, -static_cast<double>(p.kappas[i]));
    lambdas[i] = prefix * prefix;
  }
  return lambdas;
}

double tail_energy(const FdnParams& p, double upto, TimeBase mode) {
  validate(p);
  check_loops(p);
  check_upto(p, upto);
  const std::vector<double> prefixes =
      anchored_prefixes(p.alpha, p.betas, p.kappas);
  return tail_sums(p.alpha, prefixes, p.kappas, upto, mode, false).energy;
}

double tail_moment(const FdnParams& p, double upto, TimeBase mode) {
  validate(p);
  check_loops(p);
  check_upto(p, upto);
  const std::vector<double> prefixes =
      anchored_prefixes(p.alpha, p.betas, p.kappas);
  return tail_sums(p.alpha, prefixes, p.kappas, upto, mode, true).moment;
}

Residuals residuals(const FdnParams& p, const EarlyConstants& ec,
                    const TargetMetrics& tm, const WindowSamples& win,
                    TimeBase mode, const EarlyReflections* early) {
  validate(p);
  check_loops(p);
  check_targets(p, ec, tm, win);
  const auto r =
      residuals_impl(p.alpha, p.betas, p.kappas, ec, tm, win, mode, early);
  return {r[0], r[1], r[2], r[3]};
}

ResidualScales make_residual_scales(const EarlyConstants& ec,
                                    const TargetMetrics& tm,
                                    double tail_energy_at_init) {
  const double e0 = ec.etot + tail_energy_at_init;
  if (!(e0 > 0.0))
    throw_error(ErrorKind::config, "total energy scale must be positive");
  ResidualScales s;
  // One denominator scale for all residuals; the moment residual carries
  // an extra time dimension and gets the center-time factor on top. The
  // decay residual is deliberately left on the energy scale as well: its
  // raw magnitude is tiny, so a decay mismatch costs far less than a
  // comparable energy-window mismatch and gets absorbed as a small T30
  // error rather than distorting clarity or definition.
  s.s1 = e0;
  s.s2 = e0;
  s.s3 = std::max(std::abs(tm.center_time_samples), 1.0) * e0;
  s.s4 = e0;
  return s;
}

double loss(const FdnParams& p, const EarlyConstants& ec,
            const TargetMetrics& tm, const WindowSamples& win,
            const LossWeights& weights, TimeBase mode,
            const ResidualScales& scales, const EarlyReflections* early) {
  validate(p);
  check_loops(p);
  check_targets(p, ec, tm, win);
  check_weights(weights, scales);
  const auto r =
      residuals_impl(p.alpha, p.betas, p.kappas, ec, tm, win, mode, early);
  return loss_impl(r, weights, scales);
}

LossGradient loss_gradient(const FdnParams& p, const EarlyConstants& ec,
                           const TargetMetrics& tm, const WindowSamples& win,
                           const LossWeights& weights, TimeBase mode,
                           const ResidualScales& scales,
                           const EarlyReflections* early) {
  validate(p);
  check_loops(p);
  check_targets(p, ec, tm, win);
  check_weights(weights, scales);
  const std::size_t n = p.betas.size();
  LossGradient g;
  g.d_betas.resize(n);
  std::vector<Dual> betas(n);
  for (std::size_t i = 0; i < n; ++i) betas[i] = Dual(p.betas[i]);
  // One forward pass per variable, seeding its derivative direction.
  for (std::size_t var = 0; var <= n; ++var) {
    Dual alpha(p.alpha, var == 0 ? 1.0 : 0.0);
    if (var > 0) betas[var - 1].d = 1.0;
    const auto r =
        residuals_impl(alpha, betas, p.kappas, ec, tm, win, mode, early);
    const Dual l = loss_impl(r, weights, scales);
    if (var == 0)
      g.d_alpha = l.d;
    else
      g.d_betas[var - 1] = l.d;
    if (var > 0) betas[var - 1].d = 0.0;
  }
  return g;
}

ResidualJacobian residual_jacobian(const FdnParams& p,
                                   const EarlyConstants& ec,
                                   const TargetMetrics& tm,
                                   const WindowSamples& win, TimeBase mode,
                                   const EarlyReflections* early) {
  validate(p);
  check_loops(p);
  check_targets(p, ec, tm, win);
  const std::size_t n = p.betas.size();
  ResidualJacobian jac;
  jac.d_betas.resize(n);
  std::vector<Dual> betas(n);
  for (std::size_t i = 0; i < n; ++i) betas[i] = Dual(p.betas[i]);
  for (std::size_t var = 0; var <= n; ++var) {
    Dual alpha(p.alpha, var == 0 ? 1.0 : 0.0);
    if (var > 0) betas[var - 1].d = 1.0;
    const auto r =
        residuals_impl(alpha, betas, p.kappas, ec, tm, win, mode, early);
    if (var == 0) {
      jac.value = {r[0].v, r[1].v, r[2].v, r[3].v};
      jac.d_alpha = {r[0].d, r[1].d, r[2].d, r[3].d};
    } else {
      jac.d_betas[var - 1] = {r[0].d, r[1].d, r[2].d, r[3].d};
      betas[var - 1].d = 0.0;
    }
  }
  return jac;
}

}  // namespace fdnreverb
