#pragma once

// Radio channel math: UMi path loss with Doppler-shifted breakpoint, received
// power, SINR distribution under log-normal shadowing, BLER-weighted
// interference probability, and the shadow-correlation rate/delay model.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "feelsel/config.hpp"
#include "feelsel/errors.hpp"

namespace feelsel {

struct Geometry {
  double m;          // slant distance vehicle -> RSU antenna, m
  double cos_theta;  // between driving direction and incidence
};

inline Geometry geometry(double d_xr, const RadioParams& radio) {
  if (d_xr < 0.0) throw DomainError("geometry: negative distance");
  const double m = std::sqrt(radio.h_R * radio.h_R + d_xr * d_xr);
  return {m, d_xr / m};
}

inline double wavelength(const RadioParams& radio) { return radio.c_light / radio.f_c; }

inline double doppler_shift(double d_xr, const RadioParams& radio, double v) {
  return v / wavelength(radio) * geometry(d_xr, radio).cos_theta;
}

inline double breakpoint_distance(double d_xr, const RadioParams& radio, double v) {
  const double f = radio.f_c + doppler_shift(d_xr, radio, v);
  return 4.0 * (radio.h_V - radio.h_env) * (radio.h_R - radio.h_env) * f / radio.c_light;
}

// UMi path loss in dB. Frequency terms take the Doppler-shifted carrier in
// GHz. Distances below d_min are clamped to d_min.
inline double path_loss(double d_xr, const RadioParams& radio, double v) {
  const double d = std::max(d_xr, radio.d_min);
  const double F_ghz = (radio.f_c + doppler_shift(d, radio, v)) / 1e9;
  const double d_b = breakpoint_distance(d, radio, v);
  if (d < d_b) return 22.0 * std::log10(d) + 28.0 + 20.0 * std::log10(F_ghz);
  if (radio.h_V <= radio.h_env || radio.h_R <= radio.h_env)
    throw DomainError("path_loss: antenna heights must exceed the environment height");
  return 40.0 * std::log10(d) + 7.8 - 18.0 * std::log10(radio.h_V - radio.h_env) -
         18.0 * std::log10(radio.h_R - radio.h_env) + 2.0 * std::log10(F_ghz);
}

inline double rx_power(double path_loss_db, const RadioParams& radio) { return radio.P - path_loss_db; }

// Distribution on an evenly spaced grid: bin i sits at origin + i*step.
struct DiscretePdf {
  double origin = 0.0;
  double step = 1.0;
  std::vector<double> mass;

  double at(std::size_t i) const { return origin + static_cast<double>(i) * step; }

  double total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
  }

  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) s += mass[i] * at(i);
    return s / total();
  }

  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) s += mass[i] * (at(i) - mu) * (at(i) - mu);
    return s / total();
  }
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Masses of N(mean, sd^2) on bins centred at mean + m*step, m in [-half, half],
// keeping only the part above `lower`. Returns the unnormalised masses.
inline std::vector<double> gaussian_bins(double mean, double sd, double step, int half, double lower) {
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1), 0.0);
  for (int m = -half; m <= half; ++m) {
    double lo = mean + (m - 0.5) * step;
    const double hi = mean + (m + 0.5) * step;
    if (hi <= lower) continue;
    lo = std::max(lo, lower);
    w[static_cast<std::size_t>(m + half)] = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
  }
  return w;
}

inline int half_width(double sd, double step) {
  return static_cast<int>(std::ceil(8.0 * sd / step));
}

// Interference-plus-noise level (dB) seen with interferer power p_i.
inline double interference_level(double p_i, const RadioParams& radio) {
  if (radio.sinr_mode == SinrMode::literal) return p_i + radio.N0;
  const double hi = std::max(p_i, radio.N0);
  const double lo = std::min(p_i, radio.N0);
  return hi + 10.0 * std::log10(1.0 + std::pow(10.0, (lo - hi) / 10.0));
}

inline double prob_above(double mean, double sd, double threshold) {
  if (sd <= 0.0) return mean > threshold ? 1.0 : 0.0;
  return 0.5 * std::erfc((threshold - mean) / (sd * std::sqrt(2.0)));
}

}  // namespace detail

// SINR of a received pair at their mean powers.
inline double sinr_db(double p_k, double p_i, const RadioParams& radio) {
  return p_k - detail::interference_level(p_i, radio);
}

// Distribution of SINR at the RSU for signal mean p_k_mean and interferer
// mean p_i_mean (both dBm). Each received power is Gaussian in dB with std
// sigma_sh; the signal is conditioned on exceeding p_sen. The returned grid
// covers [grid_lo, grid_hi] and the full support.
inline DiscretePdf sinr_distribution(double p_k_mean, double p_i_mean, const RadioParams& radio,
                                     double p_sen = -std::numeric_limits<double>::infinity()) {
  const double step = radio.grid_step;
  const double sd = radio.sigma_sh;
  if (detail::prob_above(p_k_mean, sd, p_sen) < 1e-12)
    throw DegenerateError("sinr_distribution: signal essentially never exceeds the sensing threshold");

  const double centre = sinr_db(p_k_mean, p_i_mean, radio);
  if (sd <= 0.0) {
    DiscretePdf pdf;
    pdf.step = step;
    const double below = std::ceil((centre - radio.grid_lo) / step);
    const double above = std::ceil((radio.grid_hi - centre) / step);
    const auto n_lo = static_cast<std::size_t>(std::max(0.0, below));
    const auto n_hi = static_cast<std::size_t>(std::max(0.0, above));
    pdf.origin = centre - static_cast<double>(n_lo) * step;
    pdf.mass.assign(n_lo + n_hi + 1, 0.0);
    pdf.mass[n_lo] = 1.0;
    return pdf;
  }

  const int half = detail::half_width(sd, step);
  std::vector<double> wk = detail::gaussian_bins(p_k_mean, sd, step, half, p_sen);
  std::vector<double> wi =
      detail::gaussian_bins(p_i_mean, sd, step, half, -std::numeric_limits<double>::infinity());
  double zk = 0.0, zi = 0.0;
  for (double w : wk) zk += w;
  for (double w : wi) zi += w;

  // Output grid anchored at `centre` so the literal mode needs no rebinning.
  const double spread = 2.0 * half * step + 40.0 * step + 20.0 * sd;
  const double lo = std::min(radio.grid_lo, centre - spread);
  const double hi = std::max(radio.grid_hi, centre + spread);
  const auto n_lo = static_cast<std::size_t>(std::ceil((centre - lo) / step));
  const auto n_hi = static_cast<std::size_t>(std::ceil((hi - centre) / step));
  DiscretePdf pdf;
  pdf.step = step;
  pdf.origin = centre - static_cast<double>(n_lo) * step;
  pdf.mass.assign(n_lo + n_hi + 1, 0.0);
  const auto last = static_cast<std::ptrdiff_t>(pdf.mass.size()) - 1;

  for (int n = -half; n <= half; ++n) {
    const double u = wi[static_cast<std::size_t>(n + half)] / zi;
    if (u == 0.0) continue;
    const double j = detail::interference_level(p_i_mean + n * step, radio);
    // position of (p_k_mean - j) on the output grid
    double pos = (p_k_mean - j - pdf.origin) / step;
    double base = std::floor(pos);
    double frac = pos - base;
    if (frac < 1e-9) frac = 0.0;
    if (frac > 1.0 - 1e-9) { base += 1.0; frac = 0.0; }
    const auto i0 = static_cast<std::ptrdiff_t>(base);
    for (int m = -half; m <= half; ++m) {
      const double w = wk[static_cast<std::size_t>(m + half)];
      if (w == 0.0) continue;
      const double mass = u * w / zk;
      const std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(i0 + m, 0, last);
      if (frac == 0.0) {
        pdf.mass[static_cast<std::size_t>(idx)] += mass;
      } else {
        const std::ptrdiff_t idx1 = std::clamp<std::ptrdiff_t>(i0 + m + 1, 0, last);
        pdf.mass[static_cast<std::size_t>(idx)] += mass * (1.0 - frac);
        pdf.mass[static_cast<std::size_t>(idx1)] += mass * frac;
      }
    }
  }
  return pdf;
}

// Expected block error over the SINR distribution.
inline double interference_probability(const DiscretePdf& pdf, const BlerModel& bler) {
  double s = 0.0;
  for (std::size_t i = 0; i < pdf.mass.size(); ++i)
    if (pdf.mass[i] != 0.0) s += bler(pdf.at(i)) * pdf.mass[i];
  return std::clamp(s, 0.0, 1.0);
}

// Reference route: full SINR distribution, then BLER weighting. Unusable
// links contribute 0.
inline double interference_probability_direct(double p_k_mean, double p_i_mean, const RadioParams& radio,
                                              double p_sen) {
  try {
    return interference_probability(sinr_distribution(p_k_mean, p_i_mean, radio, p_sen), radio.bler);
  } catch (const DegenerateError&) {
    return 0.0;
  }
}

// Tabulated P_int over a rectangle of mean received powers, evaluated with
// bilinear interpolation. Built once per radio setup; immutable afterwards.
class InterferenceTable {
 public:
  InterferenceTable(const RadioParams& radio, double p_sen, double mu_lo, double mu_hi,
                    double step = 0.25)
      : radio_(radio), p_sen_(p_sen), lo_(std::floor(mu_lo / step) * step), step_(step) {
    n_ = static_cast<std::size_t>(std::ceil((mu_hi - lo_) / step)) + 2;
    if (radio.sigma_sh > 0.0) build();
  }

  bool covers(double p_k, double p_i) const {
    const double hi = lo_ + static_cast<double>(n_ - 1) * step_;
    return p_k >= lo_ && p_k <= hi && p_i >= lo_ && p_i <= hi;
  }

  double operator()(double p_k, double p_i) const {
    if (radio_.sigma_sh <= 0.0) {
      if (p_k <= p_sen_) return 0.0;
      return std::clamp(radio_.bler(sinr_db(p_k, p_i, radio_)), 0.0, 1.0);
    }
    if (!covers(p_k, p_i)) return interference_probability_direct(p_k, p_i, radio_, p_sen_);
    const double x = (p_k - lo_) / step_;
    const double y = (p_i - lo_) / step_;
    const auto ix = std::min<std::size_t>(static_cast<std::size_t>(x), n_ - 2);
    const auto iy = std::min<std::size_t>(static_cast<std::size_t>(y), n_ - 2);
    const double fx = x - static_cast<double>(ix);
    const double fy = y - static_cast<double>(iy);
    const double v00 = cell(ix, iy), v10 = cell(ix + 1, iy);
    const double v01 = cell(ix, iy + 1), v11 = cell(ix + 1, iy + 1);
    const double v = (1 - fx) * ((1 - fy) * v00 + fy * v01) + fx * ((1 - fy) * v10 + fy * v11);
    return std::clamp(v, 0.0, 1.0);
  }

  // Shared instance for identical setups (sweeps reuse one table).
  static std::shared_ptr<const InterferenceTable> shared(const RadioParams& radio, double p_sen,
                                                         double mu_lo, double mu_hi) {
    static std::mutex mu;
    static std::vector<std::shared_ptr<const InterferenceTable>> cache;
    std::lock_guard lock(mu);
    for (const auto& t : cache)
      if (t->radio_ == radio && t->p_sen_ == p_sen && t->lo_ <= mu_lo &&
          t->lo_ + static_cast<double>(t->n_ - 1) * t->step_ >= mu_hi)
        return t;
    auto t = std::make_shared<const InterferenceTable>(radio, p_sen, mu_lo, mu_hi);
    if (cache.size() >= 8) cache.erase(cache.begin());
    cache.push_back(t);
    return t;
  }

 private:
  double cell(std::size_t ik, std::size_t ii) const { return table_[ik * n_ + ii]; }

  void build() {
    const double sd = radio_.sigma_sh;
    const int sub = 2;  // inner integration points per table step
    const double h = step_ / sub;
    const int half = detail::half_width(sd, h);
    const double mu_hi = lo_ + static_cast<double>(n_ - 1) * step_;
    // x-grid covering every signal sample a = mu_k + m*h
    const double x0 = lo_ - half * h;
    const auto nx = static_cast<std::size_t>(std::llround((mu_hi - lo_) / h)) + 2 * half + 1;

    // Truncated, normalised signal weights per column.
    std::vector<std::vector<double>> wk(n_);
    std::vector<char> usable(n_, 0);
    for (std::size_t ik = 0; ik < n_; ++ik) {
      const double mu_k = lo_ + static_cast<double>(ik) * step_;
      if (detail::prob_above(mu_k, sd, p_sen_) < 1e-12) continue;
      usable[ik] = 1;
      wk[ik] = detail::gaussian_bins(mu_k, sd, h, half, p_sen_);
      double z = 0.0;
      for (double w : wk[ik]) z += w;
      for (double& w : wk[ik]) w /= z;
    }
    const std::vector<double> wi_shape =
        detail::gaussian_bins(0.0, sd, h, half, -std::numeric_limits<double>::infinity());
    double zi = 0.0;
    for (double w : wi_shape) zi += w;

    table_.assign(n_ * n_, 0.0);
    std::vector<double> g(nx);
    std::vector<double> jlev(wi_shape.size());
    for (std::size_t ii = 0; ii < n_; ++ii) {
      const double mu_i = lo_ + static_cast<double>(ii) * step_;
      for (int n = -half; n <= half; ++n)
        jlev[static_cast<std::size_t>(n + half)] = detail::interference_level(mu_i + n * h, radio_);
      // g(x) = E_b[ BL(x - J(b)) ]
      for (std::size_t q = 0; q < nx; ++q) {
        const double x = x0 + static_cast<double>(q) * h;
        double s = 0.0;
        for (std::size_t n = 0; n < jlev.size(); ++n)
          if (wi_shape[n] != 0.0) s += wi_shape[n] * radio_.bler(x - jlev[n]);
        g[q] = s / zi;
      }
      for (std::size_t ik = 0; ik < n_; ++ik) {
        if (!usable[ik]) continue;
        const std::size_t q0 = ik * sub;  // index of mu_k - half*h on the x-grid
        double s = 0.0;
        const auto& w = wk[ik];
        for (std::size_t m = 0; m < w.size(); ++m) s += w[m] * g[q0 + m];
        table_[ik * n_ + ii] = std::clamp(s, 0.0, 1.0);
      }
    }
  }

  RadioParams radio_;
  double p_sen_;
  double lo_;
  double step_;
  std::size_t n_ = 0;
  std::vector<double> table_;
};

// Shadow-fading correlation between consecutive intervals for a vehicle at
// distance d_kr from the RSU: delta^(v*t_s/d_kr) with delta = exp(-d_kr/d_decorr).
inline double shadow_correlation(double d_kr, double v, double t_s, const RadioParams& radio) {
  const double d = std::max(d_kr, radio.d_min);
  const double log_delta = -d / radio.d_decorr;
  return std::exp(log_delta * (v * t_s / d));
}

inline double shadow_correlation(double d_kr, const SimConfig& cfg) {
  return shadow_correlation(d_kr, cfg.v, cfg.t_s, cfg.radio);
}

// Steady-state rate, bytes per interval.
inline double tx_rate(double correlation, const RadioParams& radio) { return radio.sigma_sq * correlation; }

// Intervals needed to push D_a bytes at rate rho.
inline double tx_delay(double D_a, double rho) {
  if (!(rho > 0.0)) throw DomainError("tx_delay: rate must be positive");
  return D_a / rho;
}

}  // namespace feelsel
