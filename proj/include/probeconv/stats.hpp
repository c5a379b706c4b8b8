#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "probeconv/errors.hpp"

namespace probeconv {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

inline double stddev(std::span<const double> v) { return std::sqrt(variance(v)); }

/// Standard error of the sample mean.
inline double standard_error(std::span<const double> v) {
  return v.empty() ? 0.0 : stddev(v) / std::sqrt(double(v.size()));
}

/// Quantile by linear interpolation on the sorted copy, q in [0, 1].
inline double quantile(std::span<const double> v, double q) {
  if (v.empty()) throw domain_error("quantile: empty sample");
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const double pos = q * double(s.size() - 1);
  const size_t lo = size_t(pos);
  const size_t hi = std::min(lo + 1, s.size() - 1);
  const double frac = pos - double(lo);
  return s[lo] * (1.0 - frac) + s[hi] * frac;
}

inline double median(std::span<const double> v) { return quantile(v, 0.5); }

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line y = slope*x + intercept.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw dimension_error("fit_line: need >= 2 paired points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

struct TwoSegmentFit {
  double breakpoint = 0.0;  // x at the best split (midpoint between samples)
  double slope_left = 0.0;
  double slope_right = 0.0;
  double sse_two = 0.0;
  double sse_single = 0.0;
  /// A split only counts as a located slope change when the left segment
  /// decays decisively faster than the right one; otherwise the change sits
  /// outside the sampled range.
  bool visible(double min_contrast = 0.08) const {
    return slope_left <= slope_right - min_contrast;
  }
};

/// Two-segment least squares on (x, y): fits separate lines to the left and
/// right of every admissible split and keeps the split minimizing total
/// squared error. Used to locate the slope change of log-log error curves.
inline TwoSegmentFit two_segment_breakpoint(std::span<const double> x,
                                            std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 4)
    throw dimension_error("two_segment_breakpoint: need >= 4 points");
  auto segment = [&](size_t lo, size_t hi) {  // [lo, hi)
    const std::span<const double> xs = x.subspan(lo, hi - lo);
    const std::span<const double> ys = y.subspan(lo, hi - lo);
    const LineFit f = fit_line(xs, ys);
    double s = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const double e = ys[i] - (f.slope * xs[i] + f.intercept);
      s += e * e;
    }
    return std::pair{f.slope, s};
  };
  TwoSegmentFit fit;
  fit.sse_single = segment(0, x.size()).second;
  size_t best_split = 0;
  fit.sse_two = std::numeric_limits<double>::infinity();
  for (size_t split = 2; split + 2 <= x.size(); ++split) {
    const auto [sl, el] = segment(0, split);
    const auto [sr, er] = segment(split, x.size());
    if (el + er < fit.sse_two) {
      fit.sse_two = el + er;
      fit.slope_left = sl;
      fit.slope_right = sr;
      best_split = split;
    }
  }
  fit.breakpoint = 0.5 * (x[best_split - 1] + x[best_split]);
  return fit;
}

struct DecayFit {
  double inv_r_coeff = 0.0;       // a in err ~ a/r + b/sqrt(r)
  double inv_sqrt_r_coeff = 0.0;  // b
  /// r where the two decay terms are equal: (a/b)^2. Zero when the 1/r
  /// component is absent.
  double crossover_r = 0.0;
};

/// Weighted least squares of err(r) onto a/r + b/sqrt(r), relative weighting
/// (1/err^2) so every decade of the curve counts equally. Coefficients are
/// clamped nonnegative. The crossover generalizes the two-regime picture of
/// the deviation bounds and is far more stable than split-based fits.
inline DecayFit fit_two_term_decay(std::span<const int> r_grid,
                                   std::span<const double> err) {
  if (r_grid.size() != err.size() || r_grid.size() < 3)
    throw dimension_error("fit_two_term_decay: need >= 3 points");
  double sxx = 0.0, sxy = 0.0, syy = 0.0, sex = 0.0, sey = 0.0;
  for (size_t i = 0; i < err.size(); ++i) {
    if (!(err[i] > 0.0)) continue;
    const double w = 1.0 / (err[i] * err[i]);
    const double x = 1.0 / double(r_grid[i]);
    const double y = 1.0 / std::sqrt(double(r_grid[i]));
    sxx += w * x * x;
    sxy += w * x * y;
    syy += w * y * y;
    sex += w * err[i] * x;
    sey += w * err[i] * y;
  }
  DecayFit fit;
  const double det = sxx * syy - sxy * sxy;
  if (det == 0.0 || syy == 0.0) return fit;
  double a = (sex * syy - sey * sxy) / det;
  double b = (sey * sxx - sex * sxy) / det;
  if (a < 0.0) {
    a = 0.0;
    b = sey / syy;
  }
  if (b < 0.0) {
    b = 0.0;
    a = sxx > 0.0 ? sex / sxx : 0.0;
  }
  fit.inv_r_coeff = a;
  fit.inv_sqrt_r_coeff = b;
  fit.crossover_r = b > 0.0 ? (a / b) * (a / b) : 0.0;
  return fit;
}

/// Best non-increasing fit in least squares (pool adjacent violators).
inline std::vector<double> isotonic_decreasing_fit(std::span<const double> y) {
  // PAVA on the negated sequence gives the non-increasing projection.
  std::vector<double> level;
  std::vector<double> weight;
  for (double v : y) {
    level.push_back(-v);
    weight.push_back(1.0);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const double w = weight[weight.size() - 2] + weight.back();
      const double merged = (level[level.size() - 2] * weight[weight.size() - 2] +
                             level.back() * weight.back()) /
                            w;
      level.pop_back();
      weight.pop_back();
      level.back() = merged;
      weight.back() = w;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (size_t i = 0; i < level.size(); ++i)
    for (int k = 0; k < int(weight[i]); ++k) out.push_back(-level[i]);
  return out;
}

/// Relative L2 residual of the non-increasing projection; 0 when the sequence
/// is already non-increasing.
inline double isotonic_decreasing_residual(std::span<const double> y) {
  const auto fit = isotonic_decreasing_fit(y);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    num += (y[i] - fit[i]) * (y[i] - fit[i]);
    den += y[i] * y[i];
  }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

/// One-sided sign test: probability of >= wins successes out of n fair coin
/// flips. Small value = evidence that wins are not chance.
inline double sign_test_p_value(int wins, int n) {
  if (wins < 0 || n < 0 || wins > n) throw domain_error("sign_test: bad counts");
  // Sum of Binomial(n, 1/2) tail, computed in log space for large n.
  double p = 0.0;
  double log_c = 0.0;  // log C(n, k) built incrementally from k = 0
  const double log_half_n = -double(n) * std::log(2.0);
  for (int k = 0; k <= n; ++k) {
    if (k >= wins) p += std::exp(log_c + log_half_n);
    log_c += std::log(double(n - k)) - std::log(double(k + 1));
  }
  return std::min(1.0, p);
}

}  // namespace probeconv
