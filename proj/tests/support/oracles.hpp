#pragma once

// Literal-transcription oracles used by the property and acceptance suites.
// Everything here is written directly from the pooling definitions with its
// own data handling, deliberately independent of the library code paths it
// checks. Favor directness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& q) {
  double s = 0.0;
  for (double v : q) s += v;
  return s / static_cast<double>(q.size());
}

inline double median(const std::vector<double>& q) {
  std::vector<double> v = q;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double harmonic(const std::vector<double>& q) {
  double s = 0.0;
  for (double v : q) s += std::pow(v, -1.0);
  return std::pow(s / static_cast<double>(q.size()), -1.0);
}

inline double geometric(const std::vector<double>& q) {
  long double product = 1.0L;
  for (double v : q) product *= v;
  return static_cast<double>(std::pow(product, 1.0L / static_cast<long double>(q.size())));
}

inline double minkowski(const std::vector<double>& q, double p) {
  double s = 0.0;
  for (double v : q) s += std::pow(v, p);
  return std::pow(s / static_cast<double>(q.size()), 1.0 / p);
}

// Worst ceil(k% * N) scores; "worst" = lowest when higher_is_better. Ties keep
// the earlier frame.
inline double percentile(const std::vector<double>& q, double k, bool higher_is_better) {
  const std::size_t n = q.size();
  auto m = static_cast<std::size_t>(std::ceil(k / 100.0 * static_cast<double>(n)));
  if (m < 1) m = 1;
  if (m > n) m = n;
  std::vector<std::pair<double, std::size_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    keyed[i] = {higher_is_better ? q[i] : -q[i], i};
  }
  std::sort(keyed.begin(), keyed.end());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += q[keyed[i].second];
  return s / static_cast<double>(m);
}

inline double variation(const std::vector<double>& q, double k) {
  const std::size_t g = q.size() - 1;
  std::vector<double> grad(g);
  for (std::size_t i = 0; i < g; ++i) grad[i] = std::abs(q[i + 1] - q[i]);
  auto m = static_cast<std::size_t>(std::ceil(k / 100.0 * static_cast<double>(g)));
  if (m < 1) m = 1;
  if (m > g) m = g;
  std::sort(grad.begin(), grad.end());
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += grad[g - 1 - i];
  return s / static_cast<double>(m);
}

// Plain Lloyd two-means over scalars: nearest-centroid assignment (ties to the
// low side), centroids start at (min, max), stop at an assignment fixpoint.
struct TwoGroups {
  std::vector<std::size_t> low, high;
  double low_mean = 0.0, high_mean = 0.0;
  bool all_equal = false;
};

inline TwoGroups two_means(const std::vector<double>& q) {
  TwoGroups out;
  double lo = q[0], hi = q[0];
  for (double v : q) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {
    out.all_equal = true;
    out.low_mean = out.high_mean = lo;
    for (std::size_t i = 0; i < q.size(); ++i) out.low.push_back(i);
    return out;
  }
  double c_low = lo, c_high = hi;
  std::vector<int> member(q.size(), -1);
  for (int pass = 0; pass < 100; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d_low = std::abs(q[i] - c_low);
      const double d_high = std::abs(q[i] - c_high);
      const int assign = d_low <= d_high ? 0 : 1;
      if (assign != member[i]) changed = true;
      member[i] = assign;
    }
    double s0 = 0.0, s1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (member[i] == 0) {
        s0 += q[i];
        ++n0;
      } else {
        s1 += q[i];
        ++n1;
      }
    }
    if (n0) c_low = s0 / static_cast<double>(n0);
    if (n1) c_high = s1 / static_cast<double>(n1);
    if (!changed) break;
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (member[i] == 0) {
      out.low.push_back(i);
    } else {
      out.high.push_back(i);
    }
  }
  out.low_mean = c_low;
  out.high_mean = c_high;
  return out;
}

inline double vqpooling(const std::vector<double>& q) {
  if (q.size() == 1) return q[0];
  const TwoGroups g = two_means(q);
  if (g.all_equal) return q[0];
  const double w = (1.0 - g.low_mean / g.high_mean) * (1.0 - g.low_mean / g.high_mean);
  double sum_low = 0.0, sum_high = 0.0;
  for (std::size_t i : g.low) sum_low += q[i];
  for (std::size_t i : g.high) sum_high += q[i];
  return (sum_low + w * sum_high) /
         (static_cast<double>(g.low.size()) + w * static_cast<double>(g.high.size()));
}

// Q = sum_{n=0..L'} q[n+1] * exp(-a n) / sum_{k=0..L'} exp(-a k), L' = min(L, N-1).
inline double primacy(const std::vector<double>& q, int horizon, double a) {
  const std::size_t lim = std::min<std::size_t>(static_cast<std::size_t>(horizon), q.size() - 1);
  double denom = 0.0;
  for (std::size_t k = 0; k <= lim; ++k) denom += std::exp(-a * static_cast<double>(k));
  double acc = 0.0;
  for (std::size_t n = 0; n <= lim; ++n) {
    acc += q[n] * std::exp(-a * static_cast<double>(n)) / denom;
  }
  return acc;
}

// Same window anchored at the end, weights exp(-a (L'-n)).
inline double recency(const std::vector<double>& q, int horizon, double a) {
  const std::size_t lim = std::min<std::size_t>(static_cast<std::size_t>(horizon), q.size() - 1);
  double denom = 0.0;
  for (std::size_t k = 0; k <= lim; ++k) denom += std::exp(-a * static_cast<double>(lim - k));
  const std::size_t first = q.size() - 1 - lim;
  double acc = 0.0;
  for (std::size_t n = 0; n <= lim; ++n) {
    acc += q[first + n] * std::exp(-a * static_cast<double>(lim - n)) / denom;
  }
  return acc;
}

struct HysteresisOracle {
  std::vector<double> memory, current, combined;
};

// Literal transcription with the index sets spelled out, 1-based like the
// definition: K_prev = {max(1, n-tau), ..., n-1}, K_next = {n, ..., min(n+tau, N)},
// v = sort ascending, weights = descending Gaussian half with sigma = J/3,
// normalized; q' = alpha * m + (1 - alpha) * l.
inline HysteresisOracle hysteresis(const std::vector<double>& q, int tau, double alpha) {
  const std::size_t n_frames = q.size();
  HysteresisOracle out;
  for (std::size_t n = 1; n <= n_frames; ++n) {
    double l;
    if (n == 1) {
      l = q[0];
    } else {
      std::vector<std::size_t> k_prev;
      const std::size_t start = n > static_cast<std::size_t>(tau) ? n - tau : 1;
      for (std::size_t k = start; k <= n - 1; ++k) k_prev.push_back(k);
      l = q[k_prev[0] - 1];
      for (std::size_t k : k_prev) l = std::min(l, q[k - 1]);
    }

    std::vector<std::size_t> k_next;
    for (std::size_t k = n; k <= std::min(n + static_cast<std::size_t>(tau), n_frames); ++k) {
      k_next.push_back(k);
    }
    std::vector<double> v;
    for (std::size_t k : k_next) v.push_back(q[k - 1]);
    std::sort(v.begin(), v.end());
    const std::size_t count = v.size();
    const double sigma = static_cast<double>(count) / 3.0;
    std::vector<double> w(count);
    double w_sum = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      w[j] = std::exp(-static_cast<double>(j) * static_cast<double>(j) / (2.0 * sigma * sigma));
      w_sum += w[j];
    }
    double m = 0.0;
    for (std::size_t j = 0; j < count; ++j) m += v[j] * (w[j] / w_sum);

    out.memory.push_back(l);
    out.current.push_back(m);
    out.combined.push_back(alpha * m + (1.0 - alpha) * l);
  }
  return out;
}

inline double pool_hysteresis(const std::vector<double>& q, int tau, double alpha) {
  const HysteresisOracle h = hysteresis(q, tau, alpha);
  double s = 0.0;
  for (double v : h.combined) s += v;
  return s / static_cast<double>(h.combined.size());
}

// Tie-averaged rank computed pointwise: rank_i = #(v < v_i) + (#(v == v_i) + 1)/2.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    out[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  return out;
}

// Pearson via the sum-of-products form.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

inline double srcc(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

}  // namespace oracle
