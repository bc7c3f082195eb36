#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqpool/detail/text.hpp"
#include "vqpool/errors.hpp"
#include "vqpool/series.hpp"

namespace vqpool {

enum class PoolMethod {
  Mean,
  Median,
  Harmonic,
  Geometric,
  Minkowski,
  Percentile,
  VQPooling,
  Variation,
  Primacy,
  Recency,
  Hysteresis,
};

inline constexpr PoolMethod kAllPoolMethods[] = {
    PoolMethod::Mean,      PoolMethod::Median,    PoolMethod::Harmonic,
    PoolMethod::Geometric, PoolMethod::Minkowski, PoolMethod::Percentile,
    PoolMethod::VQPooling, PoolMethod::Variation, PoolMethod::Primacy,
    PoolMethod::Recency,   PoolMethod::Hysteresis,
};

inline std::string_view method_name(PoolMethod m) {
  switch (m) {
    case PoolMethod::Mean: return "mean";
    case PoolMethod::Median: return "median";
    case PoolMethod::Harmonic: return "harmonic";
    case PoolMethod::Geometric: return "geometric";
    case PoolMethod::Minkowski: return "minkowski";
    case PoolMethod::Percentile: return "percentile";
    case PoolMethod::VQPooling: return "vqpooling";
    case PoolMethod::Variation: return "variation";
    case PoolMethod::Primacy: return "primacy";
    case PoolMethod::Recency: return "recency";
    case PoolMethod::Hysteresis: return "hysteresis";
  }
  return "unknown";
}

inline std::optional<PoolMethod> parse_pool_method(std::string_view name) {
  for (PoolMethod m : kAllPoolMethods) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

/// Tagged pooling-method choice plus the parameters of the parametric methods.
/// Defaults are the recommended settings: Minkowski exponent 2, percentile and
/// variation selection 10%, primacy/recency horizon 180 frames with decay 0.01,
/// hysteresis window 60 frames with blend 0.8.
struct PoolingSpec {
  PoolMethod method = PoolMethod::Mean;
  double minkowski_p = 2.0;
  double k_percent = 10.0;        // percentile / variation selection size, in (0, 100]
  int horizon = 180;              // primacy/recency frame horizon
  double primacy_decay = 0.01;    // nonnegative
  double recency_decay = 0.01;    // nonnegative
  int hysteresis_window = 60;     // frames remembered / looked ahead
  double hysteresis_blend = 0.8;  // weight of the current-quality component, in [0, 1]
  bool higher_is_better = true;   // score orientation used by percentile pooling

  /// Throws invalid_input_error if a parameter of the chosen method is out of
  /// range. Parameters of other methods are ignored.
  void validate() const {
    switch (method) {
      case PoolMethod::Minkowski:
        if (minkowski_p == 0.0 || !std::isfinite(minkowski_p)) {
          throw invalid_input_error("minkowski exponent must be finite and nonzero");
        }
        break;
      case PoolMethod::Percentile:
      case PoolMethod::Variation:
        if (!(k_percent > 0.0 && k_percent <= 100.0)) {
          throw invalid_input_error("k_percent must lie in (0, 100]");
        }
        break;
      case PoolMethod::Primacy:
        if (horizon < 1) throw invalid_input_error("horizon must be a positive frame count");
        if (!(primacy_decay >= 0.0)) throw invalid_input_error("primacy decay must be nonnegative");
        break;
      case PoolMethod::Recency:
        if (horizon < 1) throw invalid_input_error("horizon must be a positive frame count");
        if (!(recency_decay >= 0.0)) throw invalid_input_error("recency decay must be nonnegative");
        break;
      case PoolMethod::Hysteresis:
        if (hysteresis_window < 1) {
          throw invalid_input_error("hysteresis window must be a positive frame count");
        }
        if (!(hysteresis_blend >= 0.0 && hysteresis_blend <= 1.0)) {
          throw invalid_input_error("hysteresis blend must lie in [0, 1]");
        }
        break;
      default:
        break;
    }
  }

  std::string label() const { return std::string(method_name(method)); }

  static PoolingSpec of(PoolMethod m) {
    PoolingSpec s;
    s.method = m;
    return s;
  }
};

/// Round-trippable one-line form, e.g. "percentile k=10 hib=1". Only the
/// parameters relevant to the method are emitted, at full precision.
inline std::string format_pooling_spec(const PoolingSpec& s) {
  using detail::format_double;
  std::string out{method_name(s.method)};
  switch (s.method) {
    case PoolMethod::Minkowski:
      out += " p=" + format_double(s.minkowski_p);
      break;
    case PoolMethod::Percentile:
      out += " k=" + format_double(s.k_percent);
      out += s.higher_is_better ? " hib=1" : " hib=0";
      break;
    case PoolMethod::Variation:
      out += " k=" + format_double(s.k_percent);
      break;
    case PoolMethod::Primacy:
      out += " L=" + std::to_string(s.horizon);
      out += " decay=" + format_double(s.primacy_decay);
      break;
    case PoolMethod::Recency:
      out += " L=" + std::to_string(s.horizon);
      out += " decay=" + format_double(s.recency_decay);
      break;
    case PoolMethod::Hysteresis:
      out += " tau=" + std::to_string(s.hysteresis_window);
      out += " blend=" + format_double(s.hysteresis_blend);
      break;
    default:
      break;
  }
  return out;
}

inline PoolingSpec parse_pooling_spec(std::string_view line) {
  auto tokens = detail::split(detail::trim(line), ' ');
  if (tokens.empty() || tokens[0].empty()) {
    throw parse_error("empty pooling spec");
  }
  auto method = parse_pool_method(tokens[0]);
  if (!method) {
    throw parse_error("unknown pooling method '" + std::string(tokens[0]) + "'");
  }
  PoolingSpec spec;
  spec.method = *method;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i].empty()) continue;
    auto kv = detail::split(tokens[i], '=');
    if (kv.size() != 2) {
      throw parse_error("malformed parameter '" + std::string(tokens[i]) + "' in pooling spec");
    }
    const std::string_view key = kv[0];
    auto value = detail::parse_double(kv[1]);
    if (!value) {
      throw parse_error("non-numeric value for '" + std::string(key) + "' in pooling spec");
    }
    if (key == "p") {
      spec.minkowski_p = *value;
    } else if (key == "k") {
      spec.k_percent = *value;
    } else if (key == "hib") {
      spec.higher_is_better = (*value != 0.0);
    } else if (key == "L") {
      spec.horizon = static_cast<int>(*value);
    } else if (key == "decay") {
      if (spec.method == PoolMethod::Primacy) {
        spec.primacy_decay = *value;
      } else {
        spec.recency_decay = *value;
      }
    } else if (key == "tau") {
      spec.hysteresis_window = static_cast<int>(*value);
    } else if (key == "blend") {
      spec.hysteresis_blend = *value;
    } else {
      throw parse_error("unknown parameter '" + std::string(key) + "' in pooling spec");
    }
  }
  spec.validate();
  return spec;
}

namespace detail {

inline void require_nonempty(const FrameScoreSeries& s) {
  if (s.empty()) throw invalid_input_error("empty frame score series");
}

}  // namespace detail

/// Sample mean of the frame scores.
inline double pool_mean(const FrameScoreSeries& s) {
  detail::require_nonempty(s);
  const double sum = std::accumulate(s.begin(), s.end(), 0.0);
  return sum / static_cast<double>(s.size());
}

/// Sample median; even-length series average the two middle order statistics.
inline double pool_median(const FrameScoreSeries& s) {
  detail::require_nonempty(s);
  std::vector<double> v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Harmonic mean. Scores must be strictly positive; callers with scores on a
/// signed scale must rescale first, the library never shifts silently.
inline double pool_harmonic(const FrameScoreSeries& s) {
  detail::require_nonempty(s);
  double reciprocal_sum = 0.0;
  for (double q : s) {
    if (q <= 0.0) {
      throw domain_error("harmonic mean requires strictly positive scores");
    }
    reciprocal_sum += 1.0 / q;
  }
  return static_cast<double>(s.size()) / reciprocal_sum;
}

/// Geometric mean, computed in the log domain so long series cannot overflow.
inline double pool_geometric(const FrameScoreSeries& s) {
  detail::require_nonempty(s);
  double log_sum = 0.0;
  for (double q : s) {
    if (q <= 0.0) {
      throw domain_error("geometric mean requires strictly positive scores");
    }
    log_sum += std::log(q);
  }
  return std::exp(log_sum / static_cast<double>(s.size()));
}

/// Minkowski (power) mean with exponent p. Positive integral p admits signed
/// scores (odd roots keep the sign); any other exponent requires strictly
/// positive scores.
inline double pool_minkowski(const FrameScoreSeries& s, double p) {
  detail::require_nonempty(s);
  if (p == 0.0 || !std::isfinite(p)) {
    throw invalid_input_error("minkowski exponent must be finite and nonzero");
  }
  const bool integral = (p == std::trunc(p));
  const bool need_positive = !integral || p < 0.0;
  double power_sum = 0.0;
  for (double q : s) {
    if (need_positive && q <= 0.0) {
      throw domain_error("minkowski mean with this exponent requires strictly positive scores");
    }
    power_sum += std::pow(q, p);
  }
  const double m = power_sum / static_cast<double>(s.size());
  if (m == 0.0) return 0.0;
  if (m < 0.0) return -std::pow(-m, 1.0 / p);  // odd integral exponent
  return std::pow(m, 1.0 / p);
}

/// Mean over the worst ceil(k% * N) frames. "Worst" follows the score
/// orientation; ties keep the earlier frame.
inline double pool_percentile(const FrameScoreSeries& s, double k_percent,
                              bool higher_is_better = true) {
  detail::require_nonempty(s);
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw invalid_input_error("k_percent must lie in (0, 100]");
  }
  const std::size_t n = s.size();
  auto count = static_cast<std::size_t>(std::ceil(k_percent / 100.0 * static_cast<double>(n)));
  count = std::clamp<std::size_t>(count, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_is_better ? s[a] < s[b] : s[a] > s[b];
  });
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += s[order[i]];
  return sum / static_cast<double>(count);
}

/// Mean over the largest ceil(k% * (N-1)) absolute forward differences.
/// The result is a variation magnitude, not a score on the input scale.
inline double pool_variation(const FrameScoreSeries& s, double k_percent) {
  if (s.size() < 2) {
    throw invalid_input_error("variation pooling needs at least two frames");
  }
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw invalid_input_error("k_percent must lie in (0, 100]");
  }
  const std::size_t g = s.size() - 1;
  std::vector<double> gradients(g);
  for (std::size_t i = 0; i < g; ++i) gradients[i] = std::abs(s[i + 1] - s[i]);
  auto count = static_cast<std::size_t>(std::ceil(k_percent / 100.0 * static_cast<double>(g)));
  count = std::clamp<std::size_t>(count, 1, g);
  std::sort(gradients.begin(), gradients.end(), std::greater<double>());
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += gradients[i];
  return sum / static_cast<double>(count);
}

/// Two-group split of scalar scores. Indices are 0-based frame positions.
struct ClusterSplit {
  std::vector<std::size_t> low_group;
  std::vector<std::size_t> high_group;
  double low_mean = 0.0;
  double high_mean = 0.0;
  bool degenerate = false;  // all scores identical; low_group holds every frame
};

/// Deterministic 1-d 2-means: centroids start at (min, max), Lloyd iterations
/// run until the assignment is a fixpoint or 100 passes. Points equidistant
/// from both centroids join the low cluster. With nonconstant input both
/// clusters stay nonempty: the extremes can never cross the midpoint threshold.
inline ClusterSplit kmeans_1d_two(const FrameScoreSeries& s) {
  if (s.size() < 2) {
    throw invalid_input_error("two-cluster split needs at least two scores");
  }
  const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
  ClusterSplit out;
  if (*lo_it == *hi_it) {
    out.degenerate = true;
    out.low_mean = out.high_mean = *lo_it;
    out.low_group.resize(s.size());
    std::iota(out.low_group.begin(), out.low_group.end(), std::size_t{0});
    return out;
  }

  const std::size_t n = s.size();
  double c_low = *lo_it;
  double c_high = *hi_it;
  std::vector<char> in_low(n, 2);  // 2 = unassigned, forces a first pass
  for (int pass = 0; pass < 100; ++pass) {
    const double threshold = 0.5 * (c_low + c_high);
    bool changed = false;
    double sum_low = 0.0, sum_high = 0.0;
    std::size_t n_low = 0, n_high = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const char assign = s[i] <= threshold ? 1 : 0;
      if (assign != in_low[i]) changed = true;
      in_low[i] = assign;
      if (assign) {
        sum_low += s[i];
        ++n_low;
      } else {
        sum_high += s[i];
        ++n_high;
      }
    }
    c_low = sum_low / static_cast<double>(n_low);
    c_high = sum_high / static_cast<double>(n_high);
    if (!changed) break;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (in_low[i] ? out.low_group : out.high_group).push_back(i);
  }
  out.low_mean = c_low;
  out.high_mean = c_high;
  return out;
}

/// Cluster-weighted pooling: the low-quality group counts fully, the
/// high-quality group is downweighted by w = (1 - M_L/M_H)^2.
inline double pool_vqpooling(const FrameScoreSeries& s) {
  detail::require_nonempty(s);
  if (s.size() == 1) return s[0];
  const ClusterSplit split = kmeans_1d_two(s);
  if (split.degenerate) return s[0];
  if (split.high_mean == 0.0) {
    throw domain_error("vqpooling weight undefined: high-cluster mean is zero");
  }
  const double ratio = 1.0 - split.low_mean / split.high_mean;
  const double w = ratio * ratio;
  double sum_low = 0.0, sum_high = 0.0;
  for (std::size_t i : split.low_group) sum_low += s[i];
  for (std::size_t i : split.high_group) sum_high += s[i];
  return (sum_low + w * sum_high) /
         (static_cast<double>(split.low_group.size()) +
          w * static_cast<double>(split.high_group.size()));
}

/// Exponentially decaying weighted sum over the first min(horizon, N-1)+1
/// frames; weights renormalize to 1 so a constant series is a fixpoint for
/// every (horizon, decay).
inline double pool_primacy(const FrameScoreSeries& s, int horizon, double decay) {
  detail::require_nonempty(s);
  if (horizon < 1) throw invalid_input_error("horizon must be a positive frame count");
  if (!(decay >= 0.0)) throw invalid_input_error("decay must be nonnegative");
  const std::size_t last = std::min<std::size_t>(static_cast<std::size_t>(horizon), s.size() - 1);
  double weight_sum = 0.0, acc = 0.0;
  for (std::size_t n = 0; n <= last; ++n) {
    const double w = std::exp(-decay * static_cast<double>(n));
    weight_sum += w;
    acc += w * s[n];
  }
  return acc / weight_sum;
}

/// Mirror of pool_primacy anchored at the series end: the final frame carries
/// the largest weight. Equals pool_primacy on the reversed series.
inline double pool_recency(const FrameScoreSeries& s, int horizon, double decay) {
  detail::require_nonempty(s);
  if (horizon < 1) throw invalid_input_error("horizon must be a positive frame count");
  if (!(decay >= 0.0)) throw invalid_input_error("decay must be nonnegative");
  const std::size_t last = std::min<std::size_t>(static_cast<std::size_t>(horizon), s.size() - 1);
  const std::size_t offset = s.size() - 1 - last;
  double weight_sum = 0.0, acc = 0.0;
  for (std::size_t n = 0; n <= last; ++n) {
    const double w = std::exp(-decay * static_cast<double>(last - n));
    weight_sum += w;
    acc += w * s[offset + n];
  }
  return acc / weight_sum;
}

/// Per-frame decomposition of the hysteresis transform.
struct HysteresisTrace {
  std::vector<double> memory;    // running minimum over the trailing window
  std::vector<double> current;   // order-weighted outlook over the leading window
  std::vector<double> combined;  // blend of the two
};

/// Hysteresis transform. The memory component is the minimum score over the
/// previous `window` frames; the current component sorts the next `window`+1
/// frames (including the current one) ascending and weights them with the
/// descending half of a Gaussian (sigma = J/3, normalized to sum 1), so the
/// worst upcoming frames dominate. combined = blend*current + (1-blend)*memory.
inline HysteresisTrace hysteresis_transform(const FrameScoreSeries& s, int window,
                                            double blend) {
  detail::require_nonempty(s);
  if (window < 1) throw invalid_input_error("hysteresis window must be a positive frame count");
  if (!(blend >= 0.0 && blend <= 1.0)) {
    throw invalid_input_error("hysteresis blend must lie in [0, 1]");
  }
  const std::size_t n_frames = s.size();
  const auto tau = static_cast<std::size_t>(window);
  HysteresisTrace trace;
  trace.memory.resize(n_frames);
  trace.current.resize(n_frames);
  trace.combined.resize(n_frames);

  std::vector<double> outlook;
  outlook.reserve(tau + 1);
  for (std::size_t n = 1; n <= n_frames; ++n) {
    double memory;
    if (n == 1) {
      memory = s[0];
    } else {
      const std::size_t first = n > tau ? n - tau : 1;  // window {max(1, n-tau), ..., n-1}
      memory = s[first - 1];
      for (std::size_t k = first + 1; k <= n - 1; ++k) memory = std::min(memory, s[k - 1]);
    }

    const std::size_t last = std::min(n + tau, n_frames);  // window {n, ..., min(n+tau, N)}
    outlook.assign(s.begin() + static_cast<std::ptrdiff_t>(n - 1),
                   s.begin() + static_cast<std::ptrdiff_t>(last));
    std::sort(outlook.begin(), outlook.end());
    const std::size_t count = outlook.size();
    const double sigma = static_cast<double>(count) / 3.0;
    double weight_sum = 0.0, acc = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      const double jj = static_cast<double>(j);
      const double w = std::exp(-(jj * jj) / (2.0 * sigma * sigma));
      weight_sum += w;
      acc += w * outlook[j];
    }
    const double current = acc / weight_sum;

    trace.memory[n - 1] = memory;
    trace.current[n - 1] = current;
    trace.combined[n - 1] = blend * current + (1.0 - blend) * memory;
  }
  return trace;
}

/// Temporal average of the hysteresis-transformed scores.
inline double pool_hysteresis(const FrameScoreSeries& s, int window, double blend) {
  const HysteresisTrace trace = hysteresis_transform(s, window, blend);
  const double sum = std::accumulate(trace.combined.begin(), trace.combined.end(), 0.0);
  return sum / static_cast<double>(trace.combined.size());
}

/// Single dispatch entry over every pooling method.
inline double pool(const FrameScoreSeries& s, const PoolingSpec& spec) {
  spec.validate();
  switch (spec.method) {
    case PoolMethod::Mean: return pool_mean(s);
    case PoolMethod::Median: return pool_median(s);
    case PoolMethod::Harmonic: return pool_harmonic(s);
    case PoolMethod::Geometric: return pool_geometric(s);
    case PoolMethod::Minkowski: return pool_minkowski(s, spec.minkowski_p);
    case PoolMethod::Percentile:
      return pool_percentile(s, spec.k_percent, spec.higher_is_better);
    case PoolMethod::VQPooling: return pool_vqpooling(s);
    case PoolMethod::Variation: return pool_variation(s, spec.k_percent);
    case PoolMethod::Primacy: return pool_primacy(s, spec.horizon, spec.primacy_decay);
    case PoolMethod::Recency: return pool_recency(s, spec.horizon, spec.recency_decay);
    case PoolMethod::Hysteresis:
      return pool_hysteresis(s, spec.hysteresis_window, spec.hysteresis_blend);
  }
  throw invalid_input_error("unhandled pooling method");
}

}  // namespace vqpool
