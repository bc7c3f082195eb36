#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "vqpool/errors.hpp"

namespace vqpool {

namespace detail {

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw invalid_input_error(std::string(what) + " contains a non-finite value");
  }
}

// Generic Nelder-Mead simplex minimizer. Deterministic: the initial simplex
// perturbs each coordinate by 5% (or 0.00025 when zero) and ordering ties
// resolve by vertex index. Stops when the simplex diameter (infinity norm
// against the best vertex) drops below `diameter_tol`.
template <class F>
std::vector<double> nelder_mead(F&& objective, std::vector<double> start, int max_iterations,
                                double diameter_tol) {
  const std::size_t dim = start.size();
  std::vector<std::vector<double>> vertex(dim + 1, start);
  for (std::size_t i = 0; i < dim; ++i) {
    vertex[i + 1][i] = start[i] != 0.0 ? 1.05 * start[i] : 0.00025;
  }
  std::vector<double> value(dim + 1);
  for (std::size_t i = 0; i <= dim; ++i) value[i] = objective(vertex[i]);

  auto order_simplex = [&] {
    std::vector<std::size_t> idx(dim + 1);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    std::vector<std::vector<double>> v2(dim + 1);
    std::vector<double> f2(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
      v2[i] = std::move(vertex[idx[i]]);
      f2[i] = value[idx[i]];
    }
    vertex = std::move(v2);
    value = std::move(f2);
  };

  for (int iter = 0; iter < max_iterations; ++iter) {
    order_simplex();

    double diameter = 0.0;
    for (std::size_t i = 1; i <= dim; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        diameter = std::max(diameter, std::abs(vertex[i][d] - vertex[0][d]));
      }
    }
    if (diameter < diameter_tol) break;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t d = 0; d < dim; ++d) centroid[d] += vertex[i][d];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    auto blend = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t d = 0; d < dim; ++d) p[d] = centroid[d] + t * (centroid[d] - vertex[dim][d]);
      return p;
    };

    const std::vector<double> reflected = blend(1.0);
    const double f_reflected = objective(reflected);

    if (f_reflected < value[0]) {
      const std::vector<double> expanded = blend(2.0);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        vertex[dim] = expanded;
        value[dim] = f_expanded;
      } else {
        vertex[dim] = reflected;
        value[dim] = f_reflected;
      }
    } else if (f_reflected < value[dim - 1]) {
      vertex[dim] = reflected;
      value[dim] = f_reflected;
    } else {
      bool shrink = false;
      if (f_reflected < value[dim]) {
        const std::vector<double> outside = blend(0.5);
        const double f_outside = objective(outside);
        if (f_outside <= f_reflected) {
          vertex[dim] = outside;
          value[dim] = f_outside;
        } else {
          shrink = true;
        }
      } else {
        const std::vector<double> inside = blend(-0.5);
        const double f_inside = objective(inside);
        if (f_inside < value[dim]) {
          vertex[dim] = inside;
          value[dim] = f_inside;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (std::size_t i = 1; i <= dim; ++i) {
          for (std::size_t d = 0; d < dim; ++d) {
            vertex[i][d] = vertex[0][d] + 0.5 * (vertex[i][d] - vertex[0][d]);
          }
          value[i] = objective(vertex[i]);
        }
      }
    }
  }
  order_simplex();
  return vertex[0];
}

}  // namespace detail

/// 1-based ranks; tied values share the average of their rank span.
inline std::vector<double> rank_with_ties(std::span<const double> values) {
  if (values.empty()) throw invalid_input_error("cannot rank an empty sequence");
  detail::require_finite(values, "rank input");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;  // average of ranks i+1 .. j+1
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

/// Pearson linear correlation coefficient.
inline double plcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw invalid_input_error("correlation inputs must have equal length");
  if (x.size() < 3) throw invalid_input_error("correlation needs at least three pairs");
  detail::require_finite(x, "correlation input");
  detail::require_finite(y, "correlation input");
  const auto n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw undefined_correlation_error("correlation undefined: a sequence is constant");
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman rank-order correlation: Pearson over tie-averaged ranks.
inline double srcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw invalid_input_error("correlation inputs must have equal length");
  if (x.size() < 3) throw invalid_input_error("correlation needs at least three pairs");
  const std::vector<double> rx = rank_with_ties(x);
  const std::vector<double> ry = rank_with_ties(y);
  return plcc(rx, ry);
}

/// Monotone 4-parameter logistic f(x) = b2 + (b1-b2) / (1 + exp(-(x-b3)/|b4|)).
struct LogisticParams {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  double b4 = 1.0;
};

inline double logistic_eval(const LogisticParams& p, double x) {
  const double scale = std::max(std::abs(p.b4), 1e-300);
  return p.b2 + (p.b1 - p.b2) / (1.0 + std::exp(-(x - p.b3) / scale));
}

/// Least-squares fit of the 4-parameter logistic by Nelder-Mead, initialized
/// at b1=max(mos), b2=min(mos), b3=mean(pred), b4=std(pred). At most 2000
/// iterations; converged when the simplex diameter drops below 1e-8. The
/// best-found local optimum is returned.
inline LogisticParams fit_logistic(std::span<const double> pred, std::span<const double> mos) {
  if (pred.size() != mos.size()) {
    throw invalid_input_error("logistic fit inputs must have equal length");
  }
  if (pred.size() < 5) throw invalid_input_error("logistic fit needs at least five points");
  detail::require_finite(pred, "logistic fit input");
  detail::require_finite(mos, "logistic fit input");

  const auto n = static_cast<double>(pred.size());
  const auto [pred_min, pred_max] = std::minmax_element(pred.begin(), pred.end());
  const auto [mos_min, mos_max] = std::minmax_element(mos.begin(), mos.end());
  if (*pred_min == *pred_max) {
    throw invalid_input_error("degenerate input: predictions are constant");
  }
  if (*mos_min == *mos_max) {
    throw invalid_input_error("degenerate input: target scores are constant");
  }

  double mean_pred = 0.0;
  for (double v : pred) mean_pred += v;
  mean_pred /= n;
  double var_pred = 0.0;
  for (double v : pred) var_pred += (v - mean_pred) * (v - mean_pred);
  const double std_pred = std::sqrt(var_pred / n);

  auto sse = [&](const std::vector<double>& b) {
    const LogisticParams p{b[0], b[1], b[2], b[3]};
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double r = logistic_eval(p, pred[i]) - mos[i];
      acc += r * r;
    }
    return acc;
  };

  const std::vector<double> best =
      detail::nelder_mead(sse, {*mos_max, *mos_min, mean_pred, std_pred}, 2000, 1e-8);
  return LogisticParams{best[0], best[1], best[2], best[3]};
}

/// PLCC between logistic-remapped predictions and the target scores.
inline double plcc_after_logistic(std::span<const double> pred, std::span<const double> mos) {
  const LogisticParams params = fit_logistic(pred, mos);
  std::vector<double> mapped(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) mapped[i] = logistic_eval(params, pred[i]);
  return plcc(mapped, mos);
}

/// Sample median with the even-length averaging convention.
inline double median_of(std::span<const double> values) {
  if (values.empty()) throw invalid_input_error("median of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace vqpool
