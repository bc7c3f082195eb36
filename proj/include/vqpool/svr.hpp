#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vqpool/detail/rng.hpp"
#include "vqpool/detail/text.hpp"
#include "vqpool/errors.hpp"
#include "vqpool/matrix.hpp"

namespace vqpool {

/// Per-column z-score parameters. The standard deviation is the population
/// one; zero-variance columns map every value to 0.
struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const { return mean.size(); }

  double scale_one(std::size_t col, double v) const {
    return stddev[col] > 0.0 ? (v - mean[col]) / stddev[col] : 0.0;
  }

  void apply_row(std::span<const double> in, std::span<double> out) const {
    for (std::size_t c = 0; c < mean.size(); ++c) out[c] = scale_one(c, in[c]);
  }

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

inline FeatureScaler scaler_fit(const Matrix& x) {
  if (x.rows == 0 || x.cols == 0) throw invalid_input_error("scaler needs at least one row");
  FeatureScaler s;
  s.mean.assign(x.cols, 0.0);
  s.stddev.assign(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] += x.at(r, c);
  }
  for (double& m : s.mean) m /= static_cast<double>(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = x.at(r, c) - s.mean[c];
      s.stddev[c] += d * d;
    }
  }
  for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(x.rows));
  return s;
}

inline Matrix scaler_apply(const FeatureScaler& s, const Matrix& x) {
  if (x.cols != s.dim()) throw invalid_input_error("scaler dimension mismatch");
  Matrix out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) s.apply_row(x.row(r), out.row(r));
  return out;
}

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

struct SvrOptions {
  double epsilon = 0.1;      // insensitivity tube half-width
  double tolerance = 1e-3;   // KKT violation threshold for the stopping rule
  int max_iterations = 10000;
};

/// Trained epsilon-SVR with RBF kernel. Support vectors are stored in the
/// scaled feature space; the scaler is baked into the model.
struct SvrModel {
  FeatureScaler scaler;
  Matrix support_vectors;
  std::vector<double> coefficients;  // beta_i in [-C, C]
  double bias = 0.0;
  double gamma = 0.0;
  double cost = 1.0;
  double epsilon = 0.1;
  bool converged = true;
  int iterations = 0;
  double dual_objective = 0.0;  // maximized dual value, diagnostic only

  std::size_t dim() const { return scaler.dim(); }
};

namespace detail {

// Kernel rows of the scaled training matrix, computed lazily. Small problems
// end up fully cached; large ones evict in FIFO order under a fixed budget.
class KernelCache {
 public:
  KernelCache(const Matrix& x, double gamma) : x_(x), gamma_(gamma) {
    const std::size_t budget_doubles = 12'000'000;  // ~96 MB
    capacity_ = x.rows == 0 ? 1 : std::max<std::size_t>(2, budget_doubles / std::max<std::size_t>(x.rows, 1));
    capacity_ = std::min(capacity_, std::max<std::size_t>(x.rows, 1));
    rows_.resize(x.rows);
  }

  std::span<const double> row(std::size_t i) {
    if (rows_[i].empty()) {
      if (order_.size() >= capacity_) {
        rows_[order_.front()].clear();
        rows_[order_.front()].shrink_to_fit();
        order_.erase(order_.begin());
      }
      auto& r = rows_[i];
      r.resize(x_.rows);
      const auto xi = x_.row(i);
      for (std::size_t j = 0; j < x_.rows; ++j) r[j] = rbf_kernel(xi, x_.row(j), gamma_);
      order_.push_back(i);
    }
    return rows_[i];
  }

 private:
  const Matrix& x_;
  double gamma_;
  std::size_t capacity_ = 0;
  std::vector<std::vector<double>> rows_;
  std::vector<std::size_t> order_;
};

struct SmoResult {
  std::vector<double> beta;  // alpha_i - alpha*_i
  double bias = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Sequential minimal optimization over the doubled epsilon-SVR dual: variables
// t < l carry label +1 and linear term (epsilon - y_t), variables t >= l carry
// label -1 and (epsilon + y_t). Working-set selection is the maximal violating
// pair; index scans are ascending with strict improvement, so ties resolve to
// the lowest index.
inline SmoResult smo_solve_epsilon_svr(const Matrix& scaled, std::span<const double> y, double cost,
                                       double gamma, const SvrOptions& opts) {
  const std::size_t l = scaled.rows;
  const std::size_t n2 = 2 * l;
  constexpr double kTau = 1e-12;

  std::vector<double> alpha(n2, 0.0);
  std::vector<double> grad(n2);
  std::vector<double> linear(n2);
  std::vector<int8_t> sign(n2);
  for (std::size_t t = 0; t < l; ++t) {
    linear[t] = opts.epsilon - y[t];
    sign[t] = 1;
    linear[t + l] = opts.epsilon + y[t];
    sign[t + l] = -1;
  }
  grad = linear;

  KernelCache cache(scaled, gamma);
  std::vector<double> q_i(n2), q_j(n2);
  auto fill_extended_row = [&](std::size_t s, std::vector<double>& out) {
    const auto base = cache.row(s % l);
    const double ss = sign[s];
    for (std::size_t t = 0; t < n2; ++t) out[t] = ss * sign[t] * base[t % l];
  };

  auto in_up = [&](std::size_t t) {
    return sign[t] > 0 ? alpha[t] < cost : alpha[t] > 0.0;
  };
  auto in_low = [&](std::size_t t) {
    return sign[t] > 0 ? alpha[t] > 0.0 : alpha[t] < cost;
  };

  SmoResult result;
  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n2, j = n2;
    for (std::size_t t = 0; t < n2; ++t) {
      const double v = -sign[t] * grad[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    if (i == n2 || j == n2 || g_max - g_min < opts.tolerance) {
      result.converged = true;
      break;
    }

    fill_extended_row(i, q_i);
    fill_extended_row(j, q_j);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];

    if (sign[i] != sign[j]) {
      double quad = q_i[i] + q_j[j] + 2.0 * q_i[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else {
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = -diff;
        }
      }
      if (diff > 0.0) {
        if (alpha[i] > cost) {
          alpha[i] = cost;
          alpha[j] = cost - diff;
        }
      } else {
        if (alpha[j] > cost) {
          alpha[j] = cost;
          alpha[i] = cost + diff;
        }
      }
    } else {
      double quad = q_i[i] + q_j[j] - 2.0 * q_i[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > cost) {
        if (alpha[i] > cost) {
          alpha[i] = cost;
          alpha[j] = sum - cost;
        }
      } else {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = sum;
        }
      }
      if (sum > cost) {
        if (alpha[j] > cost) {
          alpha[j] = cost;
          alpha[i] = sum - cost;
        }
      } else {
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = sum;
        }
      }
    }

    const double delta_i = alpha[i] - old_ai;
    const double delta_j = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n2; ++t) grad[t] += q_i[t] * delta_i + q_j[t] * delta_j;
  }
  result.iterations = iter;

  // rho from the KKT interval; bias = -rho.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n2; ++t) {
    const double yg = sign[t] * grad[t];
    if (alpha[t] >= cost) {
      if (sign[t] < 0) {
        upper = std::min(upper, yg);
      } else {
        lower = std::max(lower, yg);
      }
    } else if (alpha[t] <= 0.0) {
      if (sign[t] > 0) {
        upper = std::min(upper, yg);
      } else {
        lower = std::max(lower, yg);
      }
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (upper + lower);
  result.bias = -rho;
  result.beta.resize(l);
  for (std::size_t t = 0; t < l; ++t) result.beta[t] = alpha[t] - alpha[t + l];
  return result;
}

}  // namespace detail

/// Dual objective of epsilon-SVR at coefficients beta:
///   W(beta) = -1/2 sum_ij beta_i beta_j K_ij - epsilon sum|beta_i| + sum y_i beta_i.
inline double svr_dual_objective(const Matrix& scaled, std::span<const double> y,
                                 std::span<const double> beta, double gamma, double epsilon) {
  double quad = 0.0, l1 = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] == 0.0) {
      continue;
    }
    l1 += std::abs(beta[i]);
    lin += y[i] * beta[i];
    for (std::size_t j = 0; j < beta.size(); ++j) {
      if (beta[j] == 0.0) continue;
      quad += beta[i] * beta[j] * rbf_kernel(scaled.row(i), scaled.row(j), gamma);
    }
  }
  return -0.5 * quad - epsilon * l1 + lin;
}

/// Trains epsilon-SVR with RBF kernel k(a,b) = exp(-gamma * ||a-b||^2) by SMO.
/// Standardization is fitted on the training rows and baked into the model.
/// Hitting the iteration cap clears `converged`; the model is still usable.
inline SvrModel svr_train(const Matrix& x, std::span<const double> y, double cost, double gamma,
                          const SvrOptions& opts = {}) {
  if (x.rows == 0 || x.cols == 0) throw invalid_input_error("svr training needs at least one row");
  if (x.rows != y.size()) throw invalid_input_error("svr training rows and targets disagree");
  if (!(cost > 0.0) || !std::isfinite(cost)) throw invalid_input_error("svr cost must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw invalid_input_error("svr gamma must be positive");
  if (!(opts.epsilon >= 0.0)) throw invalid_input_error("svr epsilon must be nonnegative");
  for (double v : x.data) {
    if (!std::isfinite(v)) throw invalid_input_error("svr features contain a non-finite value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw invalid_input_error("svr targets contain a non-finite value");
  }

  SvrModel model;
  model.scaler = scaler_fit(x);
  model.gamma = gamma;
  model.cost = cost;
  model.epsilon = opts.epsilon;

  const Matrix scaled = scaler_apply(model.scaler, x);
  const detail::SmoResult smo = detail::smo_solve_epsilon_svr(scaled, y, cost, gamma, opts);
  model.bias = smo.bias;
  model.converged = smo.converged;
  model.iterations = smo.iterations;
  model.dual_objective = svr_dual_objective(scaled, y, smo.beta, gamma, opts.epsilon);

  std::size_t n_sv = 0;
  for (double b : smo.beta) n_sv += b != 0.0;
  model.support_vectors = Matrix(n_sv, x.cols);
  model.coefficients.reserve(n_sv);
  std::size_t r = 0;
  for (std::size_t i = 0; i < smo.beta.size(); ++i) {
    if (smo.beta[i] == 0.0) continue;
    std::copy_n(scaled.row(i).data(), x.cols, model.support_vectors.row(r).data());
    model.coefficients.push_back(smo.beta[i]);
    ++r;
  }
  return model;
}

inline double svr_predict(const SvrModel& model, std::span<const double> features) {
  if (features.size() != model.dim()) {
    throw invalid_input_error("prediction input has wrong dimension");
  }
  std::vector<double> scaled(features.size());
  model.scaler.apply_row(features, scaled);
  double acc = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.rows; ++i) {
    acc += model.coefficients[i] * rbf_kernel(model.support_vectors.row(i), scaled, model.gamma);
  }
  return acc;
}

/// One train/validate split of row indices.
struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validate;
};

/// Seeded shuffle followed by a contiguous partition into `folds` chunks.
/// Validation chunks are disjoint and cover every index.
inline std::vector<FoldSplit> kfold_indices(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw invalid_input_error("cross-validation needs at least two folds");
  if (folds > n) throw invalid_input_error("more folds than samples");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  detail::Rng rng(seed);
  rng.shuffle(perm);

  std::vector<FoldSplit> out(folds);
  const std::size_t base = n / folds;
  const std::size_t extra = n % folds;
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    out[f].validate.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                           perm.begin() + static_cast<std::ptrdiff_t>(start + size));
    out[f].train.reserve(n - size);
    out[f].train.insert(out[f].train.end(), perm.begin(),
                        perm.begin() + static_cast<std::ptrdiff_t>(start));
    out[f].train.insert(out[f].train.end(),
                        perm.begin() + static_cast<std::ptrdiff_t>(start + size), perm.end());
    start += size;
  }
  return out;
}

/// 3x3 hyperparameter grid plus the fold count for its cross-validation.
struct GridSearchPlan {
  std::array<double, 3> c_values{1.0, 10.0, 100.0};
  std::array<double, 3> gamma_values{1.0, 10.0, 100.0};
  std::size_t folds = 5;

  void validate() const {
    for (double c : c_values) {
      if (!(c > 0.0)) throw invalid_input_error("grid C values must be positive");
    }
    for (double g : gamma_values) {
      if (!(g > 0.0)) throw invalid_input_error("grid gamma values must be positive");
    }
    if (folds < 2) throw invalid_input_error("grid search needs at least two folds");
  }

  /// Conventional defaults for a given feature count: C in {1,10,100} and
  /// gamma in {1,10,100}/dim.
  static GridSearchPlan for_dimension(std::size_t dim) {
    GridSearchPlan plan;
    const auto d = static_cast<double>(std::max<std::size_t>(dim, 1));
    plan.gamma_values = {1.0 / d, 10.0 / d, 100.0 / d};
    return plan;
  }
};

namespace detail {

inline Matrix take_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), x.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(x.row(idx[r]).data(), x.cols, out.row(r).data());
  }
  return out;
}

template <class T>
std::vector<T> take(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace detail

/// Evaluates all nine (C, gamma) pairs by mean validation RMSE over seeded
/// folds, then retrains on the full data with the winner. Ties take the
/// smaller C, then the smaller gamma. Fold indices are drawn once up front, so
/// candidate evaluations are order-independent.
inline SvrModel grid_search_train(const Matrix& x, std::span<const double> y,
                                  const GridSearchPlan& plan, std::uint64_t seed,
                                  const SvrOptions& opts = {}) {
  plan.validate();
  if (x.rows != y.size()) throw invalid_input_error("grid search rows and targets disagree");
  if (x.rows < plan.folds) throw invalid_input_error("grid search needs at least `folds` rows");

  const std::vector<FoldSplit> folds = kfold_indices(x.rows, plan.folds, seed);

  std::vector<std::pair<double, double>> candidates;
  candidates.reserve(9);
  for (double c : plan.c_values) {
    for (double g : plan.gamma_values) candidates.emplace_back(c, g);
  }
  std::sort(candidates.begin(), candidates.end());  // tie-break order: smaller C, then gamma

  double best_rmse = std::numeric_limits<double>::infinity();
  std::pair<double, double> best = candidates.front();
  for (const auto& [c, g] : candidates) {
    double rmse_sum = 0.0;
    for (const FoldSplit& fold : folds) {
      const Matrix x_train = detail::take_rows(x, fold.train);
      const std::vector<double> y_train = detail::take<double>(y, fold.train);
      const SvrModel m = svr_train(x_train, y_train, c, g, opts);
      double sq = 0.0;
      for (std::size_t idx : fold.validate) {
        const double r = svr_predict(m, x.row(idx)) - y[idx];
        sq += r * r;
      }
      rmse_sum += std::sqrt(sq / static_cast<double>(fold.validate.size()));
    }
    const double rmse = rmse_sum / static_cast<double>(folds.size());
    if (rmse < best_rmse) {
      best_rmse = rmse;
      best = {c, g};
    }
  }
  return svr_train(x, y, best.first, best.second, opts);
}

// --- serialization -----------------------------------------------------------
//
// Flat text, one value space-separated per field, full round-trip precision.

inline void write_svr_model(std::ostream& os, const SvrModel& m) {
  using detail::format_double;
  os << "svr_model v1\n";
  os << "dim " << m.dim() << "\n";
  os << "scaler_mean";
  for (double v : m.scaler.mean) os << ' ' << format_double(v);
  os << "\nscaler_std";
  for (double v : m.scaler.stddev) os << ' ' << format_double(v);
  os << "\ncost " << format_double(m.cost) << "\n";
  os << "gamma " << format_double(m.gamma) << "\n";
  os << "epsilon " << format_double(m.epsilon) << "\n";
  os << "bias " << format_double(m.bias) << "\n";
  os << "converged " << (m.converged ? 1 : 0) << "\n";
  os << "support_vectors " << m.support_vectors.rows << "\n";
  for (std::size_t r = 0; r < m.support_vectors.rows; ++r) {
    os << format_double(m.coefficients[r]);
    for (double v : m.support_vectors.row(r)) os << ' ' << format_double(v);
    os << "\n";
  }
  os << "end svr_model\n";
}

namespace detail {

inline std::string read_line_or_fail(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw parse_error(std::string("model file truncated before ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline std::vector<std::string_view> expect_field(const std::string& line, std::string_view key) {
  auto tokens = split(std::string_view(line), ' ');
  if (tokens.empty() || tokens[0] != key) {
    throw parse_error("model file: expected '" + std::string(key) + "' line");
  }
  return tokens;
}

inline double field_double(std::string_view token, std::string_view key) {
  auto v = parse_double(token);
  if (!v) throw parse_error("model file: non-numeric value in '" + std::string(key) + "'");
  return *v;
}

}  // namespace detail

inline SvrModel read_svr_model(std::istream& is) {
  using namespace detail;
  const std::string header = read_line_or_fail(is, "header");
  if (header != "svr_model v1") {
    throw parse_error("model file: unsupported header '" + header + "'");
  }
  SvrModel m;
  // tokens view into the named line, which must outlive them
  const std::string dim_line = read_line_or_fail(is, "dim");
  auto dim_tokens = expect_field(dim_line, "dim");
  if (dim_tokens.size() != 2) throw parse_error("model file: malformed dim line");
  const auto dim = parse_u64(dim_tokens[1]);
  if (!dim) throw parse_error("model file: malformed dim line");

  const std::string mean_line = read_line_or_fail(is, "scaler_mean");
  const std::string std_line = read_line_or_fail(is, "scaler_std");
  auto mean_tokens = expect_field(mean_line, "scaler_mean");
  auto std_tokens = expect_field(std_line, "scaler_std");
  if (mean_tokens.size() != *dim + 1 || std_tokens.size() != *dim + 1) {
    throw parse_error("model file: scaler arity disagrees with dim");
  }
  for (std::size_t i = 1; i < mean_tokens.size(); ++i) {
    m.scaler.mean.push_back(field_double(mean_tokens[i], "scaler_mean"));
    m.scaler.stddev.push_back(field_double(std_tokens[i], "scaler_std"));
  }

  auto read_scalar = [&](std::string_view key) {
    const std::string line = read_line_or_fail(is, "scalar field");
    auto tokens = expect_field(line, key);
    if (tokens.size() != 2) throw parse_error("model file: malformed '" + std::string(key) + "' line");
    return field_double(tokens[1], key);
  };
  m.cost = read_scalar("cost");
  m.gamma = read_scalar("gamma");
  m.epsilon = read_scalar("epsilon");
  m.bias = read_scalar("bias");
  m.converged = read_scalar("converged") != 0.0;

  const std::string sv_line = read_line_or_fail(is, "support_vectors");
  auto sv_tokens = expect_field(sv_line, "support_vectors");
  if (sv_tokens.size() != 2) throw parse_error("model file: malformed support_vectors line");
  const auto n_sv = parse_u64(sv_tokens[1]);
  if (!n_sv) throw parse_error("model file: malformed support_vectors line");

  m.support_vectors = Matrix(*n_sv, *dim);
  m.coefficients.reserve(*n_sv);
  for (std::size_t r = 0; r < *n_sv; ++r) {
    const std::string line = read_line_or_fail(is, "support vector row");
    auto tokens = split(std::string_view(line), ' ');
    if (tokens.size() != *dim + 1) {
      throw parse_error("model file: support vector row has wrong arity");
    }
    m.coefficients.push_back(field_double(tokens[0], "coefficient"));
    for (std::size_t c = 0; c < *dim; ++c) {
      m.support_vectors.at(r, c) = field_double(tokens[c + 1], "support vector");
    }
  }
  if (read_line_or_fail(is, "trailer") != "end svr_model") {
    throw parse_error("model file: missing 'end svr_model' trailer");
  }
  return m;
}

inline std::string svr_model_to_string(const SvrModel& m) {
  std::ostringstream os;
  write_svr_model(os, m);
  return os.str();
}

inline SvrModel svr_model_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_svr_model(is);
}

}  // namespace vqpool
