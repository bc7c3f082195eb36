#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "vqpool/dataset.hpp"
#include "vqpool/detail/rng.hpp"
#include "vqpool/detail/text.hpp"
#include "vqpool/ensemble.hpp"
#include "vqpool/errors.hpp"
#include "vqpool/pooling.hpp"
#include "vqpool/stats.hpp"
#include "vqpool/svr.hpp"

namespace vqpool {

/// Ensemble method configuration inside an evaluation run. The C/gamma grid is
/// derived from the pooling-set size at training time.
struct EPoolingSpec {
  std::vector<PoolingSpec> pooling_set = default_pooling_set();
  std::size_t folds = 5;
  SvrOptions svr;
};

/// One row of an evaluation: either a plain pooler or the learned ensemble.
struct MethodSpec {
  std::string label;
  std::variant<PoolingSpec, EPoolingSpec> method;

  static MethodSpec pooler(const PoolingSpec& spec) { return {spec.label(), spec}; }
  static MethodSpec epooling(EPoolingSpec spec = {}) { return {"epooling", std::move(spec)}; }
};

struct EvalOptions {
  double train_fraction = 0.8;
  int threads = 1;
  bool negate_variation = false;  // optional sign flip for the variation pooler
};

struct TrialOutcome {
  int trial = 0;               // 1-based
  std::uint64_t seed = 0;      // derived trial seed
  bool ok = false;
  double srcc = 0.0;
  double plcc = 0.0;
  std::string error;
};

struct MethodReport {
  std::string method;
  std::vector<TrialOutcome> trials;
  std::optional<double> median_srcc;
  std::optional<double> median_plcc;
  std::size_t ok_trials = 0;
};

struct EvalReport {
  std::uint64_t seed = 0;
  int trials = 0;
  double train_fraction = 0.8;
  std::vector<MethodReport> methods;
};

/// Seeded shuffle split. Train size is round(fraction * n); the two parts are
/// disjoint and cover the dataset.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction,
                                                 std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw invalid_input_error("train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  detail::Rng rng(seed);
  rng.shuffle(perm);
  const auto n_train = static_cast<std::size_t>(
      std::lround(train_fraction * static_cast<double>(d.size())));

  Dataset train = d, test = d;
  train.records.clear();
  test.records.clear();
  for (std::size_t i = 0; i < perm.size(); ++i) {
    (i < n_train ? train : test).records.push_back(d.records[perm[i]]);
  }
  return {std::move(train), std::move(test)};
}

namespace detail {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;  // ascending dataset order
};

inline SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(perm);
  const auto n_train =
      static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// Pooled score of every video under one spec, or the first failure per video.
struct PooledColumn {
  std::vector<double> value;
  std::vector<std::string> error;  // empty string = ok
};

inline PooledColumn pool_all(const Dataset& d, const PoolingSpec& spec) {
  PooledColumn col;
  col.value.resize(d.size(), 0.0);
  col.error.resize(d.size());
  for (std::size_t v = 0; v < d.size(); ++v) {
    try {
      col.value[v] = pool(*d.records[v].frame_scores, spec);
    } catch (const error& e) {
      col.error[v] = std::string(e.what()) + " (video " + d.records[v].id + ")";
    }
  }
  return col;
}

}  // namespace detail

/// Runs the split/pool/correlate protocol: per trial, a seeded 80/20-style
/// split is drawn once and shared by every method; plain poolers score the
/// test videos directly while the ensemble trains on the training portion
/// first. SRCC and logistic-mapped PLCC are recorded per (method, trial) and
/// summarized by medians over the successful trials.
///
/// Trial seeds are derived from (seed, trial), so results are identical
/// regardless of `threads`.
inline EvalReport run_pooling_evaluation(const Dataset& dataset,
                                         std::span<const MethodSpec> methods, int trials,
                                         std::uint64_t seed, const EvalOptions& options = {}) {
  if (methods.empty()) throw invalid_input_error("no methods to evaluate");
  if (trials < 1) throw invalid_input_error("trial count must be positive");
  if (dataset.size() < 2) throw invalid_input_error("evaluation needs at least two videos");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw invalid_input_error("train fraction must lie strictly between 0 and 1");
  }
  for (const VideoRecord& rec : dataset.records) {
    if (!rec.frame_scores) {
      throw invalid_input_error("video '" + rec.id + "' has no frame scores");
    }
  }
  for (const MethodSpec& m : methods) {
    if (const auto* p = std::get_if<PoolingSpec>(&m.method)) p->validate();
  }

  // Plain poolers are pure, so their per-video scores are hoisted out of the
  // trial loop. Keyed by the full spec so duplicate methods share work.
  std::map<std::string, detail::PooledColumn> columns;
  for (const MethodSpec& m : methods) {
    if (const auto* p = std::get_if<PoolingSpec>(&m.method)) {
      const std::string key = format_pooling_spec(*p);
      if (!columns.contains(key)) columns.emplace(key, detail::pool_all(dataset, *p));
    }
  }

  std::vector<double> mos_all(dataset.size());
  for (std::size_t v = 0; v < dataset.size(); ++v) mos_all[v] = dataset.records[v].mos;

  EvalReport report;
  report.seed = seed;
  report.trials = trials;
  report.train_fraction = options.train_fraction;
  report.methods.resize(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    report.methods[m].method = methods[m].label;
    report.methods[m].trials.resize(static_cast<std::size_t>(trials));
  }

  auto run_trial = [&](int t) {
    const std::uint64_t trial_seed = detail::derive_seed(seed, static_cast<std::uint64_t>(t));
    const detail::SplitIndices split =
        detail::split_indices(dataset.size(), options.train_fraction, trial_seed);

    std::vector<double> mos_test;
    mos_test.reserve(split.test.size());
    for (std::size_t v : split.test) mos_test.push_back(mos_all[v]);

    for (std::size_t m = 0; m < methods.size(); ++m) {
      TrialOutcome outcome;
      outcome.trial = t + 1;
      outcome.seed = trial_seed;
      try {
        std::vector<double> pred;
        pred.reserve(split.test.size());
        if (const auto* p = std::get_if<PoolingSpec>(&methods[m].method)) {
          const detail::PooledColumn& col = columns.at(format_pooling_spec(*p));
          const bool negate = options.negate_variation && p->method == PoolMethod::Variation;
          for (std::size_t v : split.test) {
            if (!col.error[v].empty()) throw domain_error(col.error[v]);
            pred.push_back(negate ? -col.value[v] : col.value[v]);
          }
        } else {
          const auto& espec = std::get<EPoolingSpec>(methods[m].method);
          std::vector<FrameScoreSeries> series_train;
          std::vector<double> mos_train;
          std::vector<std::string> ids_train;
          series_train.reserve(split.train.size());
          for (std::size_t v : split.train) {
            series_train.push_back(*dataset.records[v].frame_scores);
            mos_train.push_back(mos_all[v]);
            ids_train.push_back(dataset.records[v].id);
          }
          GridSearchPlan plan = GridSearchPlan::for_dimension(espec.pooling_set.size());
          plan.folds = espec.folds;
          const EnsembleModel model =
              epooling_train(series_train, mos_train, espec.pooling_set, plan,
                             detail::derive_seed(trial_seed, 1000 + m), ids_train, espec.svr);
          for (std::size_t v : split.test) {
            pred.push_back(epooling_predict(model, *dataset.records[v].frame_scores));
          }
        }
        outcome.srcc = srcc(pred, mos_test);
        outcome.plcc = plcc_after_logistic(pred, mos_test);
        outcome.ok = true;
      } catch (const error& e) {
        outcome.ok = false;
        outcome.error = e.what();
      }
      report.methods[m].trials[static_cast<std::size_t>(t)] = std::move(outcome);
    }
  };

  const int threads = std::max(1, options.threads);
  if (threads == 1 || trials == 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) run_trial(t);
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  for (MethodReport& m : report.methods) {
    std::vector<double> srccs, plccs;
    for (const TrialOutcome& t : m.trials) {
      if (!t.ok) continue;
      srccs.push_back(t.srcc);
      plccs.push_back(t.plcc);
    }
    m.ok_trials = srccs.size();
    if (!srccs.empty()) {
      m.median_srcc = median_of(srccs);
      m.median_plcc = median_of(plccs);
    }
  }
  return report;
}

// --- report rendering ----------------------------------------------------------

/// CSV with a medians section and a per-trial appendix, both at full
/// round-trip precision. Failed trials carry nan correlations.
inline std::string emit_report_csv(const EvalReport& report) {
  using detail::format_double;
  std::string out = "method,median_srcc,median_plcc,trials\n";
  for (const MethodReport& m : report.methods) {
    out += m.method;
    out += ',';
    out += m.median_srcc ? format_double(*m.median_srcc) : "nan";
    out += ',';
    out += m.median_plcc ? format_double(*m.median_plcc) : "nan";
    out += ',';
    out += std::to_string(report.trials);
    out += '\n';
  }
  out += "method,trial,seed,srcc,plcc\n";
  for (const MethodReport& m : report.methods) {
    for (const TrialOutcome& t : m.trials) {
      out += m.method;
      out += ',';
      out += std::to_string(t.trial);
      out += ',';
      out += std::to_string(t.seed);
      out += ',';
      out += t.ok ? format_double(t.srcc) : "nan";
      out += ',';
      out += t.ok ? format_double(t.plcc) : "nan";
      out += '\n';
    }
  }
  return out;
}

namespace detail {

// Ranks of the top-k values (descending); ties resolve to the earlier method.
inline std::vector<bool> top_k_mask(const std::vector<std::optional<double>>& values,
                                    std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return *values[a] > *values[b]; });
  std::vector<bool> mask(values.size(), false);
  for (std::size_t i = 0; i < idx.size() && i < k; ++i) mask[idx[i]] = true;
  return mask;
}

}  // namespace detail

/// Markdown table with one "SRCC / PLCC" cell per method at three decimals;
/// the top three values of each metric are bold.
inline std::string emit_report_markdown(const EvalReport& report) {
  std::vector<std::optional<double>> srccs, plccs;
  for (const MethodReport& m : report.methods) {
    srccs.push_back(m.median_srcc);
    plccs.push_back(m.median_plcc);
  }
  const std::vector<bool> bold_srcc = detail::top_k_mask(srccs, 3);
  const std::vector<bool> bold_plcc = detail::top_k_mask(plccs, 3);

  std::string out = "| Method | SRCC / PLCC |\n| --- | --- |\n";
  for (std::size_t i = 0; i < report.methods.size(); ++i) {
    const MethodReport& m = report.methods[i];
    out += "| " + m.method + " | ";
    if (!m.median_srcc) {
      out += "failed";
    } else {
      const std::string s = detail::format_fixed3(*m.median_srcc);
      const std::string p = detail::format_fixed3(*m.median_plcc);
      out += bold_srcc[i] ? "**" + s + "**" : s;
      out += " / ";
      out += bold_plcc[i] ? "**" + p + "**" : p;
    }
    out += " |\n";
  }
  return out;
}

inline std::string emit_report(const EvalReport& report, std::string_view format) {
  if (format == "csv") return emit_report_csv(report);
  if (format == "markdown") return emit_report_markdown(report);
  throw invalid_input_error("unknown report format '" + std::string(format) + "'");
}

}  // namespace vqpool
