#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vqpool/detail/text.hpp"
#include "vqpool/errors.hpp"
#include "vqpool/matrix.hpp"
#include "vqpool/pooling.hpp"
#include "vqpool/series.hpp"
#include "vqpool/svr.hpp"

namespace vqpool {

/// The empirically chosen trio of input poolers for ensemble fusion.
inline std::vector<PoolingSpec> default_pooling_set() {
  return {PoolingSpec::of(PoolMethod::Mean), PoolingSpec::of(PoolMethod::VQPooling),
          PoolingSpec::of(PoolMethod::Hysteresis)};
}

/// Trained ensemble pooler: an ordered pooling set whose per-video scores are
/// fused by a regressor. When the model was trained from per-frame feature
/// vectors, the first-phase frame predictor travels with it.
struct EnsembleModel {
  std::vector<PoolingSpec> pooling_set;
  SvrModel fusion;
  std::optional<SvrModel> frame_predictor;
  std::uint64_t seed = 0;
  std::uint64_t training_fingerprint = 0;
};

/// Phase 1: maps per-frame feature vectors to frame-level predicted quality.
/// Every frame inherits the MOS of its video as the regression target.
inline SvrModel train_frame_predictor(std::span<const Matrix> features_per_video,
                                      std::span<const double> video_mos,
                                      const GridSearchPlan& plan, std::uint64_t seed,
                                      const SvrOptions& opts = {}) {
  if (features_per_video.empty()) throw invalid_input_error("empty training set");
  if (features_per_video.size() != video_mos.size()) {
    throw invalid_input_error("feature matrices and MOS counts disagree");
  }
  const std::size_t dim = features_per_video.front().cols;
  std::size_t total_frames = 0;
  for (std::size_t v = 0; v < features_per_video.size(); ++v) {
    const Matrix& f = features_per_video[v];
    if (f.rows == 0) {
      throw invalid_input_error("video #" + std::to_string(v) + " has no frames of features");
    }
    if (f.cols != dim) {
      throw data_error("video #" + std::to_string(v) + " has feature dimension " +
                       std::to_string(f.cols) + ", expected " + std::to_string(dim));
    }
    total_frames += f.rows;
  }

  Matrix x(total_frames, dim);
  std::vector<double> y;
  y.reserve(total_frames);
  std::size_t r = 0;
  for (std::size_t v = 0; v < features_per_video.size(); ++v) {
    const Matrix& f = features_per_video[v];
    for (std::size_t i = 0; i < f.rows; ++i, ++r) {
      std::copy_n(f.row(i).data(), dim, x.row(r).data());
      y.push_back(video_mos[v]);
    }
  }
  return grid_search_train(x, y, plan, seed, opts);
}

/// One prediction per frame row, order preserved.
inline FrameScoreSeries predict_frame_scores(const SvrModel& model, const Matrix& features) {
  if (features.rows == 0) throw invalid_input_error("no frames to predict");
  if (features.cols != model.dim()) {
    throw data_error("feature dimension " + std::to_string(features.cols) +
                     " does not match the model dimension " + std::to_string(model.dim()));
  }
  std::vector<double> scores;
  scores.reserve(features.rows);
  for (std::size_t r = 0; r < features.rows; ++r) {
    scores.push_back(svr_predict(model, features.row(r)));
  }
  return FrameScoreSeries(std::move(scores));
}

namespace detail {

inline std::string video_label(std::span<const std::string> ids, std::size_t index) {
  return index < ids.size() ? ids[index] : "#" + std::to_string(index);
}

}  // namespace detail

/// Phase 2: applies each pooler of `pooling_set` to every training series,
/// stacks the scores into a quality vector per video, and grid-search-trains
/// the fusion regressor on (quality vector, MOS) pairs.
inline EnsembleModel epooling_train(std::span<const FrameScoreSeries> series,
                                    std::span<const double> mos,
                                    std::vector<PoolingSpec> pooling_set,
                                    const GridSearchPlan& plan, std::uint64_t seed,
                                    std::span<const std::string> ids = {},
                                    const SvrOptions& opts = {}) {
  if (pooling_set.empty()) throw invalid_input_error("empty pooling set");
  if (series.size() != mos.size()) throw invalid_input_error("series and MOS counts disagree");
  if (series.size() < 5) throw invalid_input_error("ensemble training needs at least five videos");
  for (const PoolingSpec& spec : pooling_set) spec.validate();

  Matrix quality(series.size(), pooling_set.size());
  for (std::size_t v = 0; v < series.size(); ++v) {
    for (std::size_t p = 0; p < pooling_set.size(); ++p) {
      try {
        quality.at(v, p) = pool(series[v], pooling_set[p]);
      } catch (const error& e) {
        throw domain_error("pooling '" + pooling_set[p].label() + "' failed on video " +
                           detail::video_label(ids, v) + ": " + e.what());
      }
    }
  }

  EnsembleModel model;
  model.pooling_set = std::move(pooling_set);
  model.seed = seed;
  model.fusion = grid_search_train(quality, mos, plan, seed, opts);

  std::uint64_t h = detail::fnv1a_init();
  for (const PoolingSpec& spec : model.pooling_set) detail::fnv1a_mix(h, format_pooling_spec(spec));
  for (std::size_t v = 0; v < series.size(); ++v) {
    detail::fnv1a_mix(h, mos[v]);
    for (double q : series[v]) detail::fnv1a_mix(h, q);
  }
  model.training_fingerprint = h;
  return model;
}

/// Applies each pooler in the stored order and returns the fusion prediction.
inline double epooling_predict(const EnsembleModel& model, const FrameScoreSeries& series) {
  std::vector<double> quality(model.pooling_set.size());
  for (std::size_t p = 0; p < model.pooling_set.size(); ++p) {
    quality[p] = pool(series, model.pooling_set[p]);
  }
  return svr_predict(model.fusion, quality);
}

// --- serialization -----------------------------------------------------------

inline void write_ensemble_model(std::ostream& os, const EnsembleModel& m) {
  os << "epooling_model v1\n";
  os << "seed " << m.seed << "\n";
  os << "fingerprint " << m.training_fingerprint << "\n";
  os << "poolers " << m.pooling_set.size() << "\n";
  for (const PoolingSpec& spec : m.pooling_set) os << format_pooling_spec(spec) << "\n";
  os << "frame_predictor " << (m.frame_predictor ? 1 : 0) << "\n";
  if (m.frame_predictor) write_svr_model(os, *m.frame_predictor);
  write_svr_model(os, m.fusion);
  os << "end epooling_model\n";
}

inline EnsembleModel read_ensemble_model(std::istream& is) {
  using namespace detail;
  const std::string header = read_line_or_fail(is, "header");
  if (header != "epooling_model v1") {
    throw parse_error("model file: unsupported header '" + header + "'");
  }
  EnsembleModel m;

  auto read_u64_field = [&](std::string_view key) {
    const std::string line = read_line_or_fail(is, "header field");
    auto tokens = expect_field(line, key);
    if (tokens.size() != 2) throw parse_error("model file: malformed '" + std::string(key) + "' line");
    auto v = parse_u64(tokens[1]);
    if (!v) throw parse_error("model file: malformed '" + std::string(key) + "' line");
    return *v;
  };
  m.seed = read_u64_field("seed");
  m.training_fingerprint = read_u64_field("fingerprint");
  const std::uint64_t n_poolers = read_u64_field("poolers");
  if (n_poolers == 0) throw parse_error("model file: empty pooling set");
  for (std::uint64_t i = 0; i < n_poolers; ++i) {
    m.pooling_set.push_back(parse_pooling_spec(read_line_or_fail(is, "pooling spec")));
  }
  const std::uint64_t has_predictor = read_u64_field("frame_predictor");
  if (has_predictor) m.frame_predictor = read_svr_model(is);
  m.fusion = read_svr_model(is);
  if (read_line_or_fail(is, "trailer") != "end epooling_model") {
    throw parse_error("model file: missing 'end epooling_model' trailer");
  }
  return m;
}

inline std::string ensemble_model_to_string(const EnsembleModel& m) {
  std::ostringstream os;
  write_ensemble_model(os, m);
  return os.str();
}

inline EnsembleModel ensemble_model_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_ensemble_model(is);
}

}  // namespace vqpool
