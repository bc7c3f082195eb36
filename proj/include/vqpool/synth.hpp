#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vqpool/dataset.hpp"
#include "vqpool/detail/rng.hpp"
#include "vqpool/errors.hpp"
#include "vqpool/pooling.hpp"

namespace vqpool {

/// How the ground-truth MOS of a synthetic video is derived from its frames.
enum class MosRule {
  Mean,             // MOS = mean of the frame scores
  WorstPercentile,  // MOS = mean of the worst 10% of frames
  HysteresisLike,   // MOS = hysteresis pooling at (60, 0.8)
};

inline std::string_view mos_rule_name(MosRule r) {
  switch (r) {
    case MosRule::Mean: return "mean";
    case MosRule::WorstPercentile: return "worst-percentile";
    case MosRule::HysteresisLike: return "hysteresis-like";
  }
  return "unknown";
}

inline std::optional<MosRule> parse_mos_rule(std::string_view name) {
  if (name == "mean") return MosRule::Mean;
  if (name == "worst-percentile") return MosRule::WorstPercentile;
  if (name == "hysteresis-like") return MosRule::HysteresisLike;
  return std::nullopt;
}

struct SynthSpec {
  std::size_t n_videos = 100;
  std::size_t frames_per_video = 150;
  MosRule rule = MosRule::Mean;
  double noise_sd = 0.0;
  std::uint64_t seed = 1;
};

/// Seeded generator of frame-score trajectories with smooth drift and
/// occasional quality dips, plus MOS from the chosen rule with Gaussian noise.
/// Each video derives its own stream from (seed, video index), so the content
/// of video k does not depend on how many videos precede it. Scores stay
/// strictly positive so every pooler is applicable.
inline Dataset synth_generate(const SynthSpec& spec) {
  if (spec.n_videos == 0) throw invalid_input_error("n_videos must be positive");
  if (spec.frames_per_video == 0) throw invalid_input_error("frames_per_video must be positive");
  if (!(spec.noise_sd >= 0.0)) throw invalid_input_error("noise_sd must be nonnegative");

  constexpr double kTwoPi = 6.28318530717958647692;
  Dataset out;
  out.higher_is_better = true;
  out.records.reserve(spec.n_videos);

  int id_width = 4;
  for (std::size_t w = spec.n_videos; w >= 10000; w /= 10) ++id_width;

  for (std::size_t v = 0; v < spec.n_videos; ++v) {
    detail::Rng rng(detail::derive_seed(spec.seed, v));
    const std::size_t n = spec.frames_per_video;

    const double base = rng.uniform(1.5, 4.5);
    const double wave_amp = rng.uniform(0.0, 0.3);
    const double wave_freq = rng.uniform(0.5, 2.0);
    const double wave_phase = rng.uniform(0.0, kTwoPi);

    std::vector<double> scores(n);
    double walk = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      walk += rng.normal(0.0, 0.03);
      const double t = static_cast<double>(i) / static_cast<double>(n);
      scores[i] = base + wave_amp * std::sin(wave_phase + wave_freq * kTwoPi * t) + walk;
    }

    const int n_dips = rng.uniform_int(0, 2);
    for (int d = 0; d < n_dips; ++d) {
      const auto width = static_cast<std::size_t>(rng.uniform_int(8, 30));
      const std::size_t center = rng.index(n);
      const double depth = rng.uniform(0.3, 3.0);
      const std::size_t first = center >= width / 2 ? center - width / 2 : 0;
      const std::size_t last = std::min(n - 1, first + width);
      for (std::size_t i = first; i <= last; ++i) {
        // raised-cosine dip profile
        const double u = width == 0 ? 0.0
                                    : (static_cast<double>(i - first) /
                                           static_cast<double>(last - first + 1) * kTwoPi);
        scores[i] -= depth * 0.5 * (1.0 - std::cos(u));
      }
    }
    for (double& s : scores) s = std::max(0.1, s);

    VideoRecord rec;
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "v%0*zu", id_width, v + 1);
      rec.id = buf;
    }
    rec.frame_scores = FrameScoreSeries(scores);
    double mos = 0.0;
    switch (spec.rule) {
      case MosRule::Mean: mos = pool_mean(*rec.frame_scores); break;
      case MosRule::WorstPercentile: mos = pool_percentile(*rec.frame_scores, 10.0, true); break;
      case MosRule::HysteresisLike: mos = pool_hysteresis(*rec.frame_scores, 60, 0.8); break;
    }
    rec.mos = mos + spec.noise_sd * rng.normal();
    out.records.push_back(std::move(rec));
  }

  out.mos_low = out.records.front().mos;
  out.mos_high = out.records.front().mos;
  for (const VideoRecord& rec : out.records) {
    out.mos_low = std::min(out.mos_low, rec.mos);
    out.mos_high = std::max(out.mos_high, rec.mos);
  }
  return out;
}

}  // namespace vqpool
