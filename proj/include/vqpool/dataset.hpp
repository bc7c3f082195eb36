#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqpool/detail/text.hpp"
#include "vqpool/errors.hpp"
#include "vqpool/matrix.hpp"
#include "vqpool/series.hpp"

namespace vqpool {

struct VideoRecord {
  std::string id;
  double mos = 0.0;
  std::optional<FrameScoreSeries> frame_scores;
  std::optional<Matrix> frame_features;
};

/// A validated collection of videos with a declared score orientation.
struct Dataset {
  std::vector<VideoRecord> records;
  double mos_low = 0.0;
  double mos_high = 0.0;
  bool higher_is_better = true;

  std::size_t size() const { return records.size(); }
};

/// Per-frame quality scores keyed by video id, in file appearance order.
struct ScoresFragment {
  std::vector<std::pair<std::string, std::vector<double>>> videos;
};

/// Per-frame feature rows keyed by video id, in file appearance order.
struct FeaturesFragment {
  std::vector<std::pair<std::string, Matrix>> videos;
};

/// MOS values keyed by video id, in file appearance order.
struct MosFragment {
  std::vector<std::pair<std::string, double>> videos;
};

namespace detail {

struct CsvReader {
  CsvReader(std::istream& stream, std::string label) : is(stream), file_label(std::move(label)) {}

  std::istream& is;
  std::string file_label;
  std::size_t line_no = 0;
  std::string line;

  bool next() {
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!trim(line).empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw parse_error(file_label + " line " + std::to_string(line_no) + ": " + what);
  }
};

inline void expect_header(CsvReader& r, std::string_view expected) {
  if (!r.next()) throw parse_error(r.file_label + ": missing header line");
  if (trim(r.line) != expected) {
    r.fail("expected header '" + std::string(expected) + "', got '" + std::string(trim(r.line)) + "'");
  }
}

inline double cell_double(CsvReader& r, std::string_view cell, const char* what) {
  auto v = parse_double(cell);
  if (!v) r.fail(std::string("non-numeric ") + what + " '" + std::string(trim(cell)) + "'");
  return *v;
}

inline std::size_t cell_index(CsvReader& r, std::string_view cell) {
  auto v = parse_int(cell);
  if (!v || *v < 0) r.fail("invalid frame_index '" + std::string(trim(cell)) + "'");
  return static_cast<std::size_t>(*v);
}

// Frames may arrive in any row order; per video the indices must be exactly
// 0..N-1 with no gaps or duplicates.
template <class Row>
std::vector<Row> collect_dense_frames(CsvReader& r, const std::string& id,
                                      std::map<std::size_t, Row>&& by_index) {
  std::vector<Row> out;
  out.reserve(by_index.size());
  std::size_t expected = 0;
  for (auto& [index, row] : by_index) {
    if (index != expected) {
      throw parse_error(r.file_label + ": video '" + id + "' is missing frame_index " +
                        std::to_string(expected));
    }
    out.push_back(std::move(row));
    ++expected;
  }
  return out;
}

}  // namespace detail

/// Reads a frame-scores CSV: header `video_id,frame_index,score`, 0-based
/// dense frame indices per video.
inline ScoresFragment load_frame_scores(std::istream& is, const std::string& file_label = "scores file") {
  detail::CsvReader r{is, file_label};
  detail::expect_header(r, "video_id,frame_index,score");

  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, double>> frames;
  while (r.next()) {
    auto cells = detail::split(r.line, ',');
    if (cells.size() != 3) r.fail("expected 3 columns, got " + std::to_string(cells.size()));
    const std::string id{detail::trim(cells[0])};
    if (id.empty()) r.fail("empty video_id");
    const std::size_t index = detail::cell_index(r, cells[1]);
    const double score = detail::cell_double(r, cells[2], "score");
    auto [it, inserted] = frames.try_emplace(id);
    if (inserted) order.push_back(id);
    if (!it->second.emplace(index, score).second) {
      r.fail("duplicate frame_index " + std::to_string(index) + " for video '" + id + "'");
    }
  }
  if (order.empty()) throw parse_error(file_label + ": no data rows");

  ScoresFragment out;
  for (const std::string& id : order) {
    out.videos.emplace_back(id,
                            detail::collect_dense_frames(r, id, std::move(frames.at(id))));
  }
  return out;
}

/// Reads a features CSV: header `video_id,frame_index,f0,f1,...` with constant
/// feature arity across the whole file.
inline FeaturesFragment load_features(std::istream& is, const std::string& file_label = "features file") {
  detail::CsvReader r{is, file_label};
  if (!r.next()) throw parse_error(file_label + ": missing header line");
  auto header = detail::split(detail::trim(r.line), ',');
  if (header.size() < 3 || detail::trim(header[0]) != "video_id" ||
      detail::trim(header[1]) != "frame_index") {
    r.fail("expected header 'video_id,frame_index,f0,...'");
  }
  const std::size_t arity = header.size() - 2;
  for (std::size_t i = 0; i < arity; ++i) {
    if (detail::trim(header[i + 2]) != "f" + std::to_string(i)) {
      r.fail("feature columns must be named f0,f1,... in order");
    }
  }

  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> frames;
  while (r.next()) {
    auto cells = detail::split(r.line, ',');
    if (cells.size() != arity + 2) {
      r.fail("expected " + std::to_string(arity + 2) + " columns, got " +
             std::to_string(cells.size()));
    }
    const std::string id{detail::trim(cells[0])};
    if (id.empty()) r.fail("empty video_id");
    const std::size_t index = detail::cell_index(r, cells[1]);
    std::vector<double> row(arity);
    for (std::size_t i = 0; i < arity; ++i) {
      row[i] = detail::cell_double(r, cells[i + 2], "feature");
    }
    auto [it, inserted] = frames.try_emplace(id);
    if (inserted) order.push_back(id);
    if (!it->second.emplace(index, std::move(row)).second) {
      r.fail("duplicate frame_index " + std::to_string(index) + " for video '" + id + "'");
    }
  }
  if (order.empty()) throw parse_error(file_label + ": no data rows");

  FeaturesFragment out;
  for (const std::string& id : order) {
    auto rows = detail::collect_dense_frames(r, id, std::move(frames.at(id)));
    Matrix m(rows.size(), arity);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    out.videos.emplace_back(id, std::move(m));
  }
  return out;
}

/// Reads a MOS CSV: header `video_id,mos`, one row per video.
inline MosFragment load_mos(std::istream& is, const std::string& file_label = "mos file") {
  detail::CsvReader r{is, file_label};
  detail::expect_header(r, "video_id,mos");
  MosFragment out;
  std::set<std::string> seen;
  while (r.next()) {
    auto cells = detail::split(r.line, ',');
    if (cells.size() != 2) r.fail("expected 2 columns, got " + std::to_string(cells.size()));
    const std::string id{detail::trim(cells[0])};
    if (id.empty()) r.fail("empty video_id");
    if (!seen.insert(id).second) r.fail("duplicate video_id '" + id + "'");
    out.videos.emplace_back(id, detail::cell_double(r, cells[1], "mos"));
  }
  if (out.videos.empty()) throw parse_error(file_label + ": no data rows");
  return out;
}

inline ScoresFragment load_frame_scores_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open scores file '" + path + "'");
  return load_frame_scores(f, path);
}

inline FeaturesFragment load_features_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open features file '" + path + "'");
  return load_features(f, path);
}

inline MosFragment load_mos_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open mos file '" + path + "'");
  return load_mos(f, path);
}

namespace detail {

inline std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

}  // namespace detail

/// Joins the fragments into a validated Dataset. Record order follows the MOS
/// file. Every id must appear in the MOS fragment and in at least one of the
/// per-frame fragments; id mismatches fail with the full offender list.
inline Dataset assemble_dataset(const MosFragment& mos, const ScoresFragment* scores,
                                const FeaturesFragment* features, bool higher_is_better = true) {
  if (!scores && !features) {
    throw invalid_input_error("dataset needs frame scores or frame features");
  }

  std::map<std::string, const std::vector<double>*> scores_by_id;
  if (scores) {
    for (const auto& [id, frames] : scores->videos) scores_by_id.emplace(id, &frames);
  }
  std::map<std::string, const Matrix*> features_by_id;
  if (features) {
    for (const auto& [id, m] : features->videos) features_by_id.emplace(id, &m);
  }
  std::set<std::string> mos_ids;
  for (const auto& [id, value] : mos.videos) {
    if (!mos_ids.insert(id).second) throw data_error("duplicate video_id '" + id + "' in mos data");
    (void)value;
  }

  std::vector<std::string> missing_frames, missing_mos;
  for (const auto& [id, value] : mos.videos) {
    (void)value;
    if (!scores_by_id.contains(id) && !features_by_id.contains(id)) missing_frames.push_back(id);
  }
  for (const auto& [id, frames] : scores_by_id) {
    (void)frames;
    if (!mos_ids.contains(id)) missing_mos.push_back(id);
  }
  for (const auto& [id, m] : features_by_id) {
    (void)m;
    if (!mos_ids.contains(id) && !scores_by_id.contains(id)) missing_mos.push_back(id);
  }
  std::sort(missing_mos.begin(), missing_mos.end());
  if (!missing_frames.empty()) {
    throw data_error("videos without frame data: " + detail::join_ids(missing_frames));
  }
  if (!missing_mos.empty()) {
    throw data_error("videos without MOS: " + detail::join_ids(missing_mos));
  }

  Dataset out;
  out.higher_is_better = higher_is_better;
  out.records.reserve(mos.videos.size());
  for (const auto& [id, value] : mos.videos) {
    VideoRecord rec;
    rec.id = id;
    rec.mos = value;
    if (auto it = scores_by_id.find(id); it != scores_by_id.end()) {
      rec.frame_scores = FrameScoreSeries(*it->second);
    }
    if (auto it = features_by_id.find(id); it != features_by_id.end()) {
      if (rec.frame_scores && rec.frame_scores->size() != it->second->rows) {
        throw data_error("video '" + id + "' has " + std::to_string(rec.frame_scores->size()) +
                         " frame scores but " + std::to_string(it->second->rows) +
                         " feature rows");
      }
      rec.frame_features = *it->second;
    }
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

// --- writers (synthetic data and fixtures) ------------------------------------

inline void write_frame_scores(std::ostream& os, const Dataset& d) {
  os << "video_id,frame_index,score\n";
  for (const VideoRecord& rec : d.records) {
    if (!rec.frame_scores) continue;
    const auto& s = *rec.frame_scores;
    for (std::size_t i = 0; i < s.size(); ++i) {
      os << rec.id << ',' << i << ',' << detail::format_double(s[i]) << '\n';
    }
  }
}

inline void write_mos(std::ostream& os, const Dataset& d) {
  os << "video_id,mos\n";
  for (const VideoRecord& rec : d.records) {
    os << rec.id << ',' << detail::format_double(rec.mos) << '\n';
  }
}

}  // namespace vqpool
