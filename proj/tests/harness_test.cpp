#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "support/testutil.hpp"
#include "vqpool/dataset.hpp"
#include "vqpool/detail/text.hpp"
#include "vqpool/evaluate.hpp"
#include "vqpool/synth.hpp"

using namespace vqpool;

namespace {

ScoresFragment scores_from(const std::string& text) {
  std::istringstream is(text);
  return load_frame_scores(is);
}

MosFragment mos_from(const std::string& text) {
  std::istringstream is(text);
  return load_mos(is);
}

FeaturesFragment features_from(const std::string& text) {
  std::istringstream is(text);
  return load_features(is);
}

const char* kTwoVideoScores =
    "video_id,frame_index,score\n"
    "a,0,1.0\n"
    "a,1,2.0\n"
    "b,1,4.5\n"  // rows may arrive out of order
    "b,0,4.0\n";

}  // namespace

TEST(LoadFrameScores, WellFormedFixture) {
  const ScoresFragment f = scores_from(kTwoVideoScores);
  ASSERT_EQ(f.videos.size(), 2u);
  EXPECT_EQ(f.videos[0].first, "a");
  EXPECT_EQ(f.videos[0].second, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(f.videos[1].second, (std::vector<double>{4.0, 4.5}));
}

TEST(LoadFrameScores, CrlfAndBlankLinesTolerated) {
  const ScoresFragment f =
      scores_from("video_id,frame_index,score\r\na,0,1.5\r\n\r\na,1,2.5\r\n");
  ASSERT_EQ(f.videos.size(), 1u);
  EXPECT_EQ(f.videos[0].second, (std::vector<double>{1.5, 2.5}));
}

TEST(LoadFrameScores, ErrorsCarryLineNumbers) {
  try {
    scores_from("video_id,frame_index,score\na,0,1.0\na,1,oops\n");
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("oops"), std::string::npos);
  }
}

TEST(LoadFrameScores, StructuralErrors) {
  EXPECT_THROW(scores_from("frame,score\n1,2\n"), parse_error);           // wrong header
  EXPECT_THROW(scores_from("video_id,frame_index,score\n"), parse_error); // no rows
  EXPECT_THROW(scores_from("video_id,frame_index,score\na,0,1\na,0,2\n"), parse_error);  // dup
  EXPECT_THROW(scores_from("video_id,frame_index,score\na,0,1\na,2,2\n"), parse_error);  // gap
  EXPECT_THROW(scores_from("video_id,frame_index,score\na,0,1,9\n"), parse_error);  // arity
}

TEST(LoadMos, Errors) {
  EXPECT_THROW(mos_from("video_id,mos\na,1.0\na,2.0\n"), parse_error);  // duplicate id
  EXPECT_THROW(mos_from("video_id,mos\na,x\n"), parse_error);
  EXPECT_NO_THROW(mos_from("video_id,mos\na,1.0\nb,2.0\n"));
}

TEST(LoadFeatures, ArityAndNaming) {
  const FeaturesFragment f =
      features_from("video_id,frame_index,f0,f1\na,0,1.0,2.0\na,1,3.0,4.0\n");
  ASSERT_EQ(f.videos.size(), 1u);
  EXPECT_EQ(f.videos[0].second.rows, 2u);
  EXPECT_EQ(f.videos[0].second.cols, 2u);
  EXPECT_DOUBLE_EQ(f.videos[0].second.at(1, 1), 4.0);

  EXPECT_THROW(features_from("video_id,frame_index,g0\na,0,1.0\n"), parse_error);
  EXPECT_THROW(features_from("video_id,frame_index,f0,f1\na,0,1.0\n"), parse_error);
}

TEST(AssembleDataset, JoinsByMosOrder) {
  const ScoresFragment scores = scores_from(kTwoVideoScores);
  const MosFragment mos = mos_from("video_id,mos\nb,4.25\na,1.5\n");
  const Dataset d = assemble_dataset(mos, &scores, nullptr);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.records[0].id, "b");  // mos file order wins
  EXPECT_EQ(d.records[1].id, "a");
  EXPECT_DOUBLE_EQ(d.mos_low, 1.5);
  EXPECT_DOUBLE_EQ(d.mos_high, 4.25);
  ASSERT_TRUE(d.records[0].frame_scores.has_value());
  EXPECT_EQ(d.records[0].frame_scores->size(), 2u);
}

TEST(AssembleDataset, UnmatchedIdsListed) {
  const ScoresFragment scores = scores_from(kTwoVideoScores);
  try {
    assemble_dataset(mos_from("video_id,mos\na,1.0\nb,2.0\nghost,3.0\nwraith,4.0\n"), &scores,
                     nullptr);
    FAIL() << "expected data_error";
  } catch (const data_error& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("wraith"), std::string::npos);
  }
  EXPECT_THROW(assemble_dataset(mos_from("video_id,mos\na,1.0\n"), &scores, nullptr), data_error);
}

TEST(AssembleDataset, FrameCountMismatchBetweenScoresAndFeatures) {
  const ScoresFragment scores = scores_from(kTwoVideoScores);
  const FeaturesFragment features = features_from(
      "video_id,frame_index,f0\na,0,1\na,1,2\nb,0,3\n");  // b has 1 feature row, 2 scores
  const MosFragment mos = mos_from("video_id,mos\na,1.0\nb,2.0\n");
  EXPECT_THROW(assemble_dataset(mos, &scores, &features), data_error);
}

TEST(SplitDataset, SizesAndDeterminism) {
  const Dataset d = synth_generate({.n_videos = 10, .frames_per_video = 4, .seed = 3});
  const auto [train, test] = split_dataset(d, 0.8, 42);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);

  std::set<std::string> ids;
  for (const VideoRecord& r : train.records) ids.insert(r.id);
  for (const VideoRecord& r : test.records) ids.insert(r.id);
  EXPECT_EQ(ids.size(), 10u);  // disjoint and covering

  const auto [train2, test2] = split_dataset(d, 0.8, 42);
  for (std::size_t i = 0; i < train.size(); ++i) {
    EXPECT_EQ(train.records[i].id, train2.records[i].id);
  }

  const Dataset d5 = synth_generate({.n_videos = 5, .frames_per_video = 4, .seed = 3});
  const auto [t5, v5] = split_dataset(d5, 0.8, 1);
  EXPECT_EQ(t5.size(), 4u);
  EXPECT_EQ(v5.size(), 1u);

  EXPECT_THROW(split_dataset(d, 0.0, 1), invalid_input_error);
  EXPECT_THROW(split_dataset(d, 1.0, 1), invalid_input_error);
}

TEST(RunPoolingEvaluation, MeanRuleConstructionIsPerfect) {
  const Dataset d = synth_generate(
      {.n_videos = 30, .frames_per_video = 25, .rule = MosRule::Mean, .noise_sd = 0.0, .seed = 5});
  const std::vector<MethodSpec> methods{MethodSpec::pooler(PoolingSpec::of(PoolMethod::Mean))};
  const EvalReport report = run_pooling_evaluation(d, methods, 10, 99);
  ASSERT_TRUE(report.methods[0].median_srcc.has_value());
  EXPECT_DOUBLE_EQ(*report.methods[0].median_srcc, 1.0);
  EXPECT_EQ(report.methods[0].ok_trials, 10u);
}

TEST(RunPoolingEvaluation, DeterministicAcrossRunsAndThreads) {
  const Dataset d = synth_generate(
      {.n_videos = 25, .frames_per_video = 20, .rule = MosRule::Mean, .noise_sd = 0.3, .seed = 6});
  const std::vector<MethodSpec> methods{
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Mean)),
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Hysteresis)),
      MethodSpec::epooling(),
  };
  const EvalReport a = run_pooling_evaluation(d, methods, 4, 7);
  const EvalReport b = run_pooling_evaluation(d, methods, 4, 7);
  EvalOptions threaded;
  threaded.threads = 3;
  const EvalReport c = run_pooling_evaluation(d, methods, 4, 7, threaded);
  EXPECT_EQ(emit_report_csv(a), emit_report_csv(b));
  EXPECT_EQ(emit_report_csv(a), emit_report_csv(c));
}

TEST(RunPoolingEvaluation, AllMethodsShareEachTrialSplit) {
  const Dataset d = synth_generate(
      {.n_videos = 20, .frames_per_video = 10, .rule = MosRule::Mean, .noise_sd = 0.1, .seed = 14});
  const std::vector<MethodSpec> methods{
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Mean)),
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Median)),
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Recency)),
  };
  const EvalReport report = run_pooling_evaluation(d, methods, 6, 15);
  for (int t = 0; t < 6; ++t) {
    const std::uint64_t seed = report.methods[0].trials[t].seed;
    for (const MethodReport& m : report.methods) {
      EXPECT_EQ(m.trials[t].seed, seed);  // one derived seed, one split, every method
    }
  }
}

TEST(RunPoolingEvaluation, ConstantPredictionsSurfaceUndefinedCorrelation) {
  // constant scores with distinct MOS: every trial records the failure
  std::string mos_text = "video_id,mos\n";
  std::string score_text = "video_id,frame_index,score\n";
  for (int v = 0; v < 10; ++v) {
    const std::string id = "v" + std::to_string(v);
    for (int i = 0; i < 3; ++i) {
      score_text += id + "," + std::to_string(i) + ",2.0\n";
    }
    mos_text += id + "," + std::to_string(v) + ".0\n";
  }
  const ScoresFragment scores = scores_from(score_text);
  const MosFragment mos = mos_from(mos_text);
  const Dataset d = assemble_dataset(mos, &scores, nullptr);

  const std::vector<MethodSpec> methods{MethodSpec::pooler(PoolingSpec::of(PoolMethod::Mean))};
  const EvalReport report = run_pooling_evaluation(d, methods, 3, 11);
  EXPECT_EQ(report.methods[0].ok_trials, 0u);
  EXPECT_FALSE(report.methods[0].median_srcc.has_value());
  for (const TrialOutcome& t : report.methods[0].trials) {
    EXPECT_FALSE(t.ok);
    EXPECT_FALSE(t.error.empty());
  }
  // a method that fails every trial renders as failed, not as a number
  EXPECT_NE(emit_report_markdown(report).find("failed"), std::string::npos);
}

TEST(RunPoolingEvaluation, VariationSignFlipNegatesSrcc) {
  const Dataset d = synth_generate(
      {.n_videos = 25, .frames_per_video = 30, .rule = MosRule::Mean, .noise_sd = 0.1, .seed = 8});
  const std::vector<MethodSpec> methods{MethodSpec::pooler(PoolingSpec::of(PoolMethod::Variation))};
  const EvalReport plain = run_pooling_evaluation(d, methods, 3, 12);
  EvalOptions flip;
  flip.negate_variation = true;
  const EvalReport negated = run_pooling_evaluation(d, methods, 3, 12, flip);
  for (int t = 0; t < 3; ++t) {
    ASSERT_TRUE(plain.methods[0].trials[t].ok);
    EXPECT_NEAR(plain.methods[0].trials[t].srcc, -negated.methods[0].trials[t].srcc, 1e-12);
  }
}

TEST(EmitReport, SingleMethodRow) {
  const Dataset d = synth_generate(
      {.n_videos = 20, .frames_per_video = 10, .rule = MosRule::Mean, .noise_sd = 0.0, .seed = 9});
  const EvalReport report = run_pooling_evaluation(
      d, std::vector<MethodSpec>{MethodSpec::pooler(PoolingSpec::of(PoolMethod::Median))}, 2, 1);
  const std::string md = emit_report_markdown(report);
  EXPECT_NE(md.find("| median |"), std::string::npos);
  // header + separator + exactly one data row
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 3);
}

TEST(EmitReport, TopThreeBoldPerColumn) {
  const Dataset d = synth_generate(
      {.n_videos = 40, .frames_per_video = 30, .rule = MosRule::Mean, .noise_sd = 0.4, .seed = 10});
  const std::vector<MethodSpec> methods{
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Mean)),
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Median)),
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Percentile)),
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Variation)),
  };
  const EvalReport report = run_pooling_evaluation(d, methods, 5, 2);
  const std::string md = emit_report_markdown(report);

  std::size_t bold_srcc = 0, bold_plcc = 0;
  std::istringstream lines(md);
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);  // skip header + separator
  while (std::getline(lines, line)) {
    const auto slash = line.find(" / ");
    ASSERT_NE(slash, std::string::npos);
    bold_srcc += line.substr(0, slash).find("**") != std::string::npos;
    bold_plcc += line.substr(slash).find("**") != std::string::npos;
  }
  EXPECT_EQ(bold_srcc, 3u);
  EXPECT_EQ(bold_plcc, 3u);
}

TEST(EmitReport, CsvRoundTripsMediansExactly) {
  const Dataset d = synth_generate(
      {.n_videos = 30, .frames_per_video = 20, .rule = MosRule::Mean, .noise_sd = 0.2, .seed = 11});
  const std::vector<MethodSpec> methods{
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Mean)),
      MethodSpec::pooler(PoolingSpec::of(PoolMethod::Hysteresis)),
  };
  const EvalReport report = run_pooling_evaluation(d, methods, 7, 3);
  const std::string csv = emit_report_csv(report);

  // parse back: medians section then per-trial appendix
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  ASSERT_EQ(line, "method,median_srcc,median_plcc,trials");
  struct Parsed {
    double median_srcc, median_plcc;
    std::vector<double> srccs;
  };
  std::map<std::string, Parsed> parsed;
  while (std::getline(lines, line) && line != "method,trial,seed,srcc,plcc") {
    const auto cells = detail::split(line, ',');
    ASSERT_EQ(cells.size(), 4u);
    Parsed p;
    p.median_srcc = *detail::parse_double(cells[1]);
    p.median_plcc = *detail::parse_double(cells[2]);
    parsed.emplace(std::string(cells[0]), p);
    EXPECT_EQ(*detail::parse_int(cells[3]), 7);
  }
  while (std::getline(lines, line)) {
    const auto cells = detail::split(line, ',');
    ASSERT_EQ(cells.size(), 5u);
    parsed.at(std::string(cells[0])).srccs.push_back(*detail::parse_double(cells[3]));
  }
  for (const MethodReport& m : report.methods) {
    const Parsed& p = parsed.at(m.method);
    ASSERT_EQ(p.srccs.size(), 7u);
    EXPECT_EQ(p.median_srcc, *m.median_srcc);  // exact: full-precision round trip
    EXPECT_EQ(p.median_plcc, *m.median_plcc);
    EXPECT_EQ(median_of(p.srccs), p.median_srcc);  // medians recompute from the appendix
  }
}

TEST(SynthGenerate, DeterministicAndParseable) {
  const SynthSpec spec{.n_videos = 8, .frames_per_video = 12, .rule = MosRule::WorstPercentile,
                       .noise_sd = 0.1, .seed = 77};
  const Dataset a = synth_generate(spec);
  const Dataset b = synth_generate(spec);
  std::ostringstream sa, sb, ma, mb;
  write_frame_scores(sa, a);
  write_frame_scores(sb, b);
  write_mos(ma, a);
  write_mos(mb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(ma.str(), mb.str());

  // the emitted text round-trips through the loaders
  const ScoresFragment scores = scores_from(sa.str());
  const MosFragment mos = mos_from(ma.str());
  const Dataset back = assemble_dataset(mos, &scores, nullptr);
  EXPECT_EQ(back.size(), 8u);
  for (std::size_t v = 0; v < back.size(); ++v) {
    EXPECT_EQ(*back.records[v].frame_scores, *a.records[v].frame_scores);
    EXPECT_DOUBLE_EQ(back.records[v].mos, a.records[v].mos);
  }
}

TEST(SynthGenerate, EachRuleIsRecoveredByItsPooler) {
  struct Case {
    MosRule rule;
    PoolMethod method;
  };
  for (const Case& c : {Case{MosRule::Mean, PoolMethod::Mean},
                        Case{MosRule::WorstPercentile, PoolMethod::Percentile},
                        Case{MosRule::HysteresisLike, PoolMethod::Hysteresis}}) {
    const Dataset d = synth_generate(
        {.n_videos = 25, .frames_per_video = 30, .rule = c.rule, .noise_sd = 0.0, .seed = 19});
    const EvalReport report = run_pooling_evaluation(
        d, std::vector<MethodSpec>{MethodSpec::pooler(PoolingSpec::of(c.method))}, 5, 20);
    ASSERT_TRUE(report.methods[0].median_srcc.has_value());
    EXPECT_DOUBLE_EQ(*report.methods[0].median_srcc, 1.0)
        << "rule " << mos_rule_name(c.rule) << " not recovered";
  }
}

TEST(SynthGenerate, SingleFrameVideos) {
  const Dataset d = synth_generate({.n_videos = 5, .frames_per_video = 1, .seed = 13});
  for (const VideoRecord& rec : d.records) {
    const FrameScoreSeries& s = *rec.frame_scores;
    ASSERT_EQ(s.size(), 1u);
    for (PoolMethod m : kAllPoolMethods) {
      if (m == PoolMethod::Variation) {
        EXPECT_THROW(pool(s, PoolingSpec::of(m)), invalid_input_error);
      } else {
        EXPECT_NEAR(pool(s, PoolingSpec::of(m)), s[0], 1e-12) << method_name(m);
      }
    }
  }
}
