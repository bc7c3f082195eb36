// Command-line entry point: pooling, evaluation, ensemble training/prediction,
// and synthetic data generation over the CSV formats described in the README.
//
// Exit codes: 0 success, 1 usage or file-format errors, 2 domain/data errors,
// 3 internal errors.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vqpool/vqpool.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct PoolerFlags {
  double minkowski_p = 2.0;
  double percentile_k = 10.0;
  double variation_k = 10.0;
  int horizon = 180;
  double primacy_decay = 0.01;
  double recency_decay = 0.01;
  int hysteresis_window = 60;
  double hysteresis_blend = 0.8;
  bool lower_is_better = false;

  vqpool::PoolingSpec build(vqpool::PoolMethod method) const {
    vqpool::PoolingSpec spec;
    spec.method = method;
    spec.minkowski_p = minkowski_p;
    spec.k_percent = method == vqpool::PoolMethod::Variation ? variation_k : percentile_k;
    spec.horizon = horizon;
    spec.primacy_decay = primacy_decay;
    spec.recency_decay = recency_decay;
    spec.hysteresis_window = hysteresis_window;
    spec.hysteresis_blend = hysteresis_blend;
    spec.higher_is_better = !lower_is_better;
    spec.validate();
    return spec;
  }
};

void add_pooler_flags(CLI::App* cmd, PoolerFlags& f) {
  cmd->add_option("--minkowski-p", f.minkowski_p, "Minkowski exponent")->capture_default_str();
  cmd->add_option("--percentile-k", f.percentile_k, "Percentile selection size in (0,100]")
      ->capture_default_str();
  cmd->add_option("--variation-k", f.variation_k, "Variation selection size in (0,100]")
      ->capture_default_str();
  cmd->add_option("--horizon", f.horizon, "Primacy/recency frame horizon")->capture_default_str();
  cmd->add_option("--primacy-decay", f.primacy_decay, "Primacy exponential decay")
      ->capture_default_str();
  cmd->add_option("--recency-decay", f.recency_decay, "Recency exponential decay")
      ->capture_default_str();
  cmd->add_option("--hysteresis-window", f.hysteresis_window, "Hysteresis frame window")
      ->capture_default_str();
  cmd->add_option("--hysteresis-blend", f.hysteresis_blend,
                  "Hysteresis blend of the current-quality component, in [0,1]")
      ->capture_default_str();
  cmd->add_flag("--lower-is-better", f.lower_is_better,
                "Scores decrease with quality (affects percentile pooling)");
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  for (std::string_view tok : vqpool::detail::split(csv, ',')) {
    tok = vqpool::detail::trim(tok);
    if (!tok.empty()) out.emplace_back(tok);
  }
  return out;
}

vqpool::PoolingSpec spec_from_name(const std::string& name, const PoolerFlags& flags) {
  const auto method = vqpool::parse_pool_method(name);
  if (!method) throw vqpool::invalid_input_error("unknown pooling method '" + name + "'");
  return flags.build(*method);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw vqpool::data_error("cannot open output file '" + path + "'");
  f << content;
  if (!f) throw vqpool::data_error("failed writing output file '" + path + "'");
}

// --- pool ---------------------------------------------------------------------

struct PoolArgs {
  std::string scores_path;
  std::string method;
  std::string out_path;
  PoolerFlags flags;
};

int run_pool(const PoolArgs& args) {
  const vqpool::PoolingSpec spec = spec_from_name(args.method, args.flags);
  const vqpool::ScoresFragment scores = vqpool::load_frame_scores_file(args.scores_path);
  std::string out = "video_id,score\n";
  for (const auto& [id, frames] : scores.videos) {
    try {
      const double q = vqpool::pool(vqpool::FrameScoreSeries(frames), spec);
      out += id + "," + vqpool::detail::format_double(q) + "\n";
    } catch (const vqpool::error& e) {
      throw vqpool::domain_error("video '" + id + "': " + e.what());
    }
  }
  write_output(args.out_path, out);
  return kExitOk;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  std::string scores_path;
  std::string mos_path;
  std::string methods =
      "mean,median,harmonic,geometric,minkowski,percentile,vqpooling,variation,primacy,recency,"
      "hysteresis,epooling";
  std::string epooling_set = "mean,vqpooling,hysteresis";
  int trials = 100;
  std::uint64_t seed = 1;
  double train_fraction = 0.8;
  std::string format = "markdown";
  std::string out_path;
  int threads = 1;
  bool negate_variation = false;
  std::size_t folds = 5;
  double svr_epsilon = 0.1;
  PoolerFlags flags;
};

std::vector<vqpool::MethodSpec> build_methods(const EvaluateArgs& args) {
  std::vector<vqpool::MethodSpec> methods;
  for (const std::string& name : split_list(args.methods)) {
    if (name == "epooling") {
      vqpool::EPoolingSpec espec;
      espec.pooling_set.clear();
      for (const std::string& pooler : split_list(args.epooling_set)) {
        espec.pooling_set.push_back(spec_from_name(pooler, args.flags));
      }
      if (espec.pooling_set.empty()) {
        throw vqpool::invalid_input_error("epooling set must not be empty");
      }
      espec.folds = args.folds;
      espec.svr.epsilon = args.svr_epsilon;
      methods.push_back(vqpool::MethodSpec::epooling(std::move(espec)));
    } else {
      methods.push_back(vqpool::MethodSpec::pooler(spec_from_name(name, args.flags)));
    }
  }
  if (methods.empty()) throw vqpool::invalid_input_error("no methods selected");
  return methods;
}

int run_evaluate(const EvaluateArgs& args) {
  const std::vector<vqpool::MethodSpec> methods = build_methods(args);
  if (args.format != "csv" && args.format != "markdown") {
    throw vqpool::invalid_input_error("unknown report format '" + args.format + "'");
  }

  const vqpool::ScoresFragment scores = vqpool::load_frame_scores_file(args.scores_path);
  const vqpool::MosFragment mos = vqpool::load_mos_file(args.mos_path);
  const vqpool::Dataset dataset =
      vqpool::assemble_dataset(mos, &scores, nullptr, !args.flags.lower_is_better);

  vqpool::EvalOptions options;
  options.train_fraction = args.train_fraction;
  options.threads = args.threads;
  options.negate_variation = args.negate_variation;
  const vqpool::EvalReport report =
      vqpool::run_pooling_evaluation(dataset, methods, args.trials, args.seed, options);
  write_output(args.out_path, vqpool::emit_report(report, args.format));
  return kExitOk;
}

// --- ensemble-train / ensemble-predict -----------------------------------------

struct EnsembleTrainArgs {
  std::string scores_path;
  std::string features_path;
  std::string mos_path;
  std::string model_out;
  std::string poolers = "mean,vqpooling,hysteresis";
  std::uint64_t seed = 1;
  std::size_t folds = 5;
  double svr_epsilon = 0.1;
  bool nested_split = false;
  PoolerFlags flags;
};

int run_ensemble_train(const EnsembleTrainArgs& args) {
  std::vector<vqpool::PoolingSpec> pooling_set;
  for (const std::string& name : split_list(args.poolers)) {
    pooling_set.push_back(spec_from_name(name, args.flags));
  }
  if (pooling_set.empty()) throw vqpool::invalid_input_error("pooling set must not be empty");

  const vqpool::MosFragment mos = vqpool::load_mos_file(args.mos_path);
  vqpool::SvrOptions svr_opts;
  svr_opts.epsilon = args.svr_epsilon;

  vqpool::EnsembleModel model;
  if (!args.features_path.empty()) {
    const vqpool::FeaturesFragment features = vqpool::load_features_file(args.features_path);
    const vqpool::Dataset dataset = vqpool::assemble_dataset(mos, nullptr, &features);

    std::vector<vqpool::Matrix> feats;
    std::vector<double> targets;
    std::vector<std::string> ids;
    for (const vqpool::VideoRecord& rec : dataset.records) {
      feats.push_back(*rec.frame_features);
      targets.push_back(rec.mos);
      ids.push_back(rec.id);
    }

    // Nested-split mode trains phase 1 on one half of the videos and the
    // fusion on frame predictions for the other half, so the fusion never
    // sees in-sample frame predictions. Default is in-sample: both phases
    // use every training video.
    std::vector<std::size_t> phase1_idx(dataset.size()), phase2_idx(dataset.size());
    std::iota(phase1_idx.begin(), phase1_idx.end(), std::size_t{0});
    phase2_idx = phase1_idx;
    if (args.nested_split) {
      std::vector<std::size_t> perm(dataset.size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      vqpool::detail::Rng rng(vqpool::detail::derive_seed(args.seed, 0x5e57));
      rng.shuffle(perm);
      const std::size_t half = (dataset.size() + 1) / 2;
      phase1_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
      phase2_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
      std::sort(phase1_idx.begin(), phase1_idx.end());
      std::sort(phase2_idx.begin(), phase2_idx.end());
    }

    std::vector<vqpool::Matrix> phase1_feats;
    std::vector<double> phase1_mos;
    for (std::size_t i : phase1_idx) {
      phase1_feats.push_back(feats[i]);
      phase1_mos.push_back(targets[i]);
    }
    const vqpool::SvrModel predictor = vqpool::train_frame_predictor(
        phase1_feats, phase1_mos, vqpool::GridSearchPlan::for_dimension(feats.front().cols),
        args.seed, svr_opts);

    std::vector<vqpool::FrameScoreSeries> series;
    std::vector<double> series_mos;
    std::vector<std::string> series_ids;
    for (std::size_t i : phase2_idx) {
      series.push_back(vqpool::predict_frame_scores(predictor, feats[i]));
      series_mos.push_back(targets[i]);
      series_ids.push_back(ids[i]);
    }
    vqpool::GridSearchPlan plan = vqpool::GridSearchPlan::for_dimension(pooling_set.size());
    plan.folds = args.folds;
    model = vqpool::epooling_train(series, series_mos, pooling_set, plan, args.seed, series_ids,
                                   svr_opts);
    model.frame_predictor = predictor;
  } else {
    const vqpool::ScoresFragment scores = vqpool::load_frame_scores_file(args.scores_path);
    const vqpool::Dataset dataset = vqpool::assemble_dataset(mos, &scores, nullptr);
    std::vector<vqpool::FrameScoreSeries> series;
    std::vector<double> targets;
    std::vector<std::string> ids;
    for (const vqpool::VideoRecord& rec : dataset.records) {
      series.push_back(*rec.frame_scores);
      targets.push_back(rec.mos);
      ids.push_back(rec.id);
    }
    vqpool::GridSearchPlan plan = vqpool::GridSearchPlan::for_dimension(pooling_set.size());
    plan.folds = args.folds;
    model = vqpool::epooling_train(series, targets, pooling_set, plan, args.seed, ids, svr_opts);
  }

  if (!model.fusion.converged ||
      (model.frame_predictor && !model.frame_predictor->converged)) {
    std::cerr << "warning: SVR training hit the iteration cap; the stored model carries "
                 "converged=0\n";
  }

  std::ofstream f(args.model_out, std::ios::binary);
  if (!f) throw vqpool::data_error("cannot open model file '" + args.model_out + "'");
  vqpool::write_ensemble_model(f, model);
  if (!f) throw vqpool::data_error("failed writing model file '" + args.model_out + "'");
  return kExitOk;
}

struct EnsemblePredictArgs {
  std::string model_path;
  std::string scores_path;
  std::string features_path;
  std::string out_path;
};

int run_ensemble_predict(const EnsemblePredictArgs& args) {
  std::ifstream f(args.model_path);
  if (!f) throw vqpool::data_error("cannot open model file '" + args.model_path + "'");
  const vqpool::EnsembleModel model = vqpool::read_ensemble_model(f);

  std::string out = "video_id,score\n";
  if (!args.features_path.empty()) {
    if (!model.frame_predictor) {
      throw vqpool::data_error(
          "model was trained from frame scores; it cannot consume feature files");
    }
    const vqpool::FeaturesFragment features = vqpool::load_features_file(args.features_path);
    for (const auto& [id, m] : features.videos) {
      try {
        const vqpool::FrameScoreSeries series =
            vqpool::predict_frame_scores(*model.frame_predictor, m);
        out += id + "," + vqpool::detail::format_double(vqpool::epooling_predict(model, series)) +
               "\n";
      } catch (const vqpool::parse_error&) {
        throw;
      } catch (const vqpool::error& e) {
        throw vqpool::data_error("video '" + id + "': " + e.what());
      }
    }
  } else {
    const vqpool::ScoresFragment scores = vqpool::load_frame_scores_file(args.scores_path);
    for (const auto& [id, frames] : scores.videos) {
      try {
        const double q = vqpool::epooling_predict(model, vqpool::FrameScoreSeries(frames));
        out += id + "," + vqpool::detail::format_double(q) + "\n";
      } catch (const vqpool::error& e) {
        throw vqpool::domain_error("video '" + id + "': " + e.what());
      }
    }
  }
  write_output(args.out_path, out);
  return kExitOk;
}

// --- synth --------------------------------------------------------------------

struct SynthArgs {
  std::size_t n_videos = 100;
  std::size_t frames = 150;
  std::string rule = "mean";
  double noise_sd = 0.0;
  std::uint64_t seed = 1;
  std::string out_prefix;
};

int run_synth(const SynthArgs& args) {
  const auto rule = vqpool::parse_mos_rule(args.rule);
  if (!rule) throw vqpool::invalid_input_error("unknown mos rule '" + args.rule + "'");
  vqpool::SynthSpec spec;
  spec.n_videos = args.n_videos;
  spec.frames_per_video = args.frames;
  spec.rule = *rule;
  spec.noise_sd = args.noise_sd;
  spec.seed = args.seed;
  const vqpool::Dataset dataset = vqpool::synth_generate(spec);

  const std::string scores_path = args.out_prefix + "_scores.csv";
  const std::string mos_path = args.out_prefix + "_mos.csv";
  std::ofstream sf(scores_path, std::ios::binary);
  if (!sf) throw vqpool::data_error("cannot open output file '" + scores_path + "'");
  vqpool::write_frame_scores(sf, dataset);
  std::ofstream mf(mos_path, std::ios::binary);
  if (!mf) throw vqpool::data_error("cannot open output file '" + mos_path + "'");
  vqpool::write_mos(mf, dataset);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vqpool: temporal pooling of per-frame video quality scores"};
  app.require_subcommand(1);

  PoolArgs pool_args;
  CLI::App* pool_cmd = app.add_subcommand("pool", "Pool per-frame scores into one value per video");
  pool_cmd->add_option("--scores", pool_args.scores_path, "Frame-scores CSV")->required();
  pool_cmd->add_option("--method", pool_args.method,
                       "Pooling method (mean, median, harmonic, geometric, minkowski, percentile, "
                       "vqpooling, variation, primacy, recency, hysteresis)")
      ->required();
  pool_cmd->add_option("--out", pool_args.out_path, "Output path (default: stdout)");
  add_pooler_flags(pool_cmd, pool_args.flags);

  EvaluateArgs eval_args;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "Seeded split/trial evaluation with median SRCC/PLCC");
  eval_cmd->add_option("--scores", eval_args.scores_path, "Frame-scores CSV")->required();
  eval_cmd->add_option("--mos", eval_args.mos_path, "MOS CSV")->required();
  eval_cmd->add_option("--methods", eval_args.methods, "Comma-separated method list")
      ->capture_default_str();
  eval_cmd->add_option("--epooling-set", eval_args.epooling_set,
                       "Poolers fused by the epooling method")
      ->capture_default_str();
  eval_cmd->add_option("--trials", eval_args.trials, "Number of split trials")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_args.seed, "Master seed")->capture_default_str();
  eval_cmd->add_option("--train-fraction", eval_args.train_fraction, "Training fraction in (0,1)")
      ->capture_default_str();
  eval_cmd->add_option("--format", eval_args.format, "Report format: markdown or csv")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out_path, "Output path (default: stdout)");
  eval_cmd->add_option("--threads", eval_args.threads, "Worker threads for trials")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--negate-variation", eval_args.negate_variation,
                     "Negate variation-pooled scores before correlating");
  eval_cmd->add_option("--folds", eval_args.folds, "Cross-validation folds for epooling")
      ->capture_default_str();
  eval_cmd->add_option("--svr-epsilon", eval_args.svr_epsilon, "SVR tube half-width")
      ->capture_default_str();
  add_pooler_flags(eval_cmd, eval_args.flags);

  EnsembleTrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("ensemble-train", "Train the ensemble pooler");
  auto* train_scores = train_cmd->add_option("--scores", train_args.scores_path, "Frame-scores CSV");
  auto* train_features =
      train_cmd->add_option("--features", train_args.features_path, "Frame-features CSV");
  train_scores->excludes(train_features);
  train_cmd->add_option("--mos", train_args.mos_path, "MOS CSV")->required();
  train_cmd->add_option("--model-out", train_args.model_out, "Model output path")->required();
  train_cmd->add_option("--poolers", train_args.poolers, "Comma-separated pooling set")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "Seed")->capture_default_str();
  train_cmd->add_option("--folds", train_args.folds, "Cross-validation folds")
      ->capture_default_str();
  train_cmd->add_option("--svr-epsilon", train_args.svr_epsilon, "SVR tube half-width")
      ->capture_default_str();
  train_cmd->add_flag("--nested-split", train_args.nested_split,
                      "Train the frame predictor and the fusion on disjoint video halves");
  add_pooler_flags(train_cmd, train_args.flags);

  EnsemblePredictArgs predict_args;
  CLI::App* predict_cmd =
      app.add_subcommand("ensemble-predict", "Predict with a trained ensemble model");
  predict_cmd->add_option("--model", predict_args.model_path, "Model file")->required();
  auto* predict_scores =
      predict_cmd->add_option("--scores", predict_args.scores_path, "Frame-scores CSV");
  auto* predict_features =
      predict_cmd->add_option("--features", predict_args.features_path, "Frame-features CSV");
  predict_scores->excludes(predict_features);
  predict_cmd->add_option("--out", predict_args.out_path, "Output path (default: stdout)");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scores+MOS dataset");
  synth_cmd->add_option("--n-videos", synth_args.n_videos, "Number of videos")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--frames", synth_args.frames, "Frames per video")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--rule", synth_args.rule,
                        "MOS rule: mean, worst-percentile, or hysteresis-like")
      ->capture_default_str();
  synth_cmd->add_option("--noise-sd", synth_args.noise_sd, "MOS noise standard deviation")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--out-prefix", synth_args.out_prefix,
                        "Prefix for <prefix>_scores.csv and <prefix>_mos.csv")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (pool_cmd->parsed()) return run_pool(pool_args);
    if (eval_cmd->parsed()) return run_evaluate(eval_args);
    if (train_cmd->parsed()) {
      if (train_args.scores_path.empty() && train_args.features_path.empty()) {
        std::cerr << "ensemble-train: either --scores or --features is required\n";
        return kExitUsage;
      }
      return run_ensemble_train(train_args);
    }
    if (predict_cmd->parsed()) {
      if (predict_args.scores_path.empty() && predict_args.features_path.empty()) {
        std::cerr << "ensemble-predict: either --scores or --features is required\n";
        return kExitUsage;
      }
      return run_ensemble_predict(predict_args);
    }
    if (synth_cmd->parsed()) return run_synth(synth_args);
    std::cerr << "no subcommand\n";
    return kExitUsage;
  } catch (const vqpool::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const vqpool::invalid_input_error& e) {
    // Parameter/preparation problems are usage errors before any data is
    // touched; once a run is underway they count as data errors. The
    // distinction that matters to scripts is usage vs domain, so invalid
    // configuration reports as usage.
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const vqpool::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
