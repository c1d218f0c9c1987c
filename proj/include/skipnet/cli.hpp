#pragma once

// Command-line front end: synth, train, predict, evaluate, baseline,
// ensemble and gradcheck.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skipnet/checkpoint.hpp"
#include "skipnet/config.hpp"
#include "skipnet/synth.hpp"
#include "skipnet/toy.hpp"
#include "skipnet/trainer.hpp"

namespace skipnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("SKIPNET_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t pos = 0;
    const unsigned long long s = std::stoull(v, &pos);
    if (pos == std::string(v).size()) return s;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string("SKIPNET_SEED is not an unsigned integer: '") + v + "'");
}

inline void emit_report(std::ostream& out, const std::string& name, const EvalReport& report,
                        const std::string& json_path) {
  out << format_reports({{name, report}});
  if (!json_path.empty()) {
    auto f = open_output(json_path);
    Json j = report.to_json(true);
    j["model"] = name;
    f << j.dump(2) << '\n';
  }
}

}  // namespace detail

// Runs one subcommand. Returns 0 on success, 1 on data or runtime errors and
// 2 on usage errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sequential skip prediction with an encoder/predictor LSTM model", "skipnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "skipnet 1.0");

  // synth
  SynthParams synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic catalog, session log and schema");
  synth_cmd->add_option("--sessions", synth.sessions, "Number of sessions")->required();
  synth_cmd->add_option("--tracks", synth.tracks, "Number of tracks")->required();
  auto* synth_seed = synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--alpha", synth.alpha, "Weight of the taste match");
  synth_cmd->add_option("--beta", synth.beta, "Weight of the position drift");
  synth_cmd->add_option("--gamma", synth.gamma, "Weight of the previous outcome");

  // shared data paths
  std::string catalog_path, sessions_path, schema_path, checkpoint_path, out_path, json_path, config_path;

  // train
  TrainRunConfig run_cfg;
  ModelConfig model_cfg;
  std::string profile = "paper";
  bool paper_padding = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write the best-validation checkpoint");
  train_cmd->add_option("--catalog", catalog_path, "Track catalog CSV")->required();
  train_cmd->add_option("--sessions", sessions_path, "Training sessions (JSON lines)")->required();
  train_cmd->add_option("--schema", schema_path, "Playback feature schema (JSON)")->required();
  train_cmd->add_option("--out", checkpoint_path, "Checkpoint path")->required();
  train_cmd->add_option("--config", config_path, "key = value configuration file");
  train_cmd->add_option("--profile", profile, "Layer size preset")->check(CLI::IsMember({"paper", "desk"}));
  auto* o_batch = train_cmd->add_option("--batch-size", run_cfg.batch_size, "Sessions per batch");
  auto* o_lr = train_cmd->add_option("--lr", run_cfg.learning_rate, "Adam learning rate");
  auto* o_epochs = train_cmd->add_option("--epochs", run_cfg.epochs, "Passes over the training split");
  auto* o_steps = train_cmd->add_option("--max-steps", run_cfg.max_steps, "Stop after this many updates");
  auto* o_seed = train_cmd->add_option("--seed", run_cfg.seed, "Random seed");
  auto* o_val = train_cmd->add_option("--val-fraction", run_cfg.validation_fraction, "Validation share");
  auto* o_time = train_cmd->add_option("--time-limit", run_cfg.time_limit_seconds, "Wall-clock budget (s)");
  auto* o_every = train_cmd->add_option("--checkpoint-every", run_cfg.checkpoint_every, "Steps between checkpoints");
  auto* o_paper = train_cmd->add_flag("--paper-padding", paper_padding, "Run padded steps through the LSTMs");
  train_cmd->add_option("--report", json_path, "Write per-epoch report JSON here");

  // predict
  std::size_t predict_batch = 256;
  auto* predict_cmd = app.add_subcommand("predict", "Write skip predictions for the upcoming half of sessions");
  predict_cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  predict_cmd->add_option("--catalog", catalog_path, "Track catalog CSV")->required();
  predict_cmd->add_option("--schema", schema_path, "Playback feature schema")->required();
  predict_cmd->add_option("--sessions", sessions_path, "Sessions (JSON lines)")->required();
  predict_cmd->add_option("--out", out_path, "Prediction file (JSON lines)")->required();
  predict_cmd->add_option("--batch-size", predict_batch, "Sessions per forward pass");

  // evaluate
  std::vector<std::string> pred_paths;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions or a checkpoint on labelled sessions");
  eval_cmd->add_option("--sessions", sessions_path, "Labelled sessions (JSON lines)")->required();
  auto* eval_preds = eval_cmd->add_option("--preds", pred_paths, "Prediction file")->expected(1);
  auto* eval_ck = eval_cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint");
  eval_cmd->add_option("--catalog", catalog_path, "Track catalog CSV (with --checkpoint)");
  eval_cmd->add_option("--schema", schema_path, "Playback feature schema (with --checkpoint)");
  eval_cmd->add_option("--json", json_path, "Write the report as JSON");
  eval_preds->excludes(eval_ck);

  // baseline
  std::string mode_name;
  std::string train_sessions_path;
  auto* base_cmd = app.add_subcommand("baseline", "Score a rule-based baseline");
  base_cmd->add_option("--mode", mode_name, "all_skip | skip_rate | last_action")
      ->required()
      ->check(CLI::IsMember({"all_skip", "skip_rate", "last_action"}));
  base_cmd->add_option("--sessions", sessions_path, "Labelled sessions to score")->required();
  base_cmd->add_option("--train", train_sessions_path, "Training sessions (skip_rate statistics)");
  base_cmd->add_option("--out", out_path, "Also write the predictions here");
  base_cmd->add_option("--json", json_path, "Write the report as JSON");

  // ensemble
  auto* ens_cmd = app.add_subcommand("ensemble", "Majority-vote an odd number of prediction files");
  ens_cmd->add_option("--preds", pred_paths, "Prediction files")->required()->expected(1, -1);
  ens_cmd->add_option("--sessions", sessions_path, "Labelled sessions to score")->required();
  ens_cmd->add_option("--out", out_path, "Write the voted predictions here");
  ens_cmd->add_option("--json", json_path, "Write the report as JSON");

  // gradcheck
  std::uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every model gradient on a toy batch");
  auto* gc_seed_opt = gc_cmd->add_option("--seed", gc_seed, "Random seed");
  gc_cmd->add_option("--tolerance", gc_tol, "Relative error tolerance");
  gc_cmd->add_flag("--paper-padding", paper_padding, "Check the paper padding mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "skipnet 1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*synth_cmd) {
      if (!synth_seed->count()) {
        if (auto s = detail::env_seed()) synth.seed = *s;
      }
      const SynthFiles files = synth_write(synth_generate(synth), synth_out);
      out << "wrote " << files.catalog << "\nwrote " << files.sessions << "\nwrote " << files.schema << '\n';
      return kExitOk;
    }

    if (*train_cmd) {
      // Precedence: flags, then SKIPNET_SEED, then the config file, then defaults.
      model_cfg = profile == "desk" ? ModelConfig::desk() : ModelConfig::paper();
      const TrainRunConfig flags = run_cfg;
      const bool flag_padding = paper_padding;
      run_cfg = TrainRunConfig{};
      if (!config_path.empty()) apply_config(load_config(config_path), run_cfg, model_cfg);
      if (auto s = detail::env_seed()) run_cfg.seed = *s;
      if (o_batch->count()) run_cfg.batch_size = flags.batch_size;
      if (o_lr->count()) run_cfg.learning_rate = flags.learning_rate;
      if (o_epochs->count()) run_cfg.epochs = flags.epochs;
      if (o_steps->count()) run_cfg.max_steps = flags.max_steps;
      if (o_seed->count()) run_cfg.seed = flags.seed;
      if (o_val->count()) run_cfg.validation_fraction = flags.validation_fraction;
      if (o_time->count()) run_cfg.time_limit_seconds = flags.time_limit_seconds;
      if (o_every->count()) run_cfg.checkpoint_every = flags.checkpoint_every;
      if (o_paper->count()) model_cfg.paper_padding = flag_padding;

      const TrackCatalog catalog = load_track_catalog(catalog_path);
      const FeatureSchema schema = load_schema(schema_path);
      const auto sessions = load_sessions(sessions_path);
      model_cfg.fit_data(catalog, schema);
      SkipModel model = SkipModel::create(model_cfg, run_cfg.seed);

      TrainHooks hooks;
      hooks.on_epoch = [&](const EpochReport& r) {
        out << "epoch " << r.epoch << "  steps " << r.steps << "  loss " << r.mean_loss;
        if (r.validation) out << "  val MAA " << r.validation->mean_average_accuracy;
        out << std::endl;
      };
      hooks.on_checkpoint = [&](const SkipModel& m, const AdamState& opt, std::size_t step) {
        checkpoint_write(checkpoint_path + ".step" + std::to_string(step),
                         make_checkpoint(m, catalog, schema, run_cfg.seed, step, opt));
      };
      TrainResult result = train(model, run_cfg, sessions, catalog, schema, hooks);

      SkipModel best(model_cfg, std::move(result.best));
      checkpoint_write(checkpoint_path,
                       make_checkpoint(best, catalog, schema, run_cfg.seed, result.steps, result.optimizer));
      out << "wrote " << checkpoint_path << " (" << result.steps << " steps)\n";
      if (!json_path.empty()) {
        Json epochs = Json::array();
        for (const auto& e : result.epochs) {
          Json je{{"epoch", e.epoch}, {"steps", e.steps}, {"mean_loss", e.mean_loss}};
          je["validation"] = e.validation ? e.validation->to_json() : Json(nullptr);
          epochs.push_back(je);
        }
        auto f = open_output(json_path);
        const Json run{{"batch_size", run_cfg.batch_size},
                       {"learning_rate", run_cfg.learning_rate},
                       {"epochs", run_cfg.epochs},
                       {"max_steps", run_cfg.max_steps},
                       {"seed", run_cfg.seed},
                       {"validation_fraction", run_cfg.validation_fraction},
                       {"checkpoint_every", run_cfg.checkpoint_every},
                       {"time_limit_seconds", run_cfg.time_limit_seconds}};
        f << Json{{"run", run},
                  {"model", model_config_to_json(model_cfg)},
                  {"best_validation_maa", result.best_validation_maa},
                  {"epochs", epochs},
                  {"losses", result.losses}}
                 .dump(2)
          << '\n';
      }
      return kExitOk;
    }

    auto load_model = [&](const Checkpoint& ck) {
      return std::pair{load_track_catalog(catalog_path, ck.stats), load_schema(schema_path)};
    };

    if (*predict_cmd) {
      const Checkpoint ck = checkpoint_read(checkpoint_path);
      const auto [catalog, schema] = load_model(ck);
      const SkipModel model = restore_model(ck, catalog, schema);
      const auto sessions = load_sessions(sessions_path);
      save_predictions(out_path, predict(model, catalog, schema, sessions, predict_batch));
      out << "wrote " << out_path << " (" << sessions.size() << " sessions)\n";
      return kExitOk;
    }

    if (*eval_cmd) {
      const auto sessions = load_sessions(sessions_path);
      if (!pred_paths.empty()) {
        detail::emit_report(out, pred_paths.front(), evaluate(load_predictions(pred_paths.front()), sessions),
                            json_path);
        return kExitOk;
      }
      if (checkpoint_path.empty() || catalog_path.empty() || schema_path.empty()) {
        err << "error: evaluate needs --preds, or --checkpoint with --catalog and --schema\n";
        return kExitUsage;
      }
      const Checkpoint ck = checkpoint_read(checkpoint_path);
      const auto [catalog, schema] = load_model(ck);
      const SkipModel model = restore_model(ck, catalog, schema);
      detail::emit_report(out, checkpoint_path, evaluate(predict(model, catalog, schema, sessions), sessions),
                          json_path);
      return kExitOk;
    }

    if (*base_cmd) {
      const BaselineMode mode = parse_baseline_mode(mode_name);
      const auto sessions = load_sessions(sessions_path);
      std::optional<std::map<std::string, double>> rates;
      if (mode == BaselineMode::skip_rate) {
        if (train_sessions_path.empty()) {
          err << "error: skip_rate needs --train\n";
          return kExitUsage;
        }
        rates = compute_track_skip_rates(load_sessions(train_sessions_path));
      }
      const auto preds = baseline_predict_all(mode, sessions, rates ? &*rates : nullptr);
      if (!out_path.empty()) save_predictions(out_path, preds);
      detail::emit_report(out, mode_name, evaluate(preds, sessions), json_path);
      return kExitOk;
    }

    if (*ens_cmd) {
      const auto sessions = load_sessions(sessions_path);
      std::vector<std::vector<SessionPrediction>> members;
      for (const auto& p : pred_paths) members.push_back(load_predictions(p));
      const auto voted = ensemble(members);
      if (!out_path.empty()) save_predictions(out_path, voted);
      std::vector<std::pair<std::string, EvalReport>> rows;
      for (std::size_t k = 0; k < members.size(); ++k) rows.emplace_back(pred_paths[k], evaluate(members[k], sessions));
      const EvalReport voted_report = evaluate(voted, sessions);
      rows.emplace_back("majority vote", voted_report);
      out << format_reports(rows);
      if (members.size() > 1) {
        double total = 0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < members.size(); ++a) {
          for (std::size_t b = a + 1; b < members.size(); ++b, ++pairs) {
            total += prediction_correlation(members[a], members[b]);
          }
        }
        out << "mean pairwise prediction correlation: " << total / static_cast<double>(pairs) << '\n';
      }
      if (!json_path.empty()) {
        Json j = voted_report.to_json(true);
        j["model"] = "majority vote";
        j["members"] = Json::array();
        for (const auto& [name, r] : rows) {
          if (name != "majority vote") j["members"].push_back(Json{{"model", name}, {"report", r.to_json()}});
        }
        auto f = open_output(json_path);
        f << j.dump(2) << '\n';
      }
      return kExitOk;
    }

    if (*gc_cmd) {
      if (!gc_seed_opt->count()) {
        if (auto s = detail::env_seed()) gc_seed = *s;
      }
      const GradCheckReport report = model_grad_check(gc_seed, gc_tol, paper_padding);
      for (const auto& p : report.params) {
        out << (p.pass ? "ok    " : "FAIL  ") << p.name << "  max rel err " << p.max_error << '\n';
      }
      out << (report.pass() ? "gradient check passed" : "gradient check FAILED") << '\n';
      return report.pass() ? kExitOk : kExitFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace skipnet::cli
