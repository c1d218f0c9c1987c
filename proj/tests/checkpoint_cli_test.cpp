#include <gtest/gtest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "skipnet/cli.hpp"

using namespace skipnet;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "skipnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(SKIPNET_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("skipnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("SKIPNET_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("SKIPNET_SEED");
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small corpus plus a desk-sized model trained for a few steps.
  void make_data(std::size_t sessions = 60) {
    ASSERT_EQ(run_cli({"synth", "--sessions", std::to_string(sessions), "--tracks", "30", "--seed", "4", "--out",
                       path("data")})
                  .code,
              0);
  }
  std::vector<std::string> data_flags() const {
    return {"--catalog", path("data/tracks.csv"), "--schema", path("data/schema.json")};
  }
  RunResult train(std::vector<std::string> extra, const std::string& out = "model.ckpt") {
    std::vector<std::string> args = {"train", "--sessions", path("data/sessions.jsonl"), "--out", path(out),
                                     "--profile", "desk"};
    for (const auto& f : data_flags()) args.push_back(f);
    for (const auto& e : extra) args.push_back(e);
    return run_cli(args);
  }
  Json report(const std::string& name) const { return Json::parse(read_file(path(name))); }

  fs::path dir_;
};

Checkpoint sample_checkpoint() {
  const SynthCorpus corpus = synth_generate({.sessions = 10, .tracks = 12, .seed = 1});
  const TrackCatalog catalog = corpus.catalog();
  ModelConfig c = ModelConfig::desk();
  c.fit_data(catalog, corpus.schema);
  SkipModel model = SkipModel::create(c, 3);
  AdamState adam;
  const Batch batch = build_batch(corpus.sessions, catalog, corpus.schema);
  backward(model.forward_loss(batch, catalog).loss);
  adam_step(model.params(), adam, 0.01);
  return make_checkpoint(model, catalog, corpus.schema, 3, 1, adam);
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const Checkpoint ck = sample_checkpoint();
  const std::string bytes = checkpoint_bytes(ck);
  EXPECT_EQ(bytes.substr(0, 4), "SKPM");
  const Checkpoint back = checkpoint_parse(bytes);
  EXPECT_EQ(model_config_to_json(back.config), model_config_to_json(ck.config));
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(back.step, 1u);
  EXPECT_EQ(back.schema_fingerprint, ck.schema_fingerprint);
  EXPECT_EQ(back.catalog_fingerprint, ck.catalog_fingerprint);
  ASSERT_EQ(back.params.size(), ck.params.size());
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    EXPECT_EQ(back.params.entries()[i].first, ck.params.entries()[i].first);
    EXPECT_EQ(back.params.entries()[i].second.shape(), ck.params.entries()[i].second.shape());
    EXPECT_TRUE(same_bits(back.params.entries()[i].second.data(), ck.params.entries()[i].second.data()));
  }
  EXPECT_TRUE(same_bits(back.stats.mean, ck.stats.mean));
  EXPECT_TRUE(same_bits(back.stats.stddev, ck.stats.stddev));
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->step, 1u);
  for (const auto& [name, m] : ck.optimizer->moments) {
    EXPECT_TRUE(same_bits(back.optimizer->moments.at(name).first, m.first));
    EXPECT_TRUE(same_bits(back.optimizer->moments.at(name).second, m.second));
  }
  EXPECT_EQ(checkpoint_bytes(back), bytes);
}

TEST(Checkpoint, TruncationAndCorruptionAreRejected) {
  const std::string bytes = checkpoint_bytes(sample_checkpoint());
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{15}, std::size_t{40}, bytes.size() / 2,
                          bytes.size() - 1}) {
    EXPECT_THROW(checkpoint_parse(bytes.substr(0, cut)), CorruptCheckpoint) << cut;
  }
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(checkpoint_parse(magic), CorruptCheckpoint);
  std::string version = bytes;
  version[4] = 9;
  EXPECT_THROW(checkpoint_parse(version), CorruptCheckpoint);
  EXPECT_THROW(checkpoint_parse(bytes + "x"), CorruptCheckpoint);
}

TEST(Checkpoint, RestoreChecksCatalogAndSchema) {
  const Checkpoint ck = sample_checkpoint();
  const SynthCorpus corpus = synth_generate({.sessions = 10, .tracks = 12, .seed = 1});
  EXPECT_NO_THROW(restore_model(ck, corpus.catalog(), corpus.schema));
  const SynthCorpus other = synth_generate({.sessions = 10, .tracks = 13, .seed = 1});
  EXPECT_THROW(restore_model(ck, other.catalog(), corpus.schema), ValidationError);
  EXPECT_THROW(restore_model(ck, corpus.catalog(), FeatureSchema({}, {"hour_of_day"})), ValidationError);
}

TEST(Config, ParsesKeyValueFiles) {
  std::istringstream in("# comment\nbatch_size = 50\n\nlearning_rate=0.01  # trailing\nstacked_lstm = 7\npaper_padding = true\n");
  const ConfigValues v = parse_config(in, "c.cfg");
  TrainRunConfig run;
  ModelConfig model;
  apply_config(v, run, model);
  EXPECT_EQ(run.batch_size, 50u);
  EXPECT_EQ(run.learning_rate, 0.01);
  EXPECT_EQ(model.stacked_lstm, 7u);
  EXPECT_TRUE(model.paper_padding);
  EXPECT_THROW(apply_config({{"bogus", "1"}}, run, model), ConfigError);
  EXPECT_THROW(apply_config({{"batch_size", "-3"}}, run, model), ConfigError);
  std::istringstream bad("batch_size 3\n");
  try {
    parse_config(bad, "bad.cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST_F(Workspace, SynthIsByteReproducible) {
  ASSERT_EQ(run_cli({"synth", "--sessions", "50", "--tracks", "20", "--seed", "7", "--out", path("a")}).code, 0);
  ASSERT_EQ(run_cli({"synth", "--sessions", "50", "--tracks", "20", "--seed", "7", "--out", path("b")}).code, 0);
  for (const char* f : {"tracks.csv", "sessions.jsonl", "schema.json"}) {
    EXPECT_EQ(read_file(path(std::string("a/") + f)), read_file(path(std::string("b/") + f))) << f;
  }
}

TEST_F(Workspace, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"fly"}).code, 2);
  EXPECT_EQ(run_cli({"synth", "--sessions", "5", "--tracks", "5", "--out", path("x"), "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"baseline", "--mode", "coin", "--sessions", "s.jsonl"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST_F(Workspace, DataErrorsExitOneWithLocation) {
  {
    std::ofstream f(path("bad.jsonl"));
    f << "{\"session_id\":\"a\",\"premium\":true,\"day_of_week\":1,\"tracks\":[]}\n";
  }
  const RunResult r = run_cli({"baseline", "--mode", "all_skip", "--sessions", path("bad.jsonl")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.jsonl:1"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"baseline", "--mode", "all_skip", "--sessions", path("missing.jsonl")}).code, 1);
  EXPECT_EQ(run_cli({"synth", "--sessions", "0", "--tracks", "5", "--out", path("x")}).code, 1);
}

TEST_F(Workspace, BinaryExitCodes) {
  EXPECT_EQ(run_binary("--version"), 0);
  EXPECT_EQ(run_binary("nonsense"), 2);
  EXPECT_EQ(run_binary("evaluate --sessions " + path("nothing.jsonl") + " --preds " + path("nothing.jsonl")), 1);
}

TEST_F(Workspace, BaselineReport) {
  make_data();
  const RunResult r = run_cli({"baseline", "--mode", "all_skip", "--sessions", path("data/sessions.jsonl"), "--json",
                               path("b1.json"), "--out", path("b1.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("MAA"), std::string::npos);
  const auto sessions = load_sessions(path("data/sessions.jsonl"));
  const double expected = evaluate(baseline_predict_all(BaselineMode::all_skip, sessions), sessions).mean_average_accuracy;
  EXPECT_EQ(report("b1.json").at("mean_average_accuracy").get<double>(), expected);
  EXPECT_EQ(run_cli({"baseline", "--mode", "skip_rate", "--sessions", path("data/sessions.jsonl")}).code, 2);
  EXPECT_EQ(run_cli({"baseline", "--mode", "skip_rate", "--sessions", path("data/sessions.jsonl"), "--train",
                     path("data/sessions.jsonl")})
                .code,
            0);
}

TEST_F(Workspace, TrainPredictEvaluateEnsemble) {
  make_data();
  ASSERT_EQ(train({"--max-steps", "3", "--batch-size", "20", "--val-fraction", "0.2", "--report", path("r.json")}).code, 0);
  const Json rep = report("r.json");
  EXPECT_EQ(rep.at("losses").size(), 3u);

  // The reloaded checkpoint reproduces the in-training validation MAA.
  const Checkpoint ck = checkpoint_read(path("model.ckpt"));
  const TrackCatalog catalog = load_track_catalog(path("data/tracks.csv"), ck.stats);
  const FeatureSchema schema = load_schema(path("data/schema.json"));
  const auto sessions = load_sessions(path("data/sessions.jsonl"));
  Rng rng(ck.seed ^ 0x5eed5eed5eed5eedull);
  const DataSplit split = split_train_validation(sessions.size(), 0.2, rng);
  std::vector<SessionRecord> validation;
  for (std::size_t i : split.validation) validation.push_back(sessions[i]);
  const SkipModel model = restore_model(ck, catalog, schema);
  EXPECT_EQ(evaluate(predict(model, catalog, schema, validation), validation).mean_average_accuracy,
            rep.at("best_validation_maa").get<double>());

  std::vector<std::string> predict_args = {"predict", "--checkpoint", path("model.ckpt"), "--sessions",
                                           path("data/sessions.jsonl"), "--out", path("p1.jsonl")};
  for (const auto& f : data_flags()) predict_args.push_back(f);
  ASSERT_EQ(run_cli(predict_args).code, 0);
  const auto preds = load_predictions(path("p1.jsonl"));
  ASSERT_EQ(preds.size(), sessions.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].predictions.size(), sessions[i].length() / 2);
    for (std::size_t t = 0; t < preds[i].predictions.size(); ++t) {
      EXPECT_EQ(preds[i].predictions[t], decide(preds[i].probabilities[t]));
    }
  }

  const RunResult by_preds = run_cli({"evaluate", "--sessions", path("data/sessions.jsonl"), "--preds",
                                      path("p1.jsonl"), "--json", path("e1.json")});
  ASSERT_EQ(by_preds.code, 0) << by_preds.err;
  std::vector<std::string> eval_ck = {"evaluate", "--sessions", path("data/sessions.jsonl"), "--checkpoint",
                                      path("model.ckpt"), "--json", path("e2.json")};
  for (const auto& f : data_flags()) eval_ck.push_back(f);
  ASSERT_EQ(run_cli(eval_ck).code, 0);
  EXPECT_EQ(report("e1.json").at("mean_average_accuracy"), report("e2.json").at("mean_average_accuracy"));

  ASSERT_EQ(run_cli({"baseline", "--mode", "all_skip", "--sessions", path("data/sessions.jsonl"), "--out",
                     path("p2.jsonl")})
                .code,
            0);
  ASSERT_EQ(run_cli({"baseline", "--mode", "last_action", "--sessions", path("data/sessions.jsonl"), "--out",
                     path("p3.jsonl")})
                .code,
            0);
  const RunResult ens = run_cli({"ensemble", "--preds", path("p1.jsonl"), path("p2.jsonl"), path("p3.jsonl"),
                                 "--sessions", path("data/sessions.jsonl"), "--out", path("voted.jsonl"), "--json",
                                 path("ens.json")});
  ASSERT_EQ(ens.code, 0) << ens.err;
  EXPECT_NE(ens.out.find("majority vote"), std::string::npos);
  EXPECT_NE(ens.out.find("correlation"), std::string::npos);
  EXPECT_EQ(report("ens.json").at("members").size(), 3u);
  EXPECT_EQ(load_predictions(path("voted.jsonl")).size(), sessions.size());
  EXPECT_EQ(run_cli({"ensemble", "--preds", path("p1.jsonl"), path("p2.jsonl"), "--sessions",
                     path("data/sessions.jsonl")})
                .code,
            1);
}

TEST_F(Workspace, CommandSequenceIsReproducible) {
  make_data();
  ASSERT_EQ(train({"--max-steps", "2", "--batch-size", "16"}, "a.ckpt").code, 0);
  ASSERT_EQ(train({"--max-steps", "2", "--batch-size", "16"}, "b.ckpt").code, 0);
  EXPECT_EQ(read_file(path("a.ckpt")), read_file(path("b.ckpt")));
}

TEST_F(Workspace, CheckpointEveryWritesSnapshots) {
  make_data();
  ASSERT_EQ(train({"--max-steps", "4", "--batch-size", "10", "--checkpoint-every", "2"}).code, 0);
  EXPECT_TRUE(fs::exists(path("model.ckpt.step2")));
  EXPECT_TRUE(fs::exists(path("model.ckpt.step4")));
  EXPECT_EQ(checkpoint_read(path("model.ckpt.step4")).step, 4u);
}

TEST_F(Workspace, ConfigPrecedence) {
  make_data();
  {
    std::ofstream f(path("run.cfg"));
    f << "batch_size = 12\nseed = 5\nlearning_rate = 0.002\nhead_hidden = 9\nmax_steps = 1\n";
  }
  ASSERT_EQ(train({"--config", path("run.cfg"), "--report", path("file.json")}).code, 0);
  Json run = report("file.json").at("run");
  EXPECT_EQ(run.at("batch_size"), 12);
  EXPECT_EQ(run.at("seed"), 5);
  EXPECT_EQ(report("file.json").at("model").at("head_hidden"), 9);
  EXPECT_EQ(report("file.json").at("model").at("stacked_lstm"), 50);

  setenv("SKIPNET_SEED", "77", 1);
  ASSERT_EQ(train({"--config", path("run.cfg"), "--report", path("env.json")}).code, 0);
  EXPECT_EQ(report("env.json").at("run").at("seed"), 77);
  EXPECT_EQ(checkpoint_read(path("model.ckpt")).seed, 77u);

  ASSERT_EQ(train({"--config", path("run.cfg"), "--seed", "3", "--batch-size", "8", "--report", path("flag.json")}).code,
            0);
  run = report("flag.json").at("run");
  EXPECT_EQ(run.at("seed"), 3);
  EXPECT_EQ(run.at("batch_size"), 8);
  EXPECT_EQ(run.at("learning_rate"), 0.002);

  setenv("SKIPNET_SEED", "abc", 1);
  EXPECT_EQ(train({"--max-steps", "1"}).code, 1);
}

TEST_F(Workspace, GradcheckCommand) {
  const RunResult r = run_cli({"gradcheck", "--seed", "3"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("gradient check passed"), std::string::npos);
}
