// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
//
//   acceptance [--only 1,2,...] [--workdir DIR]

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "skipnet/skipnet.hpp"

using namespace skipnet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(precision);
  s << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << v;
  return s.str();
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Average accuracy evaluated literally, recounting the running accuracy for every i.
double brute_force_aa(const std::vector<int>& pred, const std::vector<int>& label) {
  double total = 0.0;
  for (std::size_t i = 1; i <= label.size(); ++i) {
    int so_far = 0;
    for (std::size_t j = 1; j <= i; ++j) so_far += pred[j - 1] == label[j - 1] ? 1 : 0;
    const double L = pred[i - 1] == label[i - 1] ? 1.0 : 0.0;
    total += static_cast<double>(so_far) / static_cast<double>(i) * L;
  }
  return total / static_cast<double>(label.size());
}

// The shared desk-scale corpus: 20k training and 2k test sessions.
struct DeskData {
  SynthCorpus corpus;
  TrackCatalog catalog;
  std::vector<SessionRecord> train;
  std::vector<SessionRecord> test;
};

const DeskData& desk_data() {
  static const DeskData data = [] {
    DeskData d;
    d.corpus = synth_generate({.sessions = 22000, .tracks = 500, .seed = 7});
    d.catalog = d.corpus.catalog();
    d.train.assign(d.corpus.sessions.begin(), d.corpus.sessions.begin() + 20000);
    d.test.assign(d.corpus.sessions.begin() + 20000, d.corpus.sessions.end());
    return d;
  }();
  return data;
}

ModelConfig desk_config(const TrackCatalog& catalog, const FeatureSchema& schema) {
  ModelConfig c = ModelConfig::desk();
  return c.fit_data(catalog, schema);
}

Outcome gradient_correctness() {
  const auto start = Clock::now();
  const GradCheckReport report = model_grad_check(1, 1e-4, false);
  const double elapsed = seconds_since(start);
  std::set<std::string> groups;
  double worst = 0.0;
  for (const auto& p : report.params) {
    groups.insert(param_group(p.name));
    worst = std::max(worst, p.max_error);
  }
  const bool pass = report.pass() && groups.size() == 6 && elapsed < 60.0;
  std::string detail = std::to_string(report.params.size()) + " tensors in " + std::to_string(groups.size()) +
                       " groups, max rel err " + sci(worst) + ", " + fmt(elapsed, 1) + " s";
  if (!report.pass()) detail += ", failing " + report.failing().front();
  return {pass, detail};
}

Outcome metric_oracle() {
  bool pass = session_average_accuracy(std::vector<int>{1, 1, 0, 1, 0}, std::vector<int>{1, 1, 1, 1, 1}) == 0.55;
  Rng rng(2024);
  std::vector<SessionRecord> sessions;
  std::vector<SessionPrediction> preds;
  double expected = 0.0;
  std::size_t mismatches = 0;
  for (int n = 0; n < 1000; ++n) {
    const std::size_t T = 5 + uniform_index(rng, 6);
    std::vector<int> p(T), y(T);
    for (std::size_t i = 0; i < T; ++i) {
      p[i] = bernoulli(rng, 0.5);
      y[i] = bernoulli(rng, 0.5);
    }
    const double oracle = brute_force_aa(p, y);
    if (session_average_accuracy(p, y) != oracle) ++mismatches;
    expected += oracle;
    // Session of length 2T whose upcoming half carries y.
    SessionRecord s{"s" + std::to_string(n), false, 0, {}};
    for (std::size_t i = 0; i < T; ++i) s.tracks.push_back({"a", 0, Json::object()});
    for (std::size_t i = 0; i < T; ++i) s.tracks.push_back({"b", y[i], Json::object()});
    sessions.push_back(std::move(s));
    preds.push_back({sessions.back().session_id, p, {}});
  }
  const EvalReport r = evaluate(preds, sessions);
  const bool mean_ok = r.mean_average_accuracy == expected / 1000.0;
  pass = pass && mismatches == 0 && mean_ok;
  return {pass, "1000 pairs, " + std::to_string(mismatches) + " mismatches, evaluate " +
                    (mean_ok ? "exact" : "differs") + ", hand case 0.55"};
}

Outcome padding_invariance() {
  // 50 sessions of every length 10..20.
  const SynthCorpus corpus = synth_generate({.sessions = 3000, .tracks = 300, .seed = 31});
  const TrackCatalog catalog = corpus.catalog();
  std::vector<SessionRecord> picked;
  std::vector<std::size_t> per_length(kMaxSessionLength + 1, 0);
  for (const auto& s : corpus.sessions) {
    if (per_length[s.length()] < 50) {
      ++per_length[s.length()];
      picked.push_back(s);
    }
  }
  for (std::size_t m = kMinSessionLength; m <= kMaxSessionLength; ++m) {
    if (per_length[m] != 50) return {false, "corpus lacks 50 sessions of length " + std::to_string(m)};
  }
  Rng rng(5);
  shuffle(picked, rng);
  const SkipModel model = SkipModel::create(desk_config(catalog, corpus.schema), 17);

  double worst_batch = 0.0;
  std::size_t padding_diffs = 0;
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < picked.size(); start += chunk) {
    const auto group = std::span<const SessionRecord>(picked).subspan(start, std::min(chunk, picked.size() - start));
    const Batch mixed = build_batch(group, catalog, corpus.schema);
    const Tensor together = model.forward(mixed, catalog);
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto one = group.subspan(i, 1);
      const Tensor minimal = model.forward(build_batch(one, catalog, corpus.schema, BatchShape::fitting(one)), catalog);
      const Tensor maximal = model.forward(build_batch(one, catalog, corpus.schema), catalog);
      const std::size_t n = mixed.upcoming_count[i];
      if (!same_bits(minimal.data().first(n), maximal.data().first(n))) ++padding_diffs;
      for (std::size_t t = 0; t < n; ++t) {
        worst_batch = std::max(worst_batch, std::abs(maximal.data()[t] - together.at(i, t)));
      }
    }
  }
  const bool pass = worst_batch <= 1e-12 && padding_diffs == 0;
  return {pass, std::to_string(picked.size()) + " sessions, max |alone - batched| " + sci(worst_batch) +
                    ", " + std::to_string(padding_diffs) + " padding mismatches"};
}

struct Baselines {
  EvalReport all_skip, skip_rate, last_action;
};

const Baselines& desk_baselines() {
  static const Baselines b = [] {
    const DeskData& d = desk_data();
    const auto rates = compute_track_skip_rates(d.train);
    return Baselines{evaluate(baseline_predict_all(BaselineMode::all_skip, d.test), d.test),
                     evaluate(baseline_predict_all(BaselineMode::skip_rate, d.test, &rates), d.test),
                     evaluate(baseline_predict_all(BaselineMode::last_action, d.test), d.test)};
  }();
  return b;
}

Outcome baseline_ordering() {
  const Baselines& b = desk_baselines();
  const bool pass = b.all_skip.mean_average_accuracy < b.last_action.mean_average_accuracy;
  return {pass, "all_skip " + fmt(b.all_skip.mean_average_accuracy) + ", skip_rate " +
                    fmt(b.skip_rate.mean_average_accuracy) + ", last_action " +
                    fmt(b.last_action.mean_average_accuracy)};
}

Outcome learning_above_baseline() {
  const DeskData& d = desk_data();
  const Baselines& b = desk_baselines();
  const auto start = Clock::now();
  SkipModel model = SkipModel::create(desk_config(d.catalog, d.corpus.schema), 1);
  TrainRunConfig run;
  run.batch_size = 300;
  run.learning_rate = 0.0005;
  run.epochs = 1000;
  run.seed = 1;
  run.validation_fraction = 0.05;
  run.time_limit_seconds = 27 * 60;
  TrainHooks hooks;
  hooks.on_epoch = [](const EpochReport& r) {
    std::cerr << "  [5] epoch " << r.epoch << " loss " << fmt(r.mean_loss) << " val MAA "
              << fmt(r.validation->mean_average_accuracy) << '\n';
  };
  TrainResult result = train(model, run, d.train, d.catalog, d.corpus.schema, hooks);
  const SkipModel best(model.config(), std::move(result.best));
  const EvalReport r = evaluate(predict(best, d.catalog, d.corpus.schema, d.test), d.test);
  const double elapsed = seconds_since(start);
  const double target = b.last_action.mean_average_accuracy + 0.03;
  const bool pass = elapsed <= 30 * 60 && r.mean_average_accuracy >= target &&
                    r.first_prediction_accuracy > b.last_action.first_prediction_accuracy;
  return {pass, "test MAA " + fmt(r.mean_average_accuracy) + " (need >= " + fmt(target) + "), first acc " +
                    fmt(r.first_prediction_accuracy) + " (need > " + fmt(b.last_action.first_prediction_accuracy) +
                    "), " + std::to_string(result.epochs.size()) + " epochs in " + fmt(elapsed / 60, 1) + " min"};
}

Outcome overfit_sanity() {
  const DeskData& d = desk_data();
  const std::vector<SessionRecord> eight(d.train.begin(), d.train.begin() + 8);
  SkipModel model = SkipModel::create(desk_config(d.catalog, d.corpus.schema), 3);
  const Batch batch = build_batch(eight, d.catalog, d.corpus.schema);
  AdamState adam;
  const double initial = model.forward_loss(batch, d.catalog).loss.item();
  for (int step = 0; step < 200; ++step) {
    const ForwardResult r = model.forward_loss(batch, d.catalog);
    model.params().zero_grad();
    backward(r.loss);
    adam_step(model.params(), adam, 0.0005);
  }
  const double final_loss = model.forward_loss(batch, d.catalog).loss.item();
  return {final_loss < 0.5 * initial,
          "BCE " + fmt(initial) + " -> " + fmt(final_loss) + " (" + fmt(100 * final_loss / initial, 1) + "%)"};
}

Outcome ensemble_correctness(const fs::path& workdir) {
  std::size_t mismatches = 0;
  for (unsigned pattern = 0; pattern < 32; ++pattern) {
    std::vector<std::vector<int>> votes;
    int ones = 0;
    for (int k = 0; k < 5; ++k) {
      votes.push_back({static_cast<int>((pattern >> k) & 1)});
      ones += (pattern >> k) & 1;
    }
    if (majority_vote(votes) != std::vector<int>{2 * ones > 5 ? 1 : 0}) ++mismatches;
  }

  // Five desk models, one per batch size, written as prediction files and voted.
  const DeskData& d = desk_data();
  fs::create_directories(workdir);
  std::vector<std::vector<SessionPrediction>> members;
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (std::size_t batch_size : {50, 100, 200, 300, 400}) {
    SkipModel model = SkipModel::create(desk_config(d.catalog, d.corpus.schema), batch_size);
    TrainRunConfig run;
    run.batch_size = batch_size;
    run.epochs = 1;
    run.seed = batch_size;
    run.validation_fraction = 0.05;
    TrainResult result = train(model, run, d.train, d.catalog, d.corpus.schema);
    const SkipModel best(model.config(), std::move(result.best));
    const std::string file = (workdir / ("batch" + std::to_string(batch_size) + ".jsonl")).string();
    save_predictions(file, predict(best, d.catalog, d.corpus.schema, d.test));
    members.push_back(load_predictions(file));
    rows.emplace_back("batch " + std::to_string(batch_size), evaluate(members.back(), d.test));
  }
  const auto voted = ensemble(members);
  rows.emplace_back("majority vote", evaluate(voted, d.test));
  double correlation = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) correlation += prediction_correlation(members[a], members[b]);
  }
  correlation /= 10.0;
  std::cerr << format_reports(rows) << "  mean pairwise prediction correlation " << fmt(correlation) << '\n';
  const bool pass = mismatches == 0 && voted.size() == d.test.size();
  return {pass, "2^5 patterns, " + std::to_string(mismatches) + " mismatches; ensemble MAA " +
                    fmt(rows.back().second.mean_average_accuracy) + ", correlation " + fmt(correlation)};
}

Outcome determinism_and_persistence(const fs::path& workdir) {
  const DeskData& d = desk_data();
  const std::vector<SessionRecord> sessions(d.train.begin(), d.train.begin() + 2000);
  TrainRunConfig run;
  run.batch_size = 50;
  run.max_steps = 20;
  run.seed = 11;
  run.validation_fraction = 0.1;
  auto go = [&] {
    SkipModel model = SkipModel::create(desk_config(d.catalog, d.corpus.schema), run.seed);
    TrainResult r = train(model, run, sessions, d.catalog, d.corpus.schema);
    return std::pair{std::move(model), std::move(r)};
  };
  auto [model_a, a] = go();
  auto [model_b, b] = go();
  const bool losses_equal = a.losses.size() == 20 && same_bits(a.losses, b.losses);

  // Validation MAA of the final model, before and after a checkpoint round trip.
  std::vector<SessionRecord> validation;
  for (std::size_t i : a.validation_indices) validation.push_back(sessions[i]);
  const double before = evaluate(predict(model_a, d.catalog, d.corpus.schema, validation), validation)
                            .mean_average_accuracy;
  fs::create_directories(workdir);
  const std::string path = (workdir / "determinism.ckpt").string();
  checkpoint_write(path, make_checkpoint(model_a, d.catalog, d.corpus.schema, run.seed, a.steps, a.optimizer));
  const Checkpoint ck = checkpoint_read(path);
  const TrackCatalog reloaded_catalog(d.catalog.ids(), d.catalog.feature_count(),
                                      std::vector<double>(d.catalog.raw().begin(), d.catalog.raw().end()), ck.stats);
  const SkipModel restored = restore_model(ck, reloaded_catalog, d.corpus.schema);
  const double after = evaluate(predict(restored, reloaded_catalog, d.corpus.schema, validation), validation)
                           .mean_average_accuracy;
  const bool pass = losses_equal && before == after;
  return {pass, std::string("first 20 losses ") + (losses_equal ? "bit-identical" : "differ") +
                    ", validation MAA " + fmt(before, 6) + " -> " + fmt(after, 6) + " after reload"};
}

Outcome feature_pipeline() {
  const DeskData& d = desk_data();
  double worst_mean = 0.0, worst_std = 0.0;
  const Tensor& z = d.catalog.fixed_features();
  const std::size_t V = z.rows(), F = z.cols();
  for (std::size_t j = 0; j < F; ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < V; ++i) mean += z.at(i, j);
    mean /= static_cast<double>(V);
    for (std::size_t i = 0; i < V; ++i) sq += (z.at(i, j) - mean) * (z.at(i, j) - mean);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_std = std::max(worst_std, std::abs(std::sqrt(sq / static_cast<double>(V)) - 1.0));
  }

  // Every one-hot block of meta, playback and position encodings has a single 1.
  std::size_t bad_blocks = 0, blocks = 0;
  auto check_block = [&](std::span<const double> v) {
    double ones = 0.0;
    bool binary = true;
    for (double x : v) {
      ones += x;
      binary = binary && (x == 0.0 || x == 1.0);
    }
    ++blocks;
    if (!binary || ones != 1.0) ++bad_blocks;
  };
  const FeatureSchema& schema = d.corpus.schema;
  for (std::size_t n = 0; n < 500; ++n) {
    const SessionRecord& s = d.test[n];
    const auto meta = encode_meta(s);
    check_block(std::span(meta).subspan(0, 2));
    check_block(std::span(meta).subspan(2, 11));
    check_block(std::span(meta).subspan(13, 7));
    for (const auto& t : s.tracks) {
      const auto enc = schema.encode(t.playback);
      std::size_t offset = 0;
      for (const auto& cat : schema.categorical()) {
        check_block(std::span(enc).subspan(offset, cat.vocab.size()));
        offset += cat.vocab.size();
      }
    }
  }
  const Batch batch = build_batch(std::span(d.test).first(500), d.catalog, schema);
  for (std::size_t i = 0; i < batch.size; ++i) {
    for (std::size_t t = 0; t < batch.upcoming_count[i]; ++t) {
      check_block(batch.positions[t].data().subspan(i * kPositionWidth, kPositionWidth));
    }
  }

  std::size_t bad_splits = 0;
  for (std::size_t m = kMinSessionLength; m <= kMaxSessionLength; ++m) {
    SessionRecord s{"m", false, 0, std::vector<PlaybackTrack>(m, PlaybackTrack{"t_00000", 0, Json::object()})};
    const SessionSplit split = split_session(s);
    if (split.observed.size() != (m + 1) / 2 || split.upcoming.size() != m / 2 ||
        split.observed.size() + split.upcoming.size() != m) {
      ++bad_splits;
    }
  }
  const bool pass = worst_mean <= 1e-9 && worst_std <= 1e-9 && bad_blocks == 0 && bad_splits == 0;
  return {pass, "max |mean| " + sci(worst_mean) + ", max |std-1| " + sci(worst_std) + ", " + std::to_string(blocks) + " one-hot blocks (" + std::to_string(bad_blocks) +
                    " bad), splits m=10..20 " + (bad_splits ? "bad" : "ok")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string workdir = (fs::temp_directory_path() / "skipnet_acceptance").string();
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--workdir", workdir, "Scratch directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"metric oracle", metric_oracle},
      {"padding and batching invariance", padding_invariance},
      {"baseline ordering", baseline_ordering},
      {"learning above baseline", learning_above_baseline},
      {"overfit sanity", overfit_sanity},
      {"ensemble correctness", [&] { return ensemble_correctness(fs::path(workdir) / "ensemble"); }},
      {"determinism and persistence", [&] { return determinism_and_persistence(workdir); }},
      {"feature pipeline properties", feature_pipeline},
  };

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << "  " << criteria[k].first << ": " << o.detail
              << std::endl;
  }
  fs::remove_all(workdir);
  return all ? 0 : 1;
}
