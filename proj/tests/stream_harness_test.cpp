#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "nadine/checkpoint.hpp"
#include "nadine/config.hpp"
#include "nadine/report.hpp"

namespace nadine {
namespace {

SyntheticDriftConfig small_stream(std::uint64_t seed = 1) {
  SyntheticDriftConfig s;
  s.seed = seed;
  s.batches = 12;
  return s;
}

// Nearest-class-mean classifier fit once on the given batches and then frozen.
struct FrozenCentroids {
  std::vector<std::vector<double>> centroid;

  FrozenCentroids() = default;
  FrozenCentroids(const std::vector<StreamBatch>& fit, std::size_t classes) {
    const std::size_t u = fit.front().sensors.extent(1);
    centroid.assign(classes, std::vector<double>(u, 0.0));
    std::vector<std::size_t> n(classes, 0);
    for (const auto& b : fit)
      for (std::size_t i = 0; i < b.size(); ++i) {
        ++n[b.labels[i]];
        for (std::size_t j = 0; j < u; ++j) centroid[b.labels[i]][j] += b.sensors(i, j);
      }
    for (std::size_t c = 0; c < classes; ++c)
      for (auto& v : centroid[c]) v /= static_cast<double>(std::max<std::size_t>(n[c], 1));
  }

  double accuracy(const StreamBatch& b) const {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t c = 0; c < centroid.size(); ++c) {
        double d = 0.0;
        for (std::size_t j = 0; j < centroid[c].size(); ++j) d += (b.sensors(i, j) - centroid[c][j]) * (b.sensors(i, j) - centroid[c][j]);
        if (d < best_d) best_d = d, best = c;
      }
      hit += best == b.labels[i];
    }
    return static_cast<double>(hit) / static_cast<double>(b.size());
  }
};

bool same_batches(const std::vector<StreamBatch>& a, const std::vector<StreamBatch>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].labels != b[k].labels) return false;
    if (!std::equal(a[k].sensors.begin(), a[k].sensors.end(), b[k].sensors.begin(), b[k].sensors.end())) return false;
  }
  return true;
}

TEST(Generator, SameSeedSameStream) {
  EXPECT_TRUE(same_batches(generate_stream(small_stream(4)), generate_stream(small_stream(4))));
  EXPECT_FALSE(same_batches(generate_stream(small_stream(4)), generate_stream(small_stream(5))));
}

TEST(Generator, ShapesFollowConfig) {
  auto cfg = small_stream();
  cfg.images = true;
  const auto s = generate_stream(cfg);
  ASSERT_EQ(s.size(), 12u);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_EQ(s[k].index, k);
    EXPECT_EQ(s[k].sensors.shape(), (Shape{50, 48}));
    ASSERT_TRUE(s[k].images.has_value());
    EXPECT_EQ(s[k].images->size(), 50u);
    EXPECT_EQ(s[k].images->front().shape(), (Shape{3, 12, 12}));
    for (auto y : s[k].labels) EXPECT_LT(y, 3u);
  }
}

TEST(Generator, EmptyScheduleIsStationary) {
  auto cfg = small_stream(2);
  cfg.batches = 40;
  const auto s = generate_stream(cfg);
  const FrozenCentroids model({s.begin(), s.begin() + 5}, 3);
  for (std::size_t k = 30; k < 40; ++k) EXPECT_GE(model.accuracy(s[k]), 0.95) << "batch " << k;
}

TEST(Generator, AbruptShiftDefeatsFrozenModel) {
  // adjacent class means 4 sigma apart; the drift moves every mean by 4 sigma
  SyntheticDriftConfig cfg;
  cfg.seed = 3;
  cfg.features = 1;
  cfg.batches = 20;
  cfg.schedule = {{10, DriftType::Abrupt}};
  cfg.concepts = {Concept{{{0.3}, {0.5}, {0.7}}, 0.05, {}}, Concept{{{0.5}, {0.7}, {0.9}}, 0.05, {}}};
  const auto s = generate_stream(cfg);
  const FrozenCentroids model({s.begin(), s.begin() + 10}, 3);
  EXPECT_GE(model.accuracy(s[9]), 0.8);
  EXPECT_LT(model.accuracy(s[10]), 0.6);
}

TEST(Generator, RotationDefeatsFrozenModel) {
  auto cfg = small_stream(3);
  cfg.batches = 20;
  cfg.schedule = {{10, DriftType::Abrupt}};
  const auto s = generate_stream(cfg);
  const FrozenCentroids model({s.begin(), s.begin() + 10}, 3);
  EXPECT_GE(model.accuracy(s[9]), 0.95);
  EXPECT_LT(model.accuracy(s[10]), 0.6);
}

TEST(Generator, GradualDriftMovesInSteps) {
  auto cfg = small_stream(6);
  cfg.batches = 20;
  cfg.schedule = {{5, DriftType::Gradual}};
  cfg.gradual_span = 5;
  const auto s = generate_stream(cfg);
  const FrozenCentroids model({s.begin(), s.begin() + 5}, 3);
  EXPECT_GE(model.accuracy(s[4]), 0.95);
  EXPECT_LT(model.accuracy(s[15]), 0.6);
}

// Centroid classifier built straight from a concept's class means.
FrozenCentroids from_concept(const Concept& c) {
  FrozenCentroids m;
  m.centroid = c.means;
  return m;
}

TEST(Generator, ConceptsMatchTheStream) {
  auto cfg = small_stream(8);
  cfg.batches = 20;
  cfg.schedule = {{10, DriftType::Abrupt}};
  const auto concepts = stream_concepts(cfg);
  ASSERT_EQ(concepts.size(), 2u);
  const auto s = generate_stream(cfg);
  EXPECT_GE(from_concept(concepts[0]).accuracy(s[9]), 0.95);
  EXPECT_GE(from_concept(concepts[1]).accuracy(s[10]), 0.95);
  EXPECT_LT(from_concept(concepts[0]).accuracy(s[10]), 0.6);
}

TEST(Generator, HeldOutSamplesFollowTheirConcept) {
  auto cfg = small_stream(9);
  cfg.schedule = {{6, DriftType::Abrupt}};
  cfg.images = true;
  const auto concepts = stream_concepts(cfg);
  Rng rng(77);
  const StreamBatch held = sample_concept(concepts[0], cfg, 120, rng);
  EXPECT_EQ(held.size(), 120u);
  EXPECT_NO_THROW(held.validate(cfg.classes));
  ASSERT_TRUE(held.images.has_value());
  EXPECT_EQ(held.images->size(), 120u);
  EXPECT_GE(from_concept(concepts[0]).accuracy(held), 0.95);
  EXPECT_LT(from_concept(concepts[1]).accuracy(held), 0.6);
}

TEST(Generator, RejectsBadConcepts) {
  auto cfg = small_stream();
  cfg.concepts = {Concept{{{0.5}}, 0.1, {}}};
  EXPECT_THROW(generate_stream(cfg), ConfigError);
  cfg = small_stream();
  cfg.classes = 1;
  EXPECT_THROW(generate_stream(cfg), ConfigError);
  cfg = small_stream();
  cfg.schedule = {{5, DriftType::Abrupt}, {5, DriftType::Abrupt}};
  EXPECT_THROW(generate_stream(cfg), ConfigError);
}

std::string csv_text(std::size_t rows, std::size_t features = 3) {
  std::ostringstream os;
  for (std::size_t j = 0; j < features; ++j) os << 'f' << j << ',';
  os << "label\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < features; ++j) os << static_cast<double>(i * (j + 1)) << ',';
    os << i % 3 << '\n';
  }
  return os.str();
}

CsvSchema schema(std::size_t features = 3) {
  CsvSchema s;
  s.features = features;
  return s;
}

TEST(Csv, BatchesInFileOrder) {
  std::istringstream in(csv_text(2950));
  const auto b = ingest_csv(in, schema());
  ASSERT_EQ(b.size(), 59u);
  for (const auto& x : b) EXPECT_EQ(x.size(), 50u);
  EXPECT_EQ(b[0].labels[1], 1u);
  EXPECT_EQ(b[58].index, 58u);
}

TEST(Csv, TruncatedFinalBatchKeepsRemainder) {
  std::istringstream in(csv_text(120));
  const auto b = ingest_csv(in, schema());
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[2].size(), 20u);
  EXPECT_EQ(b[2].sensors.extent(0), 20u);
}

TEST(Csv, LabelColumnMayBeAnywhere) {
  std::istringstream in("a,label,b\n1,2,3\n4,0,6\n");
  const auto t = read_csv(in, schema(2));
  EXPECT_EQ(t.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.labels, (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(t.rows[1], (std::vector<double>{4, 6}));
}

TEST(Csv, ParseErrorsNameRowAndColumn) {
  std::istringstream bad_cell("a,b,c,label\n1,2,3,0\n1,x,3,0\n");
  try {
    read_csv(bad_cell, schema());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
    EXPECT_EQ(e.column(), 2u);
  }
  std::istringstream short_row("a,b,c,label\n1,2,0\n");
  EXPECT_THROW(read_csv(short_row, schema()), ParseError);
}

TEST(Csv, SchemaErrors) {
  std::istringstream no_label("a,b,c\n1,2,3\n");
  EXPECT_THROW(read_csv(no_label, schema()), SchemaError);
  std::istringstream wrong_width("a,b,label\n1,2,0\n");
  EXPECT_THROW(read_csv(wrong_width, schema()), SchemaError);
  std::istringstream bad_label("a,b,c,label\n1,2,3,7\n");
  EXPECT_THROW(read_csv(bad_label, schema()), SchemaError);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty, schema()), SchemaError);
  EXPECT_THROW(ingest_csv(std::string("/nonexistent/nadine.csv"), schema()), InputError);
}

TEST(Csv, ConstantColumnScalesToZero) {
  std::istringstream in("a,b,label\n5,0,0\n5,2,1\n5,4,2\n");
  auto t = read_csv(in, schema(2));
  normalize(t, Normalization::Global);
  for (const auto& r : t.rows) EXPECT_EQ(r[0], 0.0);
  EXPECT_DOUBLE_EQ(t.rows[1][1], 0.5);
}

TEST(Csv, RunningNormalizationHasNoLookahead) {
  const std::string text = "a,label\n2,0\n4,1\n3,2\n10,0\n";
  std::istringstream g(text), r(text);
  auto global = read_csv(g, schema(1));
  auto running = read_csv(r, schema(1));
  normalize(global, Normalization::Global);
  normalize(running, Normalization::Running);
  // global: range [2, 10]
  EXPECT_DOUBLE_EQ(global.rows[1][0], 0.25);
  // running: [2,2] -> 0, [2,4] -> 1, [2,4] -> 0.5, [2,10] -> 1
  EXPECT_EQ(running.rows[0][0], 0.0);
  EXPECT_DOUBLE_EQ(running.rows[1][0], 1.0);
  EXPECT_DOUBLE_EQ(running.rows[2][0], 0.5);
  EXPECT_DOUBLE_EQ(running.rows[3][0], 1.0);
}

RunConfig quick_config(std::size_t batches = 20) {
  RunConfig cfg;
  cfg.synthetic.batches = batches;
  cfg.synthetic.schedule.clear();
  return cfg;
}

TEST(Prequential, SeparableStreamIsLearned) {
  auto cfg = quick_config(30);
  cfg.synthetic.separation = 0.5;
  cfg.validate();
  const auto r = run<double>(cfg.harness, load_batches(cfg, 1), 1);
  double tail = 0.0;
  for (std::size_t k = 20; k < 30; ++k) tail += r.records[k].batch_accuracy / 10.0;
  EXPECT_GE(tail, 0.95);
}

TEST(Prequential, ShuffledLabelsStayAtChance) {
  auto cfg = quick_config(30);
  cfg.validate();
  auto batches = load_batches(cfg, 2);
  Rng rng(17);
  for (auto& b : batches)
    for (auto& y : b.labels) y = static_cast<std::size_t>(rng.uniform(0.0, 3.0)) % 3;
  const auto r = run<double>(cfg.harness, batches, 2);
  EXPECT_NEAR(r.accuracy(), 1.0 / 3.0, 0.06);
}

TEST(Prequential, CumulativeAccuracyIsCorrectOverSeen) {
  auto cfg = RunConfig{};
  cfg.synthetic.batches = 30;
  cfg.synthetic.schedule = {{15, DriftType::Abrupt}};
  cfg.validate();
  const auto batches = load_batches(cfg, 3);
  Prequential<double> learner(cfg.harness, 3);
  std::size_t seen = 0, correct = 0;
  double weighted = 0.0;
  for (const auto& b : batches) {
    const auto rec = learner.process(b);
    seen += rec.size;
    correct += rec.correct;
    weighted += rec.batch_accuracy * static_cast<double>(rec.size);
    EXPECT_EQ(rec.cumulative_accuracy, static_cast<double>(correct) / static_cast<double>(seen));
    EXPECT_NEAR(rec.cumulative_accuracy, weighted / static_cast<double>(seen), 1e-12);
    for (double p : rec.precision) EXPECT_TRUE(p >= 0.0 && p <= 1.0);
    for (double q : rec.recall) EXPECT_TRUE(q >= 0.0 && q <= 1.0);
  }
  EXPECT_EQ(learner.seen(), seen);
  EXPECT_EQ(learner.confusion().total(), seen);
}

TEST(Prequential, DepthOnlyGrowsOnDriftVerdicts) {
  RunConfig cfg;
  cfg.validate();
  const auto r = run<double>(cfg.harness, load_batches(cfg, 4), 4);
  std::size_t prev = 1;
  for (const auto& rec : r.records) {
    EXPECT_GE(rec.depth, prev);
    if (rec.depth > prev) EXPECT_EQ(rec.state, DriftState::Drift) << "batch " << rec.batch;
    prev = rec.depth;
  }
}

TEST(OneStepAhead, PairsInputsWithNextLabels) {
  auto cfg = quick_config(2);
  cfg.validate();
  const auto batches = load_batches(cfg, 1);
  const auto shifted = shift_labels(batches);
  ASSERT_EQ(shifted.size(), 1u);
  EXPECT_EQ(shifted[0].labels, batches[1].labels);
  cfg.harness.mode = Mode::OneStepAhead;
  const auto r = run<double>(cfg.harness, batches, 1);
  EXPECT_EQ(r.records.size(), 1u);
}

TEST(OneStepAhead, NeedsTwoBatches) {
  auto cfg = quick_config(1);
  cfg.harness.mode = Mode::OneStepAhead;
  cfg.validate();
  EXPECT_THROW(run<double>(cfg.harness, load_batches(cfg, 1), 1), ConfigError);
}

TEST(OneStepAhead, ConstantLabelsMatchCurrentBatch) {
  auto cfg = quick_config(8);
  cfg.validate();
  auto batches = load_batches(cfg, 5);
  for (auto& b : batches) std::fill(b.labels.begin(), b.labels.end(), 1u);
  const auto cur = run<double>(cfg.harness, {batches.begin(), batches.end() - 1}, 5);
  cfg.harness.mode = Mode::OneStepAhead;
  const auto ahead = run<double>(cfg.harness, batches, 5);
  ASSERT_EQ(cur.records.size(), ahead.records.size());
  for (std::size_t k = 0; k < cur.records.size(); ++k) {
    EXPECT_EQ(cur.records[k].batch_accuracy, ahead.records[k].batch_accuracy);
    EXPECT_EQ(cur.records[k].width, ahead.records[k].width);
  }
}

TEST(Prequential, FixedSeedIsBitExact) {
  RunConfig cfg;
  cfg.synthetic.batches = 30;
  cfg.validate();
  const auto a = run<double>(cfg.harness, load_batches(cfg, 8), 8);
  const auto b = run<double>(cfg.harness, load_batches(cfg, 8), 8);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].batch_accuracy, b.records[k].batch_accuracy);
    EXPECT_EQ(a.records[k].rates, b.records[k].rates);
    EXPECT_EQ(a.records[k].events, b.records[k].events);
  }
}

TEST(Prequential, ScoreIsReadOnlyAndMatchesPrediction) {
  const RunConfig cfg = quick_config(6);
  const auto batches = load_batches(cfg, 2);
  Prequential<double> learner(cfg.harness, 2);
  for (std::size_t k = 0; k < 5; ++k) learner.process(batches[k]);
  const auto before = state_hash(learner);
  const double s = learner.score(batches[5]);
  EXPECT_EQ(state_hash(learner), before);
  const auto rec = learner.process(batches[5]);
  EXPECT_DOUBLE_EQ(s, rec.batch_accuracy);
}

TEST(Prequential, StateBeforeBatchIgnoresLaterBatches) {
  RunConfig cfg;
  cfg.synthetic.batches = 30;
  cfg.validate();
  const auto base = load_batches(cfg, 9);
  auto altered = base;
  for (std::size_t k = 22; k < altered.size(); ++k) std::reverse(altered[k].labels.begin(), altered[k].labels.end());
  std::vector<std::uint64_t> ha, hb;
  RunHooks<double> hook_a, hook_b;
  hook_a.before_batch = [&](std::size_t, const Prequential<double>& l) { ha.push_back(state_hash(l)); };
  hook_b.before_batch = [&](std::size_t, const Prequential<double>& l) { hb.push_back(state_hash(l)); };
  run<double>(cfg.harness, base, 9, hook_a);
  run<double>(cfg.harness, altered, 9, hook_b);
  for (std::size_t k = 0; k <= 22; ++k) EXPECT_EQ(ha[k], hb[k]) << "batch " << k;
  EXPECT_NE(ha[23], hb[23]);
}

TEST(Precision, FloatRunCompletes) {
  auto cfg = quick_config(5);
  cfg.precision = 32;
  const auto r = run_all(cfg);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].records.size(), 5u);
}

TEST(Report, MeanAndSampleStd) {
  const auto m = mean_std({0.8, 0.9});
  EXPECT_NEAR(m.mean, 0.85, 1e-15);
  EXPECT_NEAR(m.std, 0.0707107, 1e-7);
  EXPECT_EQ(mean_std({0.7}).std, 0.0);
}

TEST(Report, IdenticalSeedsHaveZeroSpread) {
  auto cfg = quick_config(6);
  cfg.seeds = {3, 3, 3};
  const auto s = summarize(run_all(cfg));
  EXPECT_EQ(s.accuracy_stats().std, 0.0);
  EXPECT_EQ(s.final_depth_stats().std, 0.0);
}

TEST(Report, ArtifactsHaveOneRowPerBatch) {
  auto cfg = quick_config(7);
  cfg.seeds = {1, 2};
  const auto runs = run_all(cfg);
  std::ostringstream csv;
  write_metrics_csv(csv, runs);
  const auto text = csv.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), 1u + 2u * 7u);
  const Json j = summary_json(summarize(runs));
  EXPECT_EQ(j.at("runs").get<std::size_t>(), 2u);
  EXPECT_TRUE(j.at("accuracy").contains("std"));
  const Json classes = class_report_json(runs);
  for (const auto& run : classes) {
    std::size_t total = 0;
    for (const auto& c : run.at("classes")) total += c.at("support").get<std::size_t>();
    EXPECT_EQ(total, 7u * 50u);
  }
}

}  // namespace
}  // namespace nadine
