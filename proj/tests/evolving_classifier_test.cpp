#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nadine/checkpoint.hpp"
#include "nadine/config.hpp"
#include "nadine/network.hpp"

namespace nadine {
namespace {

NetworkConfig small_net(std::size_t features = 4) {
  NetworkConfig cfg;
  cfg.extractor.sensor_features = features;
  cfg.extractor.bypass_sensor_conv = true;
  return cfg;
}

Sample<double> sensor_sample(std::vector<double> x) {
  Sample<double> s;
  const std::size_t n = x.size();
  s.sensors = Tensor<double>({n}, std::move(x));
  return s;
}

TEST(ConfidenceMultiplier, ReferenceValues) {
  EXPECT_DOUBLE_EQ(kappa(0.0), 2.0);
  EXPECT_NEAR(kappa(1.0), 1.25 * std::exp(-1.0) + 0.75, 1e-15);
  EXPECT_NEAR(kappa(1.0), 1.2098, 1e-4);
  EXPECT_NEAR(xi(1.0), kappa(1.0), 0.0);
  for (double s : {0.0, 0.1, 1.0, 10.0, 30.0}) {
    EXPECT_GT(kappa(s), 0.75);
    EXPECT_LE(kappa(s), 2.0);
  }
}

TEST(SpcStatistic, MinimaFollowDuringWarmup) {
  NsConfig cfg;
  SpcStatistic s;
  for (double v : {5.0, 4.0, 3.0}) s.observe(v, cfg);
  EXPECT_DOUBLE_EQ(s.min_mean, s.moments.mean);
  EXPECT_DOUBLE_EQ(s.min_std, s.moments.stddev());
}

TEST(SpcStatistic, ExceedsComparesAgainstScaledMinimum) {
  SpcStatistic s;
  s.moments.mean = 1.0;
  s.moments.var = 0.04;
  s.min_mean = 0.8;
  s.min_std = 0.1;
  // 1.2 >= 0.8 + 2 * 0.1
  EXPECT_TRUE(s.exceeds(2.0));
  EXPECT_FALSE(s.exceeds(4.1));
}

TEST(NsState, NoDecisionDuringWarmup) {
  NsConfig cfg;
  NsState ns(2);
  for (std::size_t i = 0; i < cfg.warmup; ++i) {
    const auto d = ns.observe(100.0 * static_cast<double>(i), 100.0 * static_cast<double>(i), cfg);
    EXPECT_FALSE(d.grow);
    EXPECT_FALSE(d.prune);
  }
}

TEST(NsState, GrowSuppressesPruneInSameSample) {
  NsConfig cfg;
  NsState ns(2);
  for (std::size_t i = 0; i < 50; ++i) ns.observe(0.01, 0.01, cfg);
  // both statistics jump: both rules would hold, only the grow is reported
  ASSERT_TRUE(ns.bias.moments.count > cfg.warmup);
  const auto d = ns.observe(4.0, 4.0, cfg);
  EXPECT_TRUE(d.grow);
  EXPECT_FALSE(d.prune);
  EXPECT_TRUE(ns.prune_condition());
}

TEST(NsState, GrowResetsBiasMinima) {
  NsConfig cfg;
  NsState ns(1);
  for (std::size_t i = 0; i < 50; ++i) ns.observe(0.01, 0.0, cfg);
  ASSERT_TRUE(ns.observe(4.0, 0.0, cfg).grow);
  EXPECT_DOUBLE_EQ(ns.bias.min_mean, ns.bias.moments.mean);
  EXPECT_DOUBLE_EQ(ns.bias.min_std, ns.bias.moments.stddev());
}

TEST(MaybePrune, PicksSmallestContribution) {
  NsConfig cfg;
  NsState ns(1);
  for (std::size_t i = 0; i < 50; ++i) ns.observe(0.0, 0.01, cfg);
  ns.var.moments.mean = 10.0;
  const std::vector<double> c{0.5, 0.1, 0.9};
  const auto idx = maybe_prune(ns, c);
  ASSERT_TRUE(idx.has_value());
  EXPECT_EQ(*idx, 1u);
  EXPECT_FALSE(maybe_prune(ns, std::vector<double>{0.3}).has_value());
}

TEST(BiasVariance, BootstrapIsZero) {
  EvolvingNetwork<double> net(small_net(), 1);
  const auto z = Tensor<double>({4}, {0.1, 0.2, 0.3, 0.4});
  const auto [b, v] = net.bias_variance(z, 0);
  EXPECT_EQ(b, 0.0);
  EXPECT_EQ(v, 0.0);
}

TEST(BiasVariance, MatchesHandComputation) {
  EvolvingNetwork<double> net(small_net(), 2);
  NsConfig cfg;
  net.ns().update_features(std::vector<double>{0.2, 0.4, 0.6, 0.8}, cfg);
  const auto mu = Tensor<double>({4}, {0.2, 0.4, 0.6, 0.8});

  // x equal to the running mean: no variance, bias against the one-hot target
  const auto fmu = net.stack().infer(mu);
  const auto [b, v] = net.bias_variance(mu, 1);
  double expect = 0.0;
  for (std::size_t k = 0; k < 3; ++k) expect += (fmu[k] - (k == 1 ? 1.0 : 0.0)) * (fmu[k] - (k == 1 ? 1.0 : 0.0));
  EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(b, expect, 1e-15);

  const auto x = Tensor<double>({4}, {0.9, 0.1, 0.5, 0.0});
  const auto fx = net.stack().infer(x);
  double var = 0.0;
  for (std::size_t k = 0; k < 3; ++k) var += (fx[k] - fmu[k]) * (fx[k] - fmu[k]);
  EXPECT_NEAR(net.bias_variance(x, 1).second, var, 1e-15);
}

TEST(Structure, GrowAddsNodeAndHeadRow) {
  EvolvingNetwork<double> net(small_net(), 3);
  const std::size_t w = net.width();
  const auto ev = net.grow_node(4, 7);
  EXPECT_EQ(net.width(), w + 1);
  EXPECT_EQ(net.stack().head().in(), w + 1);
  EXPECT_EQ(ev.kind, EventKind::NodeAdded);
  EXPECT_EQ(ev.batch, 4u);
  EXPECT_EQ(ev.sample, 7u);
  EXPECT_EQ(net.events().size(), 1u);
  EXPECT_EQ(net.activation_sums().size(), w + 1);
}

TEST(Structure, PruningSilentNodeLeavesOutputUnchanged) {
  EvolvingNetwork<double> net(small_net(), 4);
  auto& head = net.stack().head().weights().value;
  for (std::size_t k = 0; k < head.extent(1); ++k) head(1, k) = 0.0;
  const auto s = sensor_sample({0.3, 0.9, 0.1, 0.5});
  const auto before = net.predict(s);
  net.prune_node(1, 0, 0);
  const auto after = net.predict(s);
  ASSERT_EQ(net.width(), 2u);
  for (std::size_t k = 0; k < before.size(); ++k) EXPECT_NEAR(after[k], before[k], 1e-15);
  EXPECT_EQ(net.events().back().node, 1u);
}

TEST(Structure, CannotPruneOnlyNode) {
  NetworkConfig cfg = small_net();
  cfg.initial_width = 1;
  EvolvingNetwork<double> net(cfg, 5);
  EXPECT_THROW(net.prune_node(0, 0, 0), StructuralError);
}

TEST(Structure, AddLayerStacksClassWidthLayer) {
  EvolvingNetwork<double> net(small_net(), 6);
  ASSERT_EQ(net.depth(), 1u);
  const auto ev = net.add_layer(9, 0, nullptr, nullptr);
  EXPECT_EQ(net.depth(), 2u);
  EXPECT_EQ(net.width(), 3u);
  EXPECT_EQ(net.stack().head().in(), 3u);
  EXPECT_EQ(net.stack().head().out(), 3u);
  EXPECT_EQ(ev.kind, EventKind::LayerAdded);
  EXPECT_EQ(net.events().size(), 1u);
  EXPECT_NO_THROW(net.stack().check_chain());
}

TEST(Structure, AddLayerReplaysMemoryIntoClassifier) {
  EvolvingNetwork<double> a(small_net(), 7), b(small_net(), 7);
  MemoryStore mem;
  mem.push({{0.1, 0.2, 0.3, 0.4}, 2, AdmissionReason::Hard, 0});
  const MemoryStore empty;
  a.add_layer(0, 0, &mem, nullptr, 0.01);
  b.add_layer(0, 0, &empty, nullptr, 0.01);
  const auto& wa = a.stack().head().weights().value;
  const auto& wb = b.stack().head().weights().value;
  bool differs = false;
  for (std::size_t i = 0; i < wa.size(); ++i) differs |= wa[i] != wb[i];
  EXPECT_TRUE(differs);
}

TEST(Structure, GrowthFiresOnStreamWithDrift) {
  RunConfig cfg;
  cfg.validate();
  const auto batches = load_batches(cfg, 1);
  Prequential<double> learner(cfg.harness, 1);
  for (std::size_t k = 0; k < 25; ++k) learner.process(batches[k]);
  const auto& evs = learner.network().events();
  EXPECT_TRUE(std::any_of(evs.begin(), evs.end(), [](const auto& e) { return e.kind == EventKind::NodeAdded; }));
}

TEST(Structure, EvolveOffKeepsStructure) {
  RunConfig cfg;
  cfg.harness.network.evolve = false;
  cfg.validate();
  const auto batches = load_batches(cfg, 2);
  Prequential<double> learner(cfg.harness, 2);
  for (std::size_t k = 0; k < 30; ++k) learner.process(batches[k]);
  EXPECT_EQ(learner.network().depth(), 1u);
  EXPECT_EQ(learner.network().width(), cfg.harness.network.initial_width);
  EXPECT_TRUE(learner.network().events().empty());
}

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg.validate();
    batches = load_batches(cfg, 3);
  }
  RunConfig cfg;
  std::vector<StreamBatch> batches;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  Prequential<double> a(cfg.harness, 3), b(cfg.harness, 99);
  for (std::size_t k = 0; k < 25; ++k) a.process(batches[k]);
  load_state(b, save_state(a));
  EXPECT_EQ(state_hash(a), state_hash(b));
  for (std::size_t k = 25; k < 35; ++k) {
    const auto ra = a.process(batches[k]);
    const auto rb = b.process(batches[k]);
    EXPECT_EQ(ra.batch_accuracy, rb.batch_accuracy);
    EXPECT_EQ(ra.rates, rb.rates);
  }
  EXPECT_EQ(state_hash(a), state_hash(b));
}

TEST_F(CheckpointTest, FileRoundTrip) {
  Prequential<double> a(cfg.harness, 3), b(cfg.harness, 3);
  for (std::size_t k = 0; k < 5; ++k) a.process(batches[k]);
  const auto path = std::filesystem::temp_directory_path() / "nadine_ckpt_test.json";
  save_checkpoint(a, path.string());
  load_checkpoint(b, path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(state_hash(a), state_hash(b));
}

TEST_F(CheckpointTest, HashTracksTraining) {
  Prequential<double> a(cfg.harness, 3);
  const auto h0 = state_hash(a);
  a.process(batches[0]);
  EXPECT_NE(h0, state_hash(a));
}

TEST_F(CheckpointTest, RejectsMismatchedConfiguration) {
  Prequential<double> a(cfg.harness, 3);
  HarnessConfig other = cfg.harness;
  other.network.extractor.bypass_sensor_conv = true;
  Prequential<double> b(other, 3);
  EXPECT_THROW(load_state(b, save_state(a)), SchemaError);
}

TEST_F(CheckpointTest, MalformedFileIsSchemaError) {
  const auto path = std::filesystem::temp_directory_path() / "nadine_ckpt_bad.json";
  std::ofstream(path) << "{not json";
  Prequential<double> a(cfg.harness, 3);
  EXPECT_THROW(load_checkpoint(a, path.string()), SchemaError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(a, path.string()), InputError);
}

}  // namespace
}  // namespace nadine
