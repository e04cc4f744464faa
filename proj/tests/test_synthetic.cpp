#include <gtest/gtest.h>

#include <hcap/network_io.hpp>
#include <hcap/reconfiguration.hpp>
#include <hcap/synthetic.hpp>

#include "test_util.hpp"

using namespace hcap;

namespace {

struct Aggregates {
  int sections = 0;
  double peak_kw = 0.0;
  double miles = 0.0;
  int customers = 0;
  int one_two_phase = 0;
};

Aggregates aggregates(const Network& net, const std::string& feeder) {
  Aggregates a;
  for (const auto& s : net.sections())
    if (s.id.rfind(feeder + ".s", 0) == 0) {
      a.sections++;
      a.miles += s.length;
      a.one_two_phase += s.phases.count() < 3;
    }
  for (const auto& l : net.loads())
    if (l.node_id.rfind(feeder + ".", 0) == 0) {
      a.peak_kw += l.peak_kw;
      a.customers += l.customer_count;
    }
  return a;
}

}  // namespace

TEST(SyntheticFeeders, StudyPairMatchesTargetAggregates) {
  auto pair = generate_feeder_pair(feeder_f1_spec(), feeder_f2_spec());
  for (const auto& spec : {feeder_f1_spec(), feeder_f2_spec()}) {
    auto a = aggregates(pair.network, spec.name);
    EXPECT_EQ(a.sections, spec.sections) << spec.name;
    EXPECT_NEAR(a.peak_kw, spec.peak_mw * 1000.0, 0.01 * spec.peak_mw * 1000.0) << spec.name;
    EXPECT_NEAR(a.miles, spec.conductor_miles, 0.01 * spec.conductor_miles) << spec.name;
    EXPECT_EQ(a.customers, spec.customers) << spec.name;
    EXPECT_GT(a.one_two_phase, 0) << spec.name;
  }
  EXPECT_EQ(feeder_f1_spec().sections, 1376);
  EXPECT_EQ(feeder_f2_spec().sections, 825);
  EXPECT_DOUBLE_EQ(feeder_f1_spec().peak_mw, 11.3);
  EXPECT_DOUBLE_EQ(feeder_f2_spec().min_mw, 1.2);
}

TEST(SyntheticFeeders, PairHasOneTieAndFiveConfigurations) {
  auto pair = generate_feeder_pair(feeder_f1_spec(), feeder_f2_spec());
  int ties = 0, boundaries = 0;
  for (const auto& sw : pair.network.switches()) {
    EXPECT_TRUE(sw.scada_controlled);
    ties += sw.normally_open;
    boundaries += sw.switching_block_boundary;
  }
  EXPECT_EQ(ties, 1);
  EXPECT_EQ(boundaries, 4);
  EXPECT_EQ(enumerate_configurations(pair.network).configurations.size(), 5u);
}

TEST(SyntheticFeeders, BasePairCarriesPeakWithinLimits) {
  auto pair = generate_feeder_pair(feeder_f1_spec(), feeder_f2_spec());
  const auto& net = pair.network;
  auto view = apply_configuration(net, net.base_configuration());
  auto sol = solve(view, testutil::peak_loads(net));
  ASSERT_TRUE(sol.converged);
  EXPECT_TRUE(all_passed(evaluate(sol, sol, view, regime_by_name("classical"))));
}

TEST(SyntheticFeeders, TrunkIsThreePhaseAndDistancesAccumulate) {
  auto syn = generate_synthetic_feeder(testutil::small_spec("T", 120, 3.0, 1.0, 15.0, 200, 3));
  const auto& net = syn.network;
  const auto& head = net.sections()[net.source_head_section(0)];
  EXPECT_EQ(head.phases.count(), 3);
  for (std::size_t s = 0; s < net.section_count(); ++s) {
    const auto& sec = net.sections()[s];
    double d_from = net.nodes()[net.from_index(static_cast<int>(s))].distance_from_source;
    double d_to = net.nodes()[net.to_index(static_cast<int>(s))].distance_from_source;
    EXPECT_NEAR(d_to, d_from + sec.length, 1e-9);
    EXPECT_GT(sec.thermal_rating, 0.0);
  }
  EXPECT_NEAR(net.nodes()[0].nominal_voltage, 12470.0 / std::sqrt(3.0), 1e-9);
}

TEST(SyntheticFeeders, OneTwoPhaseLateralsAreBounded) {
  auto syn = generate_synthetic_feeder(feeder_f1_spec());
  const auto& net = syn.network;
  auto view = apply_configuration(net, net.base_configuration());
  // Walk each one/two-phase node up to the first three-phase node.
  std::map<int, int> lateral_size;
  for (std::size_t n = 0; n < net.node_count(); ++n) {
    if (net.nodes()[n].phases.count() == 3) continue;
    int v = static_cast<int>(n);
    while (net.nodes()[view.parent_node(v)].phases.count() < 3) v = view.parent_node(v);
    lateral_size[v]++;
  }
  ASSERT_FALSE(lateral_size.empty());
  for (const auto& [root, size] : lateral_size) EXPECT_LE(size, kMaxLateralSections);
}

TEST(SyntheticFeeders, SeedDeterminesTheNetwork) {
  auto a = generate_synthetic_feeder(testutil::small_spec("D", 60, 1.0, 0.3, 8.0, 90, 42));
  auto b = generate_synthetic_feeder(testutil::small_spec("D", 60, 1.0, 0.3, 8.0, 90, 42));
  auto c = generate_synthetic_feeder(testutil::small_spec("D", 60, 1.0, 0.3, 8.0, 90, 43));
  EXPECT_EQ(network_to_json(a.network).dump(), network_to_json(b.network).dump());
  EXPECT_NE(network_to_json(a.network).dump(), network_to_json(c.network).dump());
}

TEST(SyntheticFeeders, SingleSectionZeroLoadStub) {
  auto syn = generate_synthetic_feeder(testutil::small_spec("S", 1, 0.0, 0.0, 0.5, 0, 1));
  EXPECT_EQ(syn.network.section_count(), 1u);
  EXPECT_EQ(syn.network.node_count(), 2u);
  EXPECT_EQ(syn.network.total_peak_kw(), 0.0);
  EXPECT_NEAR(syn.network.sections()[0].length, 0.5, 1e-12);
}

TEST(SyntheticFeeders, InfeasibleSpecsAreRejected) {
  EXPECT_THROW(generate_synthetic_feeder(testutil::small_spec("X", 0, 1.0, 0.5, 1.0, 10, 1)), ConfigError);
  EXPECT_THROW(generate_synthetic_feeder(testutil::small_spec("X", 10, 1.0, 2.0, 1.0, 10, 1)), ConfigError);
  EXPECT_THROW(generate_synthetic_feeder(testutil::small_spec("X", 10, 1.0, 0.5, 0.0, 10, 1)), ConfigError);
  EXPECT_THROW(generate_synthetic_feeder(testutil::small_spec("X", 10, 1.0, 0.5, 1.0, -3, 1)), ConfigError);
}

TEST(SyntheticLoadShape, SpansMinimumToPeak) {
  auto p = synthetic_load_shape(0.25);
  double lo = *std::min_element(p.values.begin(), p.values.end());
  double hi = *std::max_element(p.values.begin(), p.values.end());
  EXPECT_NEAR(lo, 0.25, 1e-12);
  EXPECT_NEAR(hi, 1.0, 1e-12);
}
