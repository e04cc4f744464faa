#include <gtest/gtest.h>

#include <hcap/reconfiguration.hpp>
#include <hcap/synthetic.hpp>

#include "oracles/brute_force.hpp"
#include "test_util.hpp"

using namespace hcap;
using testutil::NetBuilder;

namespace {

SyntheticNetwork small_pair(std::uint64_t seed) {
  return generate_feeder_pair(testutil::small_spec("A", 14, 1.1, 0.4, 4.0, 30, seed),
                              testutil::small_spec("B", 12, 0.9, 0.2, 3.5, 25, seed + 100));
}

HcResult flat_result(const std::string& id, double kw, const std::string& config, bool energized = true) {
  HcResult r;
  r.section_id = id;
  r.configuration_id = config;
  r.profile = {HcEntry{"iv", kw, Criterion::thermal, config, energized}};
  r.finalize();
  return r;
}

// Strong feeder F1 and a weak feeder F2 joined by a tie; the F1 tail block
// can be transferred onto F2.
Network weak_neighbour() {
  NetBuilder b;
  b.node("S1").node("a1").node("a2").node("a3");
  b.node("S2").node("b1");
  b.section("h1", "S1", "a1", {0.05, 0.1}, 600).section("m1", "a1", "a2", {0.05, 0.1}, 600);
  b.section("x1", "a2", "a3", {0.05, 0.1}, 600);
  b.section("h2", "S2", "b1", {0.8, 1.6}, 120).section("tie", "a3", "b1", {0.8, 1.6}, 120);
  b.sw("m1.sw", "m1", true, false, true).sw("tie.sw", "tie", true, true, false);
  b.source("S1", "F1", "h1").source("S2", "F2", "h2");
  b.load("a1", 300).load("a2", 200).load("a3", 150).load("b1", 100);
  return b.build();
}

}  // namespace

TEST(Enumeration, TwoFeedersWithThreeBlocksGiveFiveConfigurations) {
  auto pair = small_pair(1);
  auto e = enumerate_configurations(pair.network);
  ASSERT_EQ(e.configurations.size(), 5u);
  EXPECT_EQ(e.configurations[0].id, "base");
  EXPECT_EQ(e.filtered_non_radial, 0);
  double p = 0.0;
  for (const auto& c : e.configurations) {
    EXPECT_TRUE(validate_radiality(pair.network, c).radial);
    p += c.probability;
  }
  EXPECT_NEAR(p, 1.0, 1e-12);
  EXPECT_NEAR(e.configurations[0].probability, 0.96, 1e-12);
}

TEST(Enumeration, SingleFeederHasOnlyBase) {
  auto net = generate_synthetic_feeder(testutil::small_spec("F", 10, 0.5, 0.1, 2.0, 10, 1)).network;
  auto e = enumerate_configurations(net);
  ASSERT_EQ(e.configurations.size(), 1u);
  EXPECT_DOUBLE_EQ(e.configurations[0].probability, 1.0);
}

TEST(Enumeration, ImplausibleProbabilitiesAreRejected) {
  auto pair = small_pair(2);
  EXPECT_THROW(enumerate_configurations(pair.network, {0.3}), ConfigError);
}

TEST(TransferHc, SingleConfigurationEqualsPlainHc) {
  auto pair = small_pair(3);
  const auto& net = pair.network;
  auto view = apply_configuration(net, net.base_configuration());
  auto sections = energized_sections(view);
  auto snap = testutil::peak_snapshot(net, 0.5);
  auto plain = hc_profiles(view, sections, {snap}, regime_by_name("transfer_study"), HcKind::generation, "s");
  auto xfer = transfer_hc(net, sections, {net.base_configuration()}, {snap}, regime_by_name("transfer_study"),
                          HcKind::generation, "s");
  for (std::size_t k = 0; k < sections.size(); ++k) EXPECT_EQ(plain[k].flat_kw, xfer[k].flat_kw);
}

TEST(TransferHc, TransferOntoWeakFeederLowersCapacity) {
  auto net = weak_neighbour();
  Configuration xfer{"tie+m1", {"m1.sw"}, {"tie.sw"}, 0.01};
  std::vector<Configuration> cfgs{net.base_configuration(), xfer};
  std::vector<int> sections{net.section_index("x1")};
  auto snap = testutil::peak_snapshot(net, 0.3);
  auto regime = regime_by_name("transfer_study");
  auto combined = transfer_hc(net, sections, cfgs, {snap}, regime, HcKind::generation, "s").front();

  auto base_view = apply_configuration(net, cfgs[0]);
  auto xfer_view = apply_configuration(net, cfgs[1]);
  auto ref_base = oracle::brute_force_hc(base_view, sections[0], snap, regime, HcKind::generation);
  auto ref_xfer = oracle::brute_force_hc(xfer_view, sections[0], snap, regime, HcKind::generation);
  EXPECT_LT(ref_xfer.kw, ref_base.kw);
  EXPECT_EQ(combined.flat_kw, std::min(ref_base.kw, ref_xfer.kw));
  EXPECT_EQ(combined.flat_configuration, "tie+m1");
}

TEST(CombineTransfer, TakesPerIntervalMinimumSkippingDeEnergized) {
  auto a = flat_result("s", 500, "base");
  auto b = flat_result("s", 300, "x1");
  auto c = flat_result("s", 0, "x2", false);
  auto r = combine_transfer({a, b, c});
  EXPECT_EQ(r.flat_kw, 300);
  EXPECT_EQ(r.flat_configuration, "x1");
  EXPECT_EQ(r.configuration_id, "all");
}

TEST(CombineTransfer, AllDeEnergizedGivesZeroWithDiagnostic) {
  std::vector<std::string> diag;
  auto r = combine_transfer({flat_result("s", 0, "a", false), flat_result("s", 0, "b", false)}, &diag);
  EXPECT_EQ(r.flat_kw, 0);
  EXPECT_FALSE(r.profile[0].energized);
  ASSERT_EQ(diag.size(), 1u);
  EXPECT_NE(diag[0].find("'s'"), std::string::npos);
}

TEST(CombineTransfer, MismatchedInputsAreRejected) {
  EXPECT_THROW(combine_transfer({}), Error);
  EXPECT_THROW(combine_transfer({flat_result("s", 1, "a"), flat_result("t", 1, "b")}), Error);
}

TEST(Diff, IdenticalInputsGiveZeroEverywhere) {
  auto pair = small_pair(4);
  const auto& net = pair.network;
  auto view = apply_configuration(net, net.base_configuration());
  auto sections = energized_sections(view);
  auto res = hc_profiles(view, sections, {testutil::peak_snapshot(net, 0.5)}, regime_by_name("opflex"),
                         HcKind::generation, "s");
  auto d = opflex_vs_transfer_diff(net, res, res);
  EXPECT_EQ(d.rows.size(), sections.size());
  for (const auto& row : d.rows) EXPECT_EQ(row.diff_kw, 0.0);
  EXPECT_EQ(d.total, 0.0);
  EXPECT_EQ(d.positive + d.negative, 0);
  for (const auto& [f, v] : d.by_feeder) EXPECT_EQ(v, 0.0);
}

TEST(Diff, SumsByFeederAndPhaseClassAddUp) {
  auto pair = small_pair(5);
  const auto& net = pair.network;
  auto view = apply_configuration(net, net.base_configuration());
  auto sections = energized_sections(view);
  auto snap = testutil::peak_snapshot(net, 0.5);
  auto o = hc_profiles(view, sections, {snap}, regime_by_name("opflex"), HcKind::generation, "s");
  auto cfgs = enumerate_configurations(net).configurations;
  auto t = transfer_hc(net, sections, cfgs, {snap}, regime_by_name("transfer_study"), HcKind::generation, "s");
  auto d = opflex_vs_transfer_diff(net, o, t);
  double feeders = 0.0, classes = 0.0, rows = 0.0;
  for (const auto& [k, v] : d.by_feeder) feeders += v;
  for (const auto& [k, v] : d.by_phase_class) classes += v;
  for (const auto& r : d.rows) rows += r.diff_kw;
  EXPECT_NEAR(feeders, d.total, 1e-9);
  EXPECT_NEAR(classes, d.total, 1e-9);
  EXPECT_NEAR(rows, d.total, 1e-9);
}

TEST(Diff, MismatchedSectionSetsAreListed) {
  auto pair = small_pair(6);
  const auto& net = pair.network;
  std::vector<HcResult> a{flat_result(net.sections()[0].id, 1, "base"), flat_result(net.sections()[1].id, 1, "base")};
  std::vector<HcResult> b{flat_result(net.sections()[0].id, 1, "base"), flat_result(net.sections()[2].id, 1, "base")};
  try {
    opflex_vs_transfer_diff(net, a, b);
    FAIL();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find(net.sections()[1].id), std::string::npos);
    EXPECT_NE(msg.find(net.sections()[2].id), std::string::npos);
  }
}

TEST(ExpectedOutcome, TwoConfigurationExample) {
  std::vector<std::pair<double, double>> o{{0.9, 1000.0}, {0.1, 0.0}};
  auto a = expected_outcome_stats(o, 0.05);
  EXPECT_NEAR(a.expectation, 900.0, 1e-12);
  EXPECT_EQ(a.chance_constrained, 0.0);
  auto b = expected_outcome_stats(o, 0.2);
  EXPECT_EQ(b.chance_constrained, 1000.0);
}

TEST(ExpectedOutcome, BaseOnlyAndBounds) {
  auto a = expected_outcome_stats({{1.0, 420.0}}, 0.01);
  EXPECT_EQ(a.expectation, 420.0);
  EXPECT_EQ(a.chance_constrained, 420.0);

  std::vector<std::pair<double, double>> o{{0.5, 100.0}, {0.3, 700.0}, {0.2, 300.0}};
  double prev = 1e300;
  for (double eps : {0.9, 0.7, 0.5, 0.3, 0.1, 0.0}) {
    auto s = expected_outcome_stats(o, eps);
    EXPECT_LE(s.chance_constrained, prev);
    prev = s.chance_constrained;
    EXPECT_GE(s.expectation, 100.0);
    EXPECT_LE(s.expectation, 700.0);
  }
  EXPECT_EQ(prev, 100.0);
}

TEST(ExpectedOutcome, ProbabilitiesMustSumToOne) {
  EXPECT_THROW(expected_outcome_stats({{0.5, 1.0}, {0.4, 2.0}}, 0.1), ConfigError);
  EXPECT_THROW(expected_outcome_stats({}, 0.1), ConfigError);
  EXPECT_THROW(expected_outcome_stats({{1.0, 1.0}}, 1.0), ConfigError);
}

TEST(ExpectedOutcome, DeEnergizingConfigurationCountsAsZero) {
  auto net = weak_neighbour();
  Configuration base = net.base_configuration();
  base.probability = 0.9;
  Configuration cut{"cut", {"m1.sw"}, {}, 0.1};
  auto snap = testutil::peak_snapshot(net, 0.5);
  auto r = expected_outcome_hc(net, net.section_index("x1"), {base, cut}, {snap}, regime_by_name("classical"), 0.05);
  auto view = apply_configuration(net, base);
  auto plain = hc_at(view, net.section_index("x1"), snap, regime_by_name("classical"), HcKind::generation);
  EXPECT_NEAR(r.expectation, 0.9 * plain.kw, 1e-9);
  EXPECT_EQ(r.chance_constrained, 0.0);
}

TEST(LoadCensus, GenerousRatingsLeaveOnlyStrandedSectionsAtZero) {
  NetBuilder b;
  b.node("S1").node("a1").node("a2").node("S2").node("b1");
  b.section("h1", "S1", "a1", {0.01, 0.02}, 2000).section("m1", "a1", "a2", {0.01, 0.02}, 2000);
  b.section("h2", "S2", "b1", {0.01, 0.02}, 2000).section("tie", "a2", "b1", {0.01, 0.02}, 2000);
  b.sw("m1.sw", "m1", true, false, true).sw("tie.sw", "tie", true, true, false);
  b.source("S1", "F1", "h1").source("S2", "F2", "h2");
  b.load("a1", 0.0).load("a2", 0.0).load("b1", 0.0);
  auto net = b.build();
  auto cfgs = enumerate_configurations(net).configurations;
  auto view = apply_configuration(net, cfgs[0]);
  auto census = load_hc_census(net, cfgs, energized_sections(view), testutil::peak_snapshot(net),
                               regime_by_name("transfer_study"));
  ASSERT_EQ(census.size(), cfgs.size());
  for (std::size_t k = 0; k < census.size(); ++k) {
    const auto& c = census[k];
    // Only sections a configuration opens or strands read zero.
    auto cv = apply_configuration(net, cfgs[k]);
    int stranded = 0;
    for (const auto& [id, kw] : c.hc_kw) stranded += !cv.section_energized(net.section_index(id));
    EXPECT_EQ(c.zero_count, stranded) << c.configuration_id;
    int n = 0;
    for (const auto& [bin, count] : c.histogram) n += count;
    EXPECT_EQ(n, static_cast<int>(c.hc_kw.size()));
  }
}

TEST(LoadCensus, DeEnergizedSectionsCountAsZero) {
  auto net = weak_neighbour();
  Configuration cut{"cut", {"m1.sw"}, {}, 0.0};
  auto view = apply_configuration(net, net.base_configuration());
  auto census = load_hc_census(net, {cut}, energized_sections(view), testutil::peak_snapshot(net, 0.2),
                               regime_by_name("transfer_study"));
  int dark = 0;
  auto cut_view = apply_configuration(net, cut);
  for (int s : energized_sections(view)) dark += !cut_view.section_energized(s);
  EXPECT_GE(census[0].zero_count, dark);
  EXPECT_GT(dark, 0);
}
