#include <gtest/gtest.h>

#include <set>

#include <hcap/network_io.hpp>
#include <hcap/reconfiguration.hpp>
#include <hcap/synthetic.hpp>

#include "oracles/traversal.hpp"
#include "test_util.hpp"

using namespace hcap;
using testutil::NetBuilder;

namespace {

// Two three-node feeders joined end to end by a normally-open tie.
//   S1 - a1 -[b1]- a2 ~tie~ b2 -[b2sw]- b1 - S2
NetBuilder tied_pair() {
  NetBuilder b;
  b.node("S1").node("a1", "ABC", 1).node("a2", "ABC", 2);
  b.node("S2").node("b1", "ABC", 1).node("b2", "ABC", 2);
  b.section("h1", "S1", "a1", {0.1, 0.2}).section("m1", "a1", "a2", {0.1, 0.2});
  b.section("h2", "S2", "b1", {0.1, 0.2}).section("m2", "b1", "b2", {0.1, 0.2});
  b.section("tie", "a2", "b2", {0.1, 0.2});
  b.sw("m1.sw", "m1", true, false, true).sw("m2.sw", "m2", true, false, true).sw("tie.sw", "tie", true, true, false);
  b.source("S1", "F1", "h1").source("S2", "F2", "h2");
  b.load("a1", 100).load("a2", 50).load("b1", 80).load("b2", 40);
  return b;
}

void expect_matches_oracle(const Network& net, const Configuration& c) {
  auto view = apply_configuration(net, c);
  auto t = oracle::traverse(net, c);
  EXPECT_FALSE(t.loop);
  for (std::size_t n = 0; n < net.node_count(); ++n) EXPECT_EQ(view.source_of(static_cast<int>(n)), t.source_of[n]);
}

}  // namespace

TEST(NetworkValidation, RejectsUnknownEndpoint) {
  NetBuilder b;
  b.node("S").node("a");
  b.section("s1", "S", "zz", {0.1, 0.1});
  b.source("S", "F", "s1");
  try {
    b.build();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
  }
}

TEST(NetworkValidation, RejectsSectionPhasesOutsideEndpoints) {
  NetBuilder b;
  b.node("S").node("a", "A");
  b.section("s1", "S", "a", {0.1, 0.1}, 100, "AB");
  b.source("S", "F", "s1");
  EXPECT_THROW(b.build(), ConfigError);
}

TEST(NetworkValidation, RejectsNonPositiveRatingAndBadSetpoint) {
  NetBuilder b;
  b.node("S").node("a");
  b.section("s1", "S", "a", {0.1, 0.1}, 0.0);
  b.source("S", "F", "s1");
  EXPECT_THROW(b.build(), ConfigError);

  NetBuilder c;
  c.node("S").node("a");
  c.section("s1", "S", "a", {0.1, 0.1});
  c.source("S", "F", "s1", 1.5);
  EXPECT_THROW(c.build(), ConfigError);
}

TEST(NetworkValidation, RejectsDuplicateIds) {
  NetBuilder b;
  b.node("S").node("a").node("a");
  b.section("s1", "S", "a", {0.1, 0.1});
  b.source("S", "F", "s1");
  EXPECT_THROW(b.build(), ConfigError);
}

TEST(NetworkValidation, BaseLoopIsRejected) {
  NetBuilder b;
  b.node("S").node("a").node("c");
  b.section("s1", "S", "a", {0.1, 0.1}).section("s2", "a", "c", {0.1, 0.1}).section("s3", "c", "S", {0.1, 0.1});
  b.source("S", "F", "s1");
  EXPECT_THROW(b.build(), RadialityError);
}

TEST(Radiality, BaseConfigurationIsRadial) {
  auto net = tied_pair().build();
  auto r = validate_radiality(net, net.base_configuration());
  EXPECT_TRUE(r.radial);
  expect_matches_oracle(net, net.base_configuration());
}

TEST(Radiality, ClosingTheTieAloneMakesALoop) {
  auto net = tied_pair().build();
  Configuration c{"tie_only", {}, {"tie.sw"}, 0.0};
  auto r = validate_radiality(net, c);
  EXPECT_FALSE(r.radial);
  EXPECT_TRUE(r.has(Diagnostic::Kind::loop));
  EXPECT_TRUE(oracle::traverse(net, c).loop);
  EXPECT_THROW(apply_configuration(net, c), RadialityError);
}

TEST(Radiality, TieClosedWithBoundaryOpenIsRadial) {
  auto net = tied_pair().build();
  Configuration c{"xfer", {"m1.sw"}, {"tie.sw"}, 0.0};
  EXPECT_TRUE(validate_radiality(net, c).radial);
  expect_matches_oracle(net, c);
  auto view = apply_configuration(net, c);
  EXPECT_EQ(view.source_of(net.node_index("a2")), 1);
  EXPECT_EQ(view.source_of(net.node_index("a1")), 0);
}

TEST(Radiality, OpeningWithoutAlternativeDeEnergizesDownstream) {
  auto net = tied_pair().build();
  Configuration c{"cut", {"m1.sw"}, {}, 0.0};
  auto r = validate_radiality(net, c);
  EXPECT_TRUE(r.radial);
  EXPECT_TRUE(r.has(Diagnostic::Kind::island));
  auto view = apply_configuration(net, c);
  EXPECT_FALSE(view.energized(net.node_index("a2")));
  EXPECT_TRUE(view.energized(net.node_index("a1")));
  EXPECT_FALSE(view.section_energized(net.section_index("m1")));
  expect_matches_oracle(net, c);
}

TEST(Radiality, UnknownSwitchIsNamed) {
  auto net = tied_pair().build();
  Configuration c{"bad", {"nope"}, {}, 0.0};
  try {
    apply_configuration(net, c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
}

TEST(Radiality, EnumeratedSyntheticConfigurationsAgreeWithTraversal) {
  auto a = testutil::small_spec("A", 30, 1.0, 0.4, 4.0, 40, 11);
  auto b = testutil::small_spec("B", 24, 0.8, 0.2, 3.0, 35, 12);
  auto pair = generate_feeder_pair(a, b);
  auto cfgs = enumerate_configurations(pair.network).configurations;
  ASSERT_EQ(cfgs.size(), 5u);
  for (const auto& c : cfgs) expect_matches_oracle(pair.network, c);
}

TEST(EnergizedView, PathsAreUniqueAndEndAtSource) {
  auto net = testutil::random_feeder(25, 3);
  auto view = apply_configuration(net, net.base_configuration());
  for (std::size_t n = 0; n < net.node_count(); ++n) {
    auto path = view.upstream_path(static_cast<int>(n));
    std::set<int> uniq(path.begin(), path.end());
    EXPECT_EQ(uniq.size(), path.size());
    int v = static_cast<int>(n);
    for (int s : path) {
      EXPECT_TRUE(net.from_index(s) == v || net.to_index(s) == v);
      v = net.from_index(s) == v ? net.to_index(s) : net.from_index(s);
    }
    EXPECT_EQ(v, net.source_node_index(0));
  }
}

TEST(EnergizedView, ApplyingAConfigurationLeavesTheNetworkUntouched) {
  auto net = tied_pair().build();
  auto before = network_to_json(net).dump();
  apply_configuration(net, Configuration{"xfer", {"m1.sw"}, {"tie.sw"}, 0.0});
  EXPECT_EQ(network_to_json(net).dump(), before);
}

TEST(EnergizedView, SinglePhaseBranchInheritsPhases) {
  NetBuilder b;
  b.node("S").node("a").node("x", "B");
  b.section("s1", "S", "a", {0.1, 0.1}).section("s2", "a", "x", {0.1, 0.1}, 100, "B");
  b.source("S", "F", "s1");
  auto net = b.build();
  auto view = apply_configuration(net, net.base_configuration());
  EXPECT_EQ(view.node_phases(net.node_index("x")).str(), "B");
}

TEST(TransferDevices, ScadaBoundaryAndTieQualify) {
  Switch manual{"m", "s", false, false, true};
  Switch scada_inline{"i", "s", true, false, false};
  Switch boundary{"b", "s", true, false, true};
  Switch tie{"t", "s", true, true, false};
  EXPECT_FALSE(manual.is_transfer_device());
  EXPECT_FALSE(scada_inline.is_transfer_device());
  EXPECT_TRUE(boundary.is_transfer_device());
  EXPECT_TRUE(tie.is_transfer_device());
}

TEST(SectionsByDistance, BucketsByToNodeDistance) {
  NetBuilder b;
  b.node("S").node("n1", "ABC", 0.5).node("n2", "ABC", 1.5);
  b.section("s1", "S", "n1", {0.1, 0.1}).section("s2", "n1", "n2", {0.1, 0.1});
  b.source("S", "F", "s1");
  auto buckets = sections_by_distance(b.build(), 1.0, PhaseClass::three_phase);
  ASSERT_EQ(buckets.size(), 2u);
  EXPECT_EQ(buckets[0], std::vector<std::string>{"s1"});
  EXPECT_EQ(buckets[1], std::vector<std::string>{"s2"});
}

TEST(SectionsByDistance, PhaseClassesPartitionEnergizedSections) {
  auto net = testutil::random_feeder(40, 9);
  std::size_t total = 0;
  std::set<std::string> seen;
  for (auto pc : {PhaseClass::three_phase, PhaseClass::one_two_phase})
    for (const auto& [k, ids] : sections_by_distance(net, 0.5, pc))
      for (const auto& id : ids) {
        EXPECT_EQ(phase_class_of(net.sections()[net.section_index(id)]), pc);
        seen.insert(id);
        ++total;
      }
  EXPECT_EQ(total, net.section_count());
  EXPECT_EQ(seen.size(), net.section_count());
  EXPECT_THROW(sections_by_distance(net, 0.0, PhaseClass::three_phase), ConfigError);
}
