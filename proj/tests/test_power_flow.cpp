#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <hcap/power_flow.hpp>
#include <hcap/reconfiguration.hpp>
#include <hcap/synthetic.hpp>

#include "oracles/newton_pf.hpp"
#include "test_util.hpp"

using namespace hcap;
using testutil::NetBuilder;

namespace {

// Single-phase two-bus case with a 1000 V, 1000 kVA per-phase base so that
// ohms and per-unit impedance coincide.
Network two_bus(Complex z) {
  NetBuilder b;
  b.node("S", "A", 0, 1000.0).node("L", "A", 1, 1000.0);
  b.section("s1", "S", "L", z, 5000.0, "A");
  b.source("S", "F", "s1", 1.0);
  return b.build();
}

// S -[h]- n1 -[d]- n2, with a SCADA boundary switch on d.
Network chain_with_device(Complex z, double up_kw, double down_kw) {
  NetBuilder b;
  b.node("S").node("n1").node("n2");
  b.section("h", "S", "n1", z).section("d", "n1", "n2", z);
  b.sw("d.sw", "d", true, false, true);
  b.source("S", "F", "h");
  b.load("n1", up_kw).load("n2", down_kw);
  return b.build();
}

double total_real(const std::vector<Complex>& v) {
  double s = 0.0;
  for (auto c : v) s += c.real();
  return s;
}

}  // namespace

TEST(PowerFlow, TwoBusMatchesClosedForm) {
  const Complex z{0.01, 0.02};
  auto net = two_bus(z);
  auto view = apply_configuration(net, net.base_configuration());
  std::vector<Complex> loads(net.node_count());
  loads[net.node_index("L")] = {100.0, 50.0};
  auto sol = solve(view, loads);
  ASSERT_TRUE(sol.converged);

  const double P = 0.1, Q = 0.05, R = z.real(), X = z.imag();
  const double b = 1.0 - 2.0 * (P * R + Q * X);
  const double v2 = std::sqrt((b + std::sqrt(b * b - 4.0 * (P * P + Q * Q) * (R * R + X * X))) / 2.0);
  EXPECT_NEAR(sol.voltage_magnitude(net.node_index("L"), 0), v2, 1e-6);
  const double i2 = (P * P + Q * Q) / (v2 * v2);
  EXPECT_NEAR(sol.losses_kw, i2 * R * 1000.0, 1e-3);
}

TEST(PowerFlow, AgreesWithNewtonOracleOnSmallFeeders) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto net = testutil::random_feeder(4 + static_cast<int>(seed % 6), seed);
    auto view = apply_configuration(net, net.base_configuration());
    auto loads = testutil::peak_loads(net);
    InjectionSet inj;
    inj.kva.assign(net.node_count(), {});
    std::mt19937_64 rng(seed);
    for (std::size_t n = 1; n < net.node_count(); ++n)
      if (rng() % 3 == 0) inj.kva[n] = {static_cast<double>(rng() % 300), 0.0};
    auto sol = solve(view, loads, inj);
    ASSERT_TRUE(sol.converged) << "seed " << seed;

    std::vector<Complex> demand(net.node_count());
    for (std::size_t n = 0; n < net.node_count(); ++n) demand[n] = loads[n] - inj.kva[n];
    auto ref = oracle::newton_power_flow(view, demand);
    ASSERT_TRUE(ref.converged) << "seed " << seed;
    for (std::size_t n = 0; n < net.node_count(); ++n)
      for (int p = 0; p < 3; ++p)
        EXPECT_LT(std::abs(sol.node_voltages[n][p] - ref.v_pu[n][p]), 1e-5) << "seed " << seed << " node " << n;
  }
}

TEST(PowerFlow, PowerIsConservedOnTheSyntheticPair) {
  auto pair = generate_feeder_pair(feeder_f1_spec(), feeder_f2_spec());
  const auto& net = pair.network;
  auto view = apply_configuration(net, net.base_configuration());
  auto loads = testutil::peak_loads(net, 0.8);
  InjectionSet inj;
  inj.kva.assign(net.node_count(), {});
  for (std::size_t n = 0; n < net.node_count(); n += 17) inj.kva[n] = {40.0, 0.0};
  auto sol = solve(view, loads, inj);
  ASSERT_TRUE(sol.converged);
  double src = 0.0;
  for (auto s : sol.source_power) src += s.real();
  EXPECT_NEAR(src, total_real(loads) - total_real(inj.kva) + sol.losses_kw, 1e-3);
}

TEST(PowerFlow, ZeroLoadGivesFlatVoltagesAndNoFlow) {
  auto net = testutil::random_feeder(12, 4);
  auto view = apply_configuration(net, net.base_configuration());
  auto sol = solve(view, std::vector<Complex>(net.node_count()));
  ASSERT_TRUE(sol.converged);
  for (std::size_t n = 0; n < net.node_count(); ++n)
    for (int p = 0; p < 3; ++p)
      if (view.node_phases(static_cast<int>(n)).has(p)) EXPECT_NEAR(sol.voltage_magnitude(static_cast<int>(n), p), 1.02, 1e-12);
  EXPECT_EQ(sol.losses_kw, 0.0);
  EXPECT_EQ(head_flow(sol, view, 0), 0.0);
}

TEST(PowerFlow, DoublingImpedanceLeavesZeroLoadSolutionAndDeepensDrop) {
  NetBuilder a, b;
  for (auto* nb : {&a, &b}) nb->node("S").node("x").node("y");
  a.section("s1", "S", "x", {0.2, 0.4}).section("s2", "x", "y", {0.2, 0.4});
  b.section("s1", "S", "x", {0.4, 0.8}).section("s2", "x", "y", {0.4, 0.8});
  for (auto* nb : {&a, &b}) nb->source("S", "F", "s1").load("y", 900, 0.9);
  auto na = a.build(), nb = b.build();
  auto va = apply_configuration(na, na.base_configuration());
  auto vb = apply_configuration(nb, nb.base_configuration());
  std::vector<Complex> zero(na.node_count());
  auto za = solve(va, zero), zb = solve(vb, zero);
  for (std::size_t n = 0; n < na.node_count(); ++n)
    for (int p = 0; p < 3; ++p) EXPECT_EQ(za.node_voltages[n][p], zb.node_voltages[n][p]);

  auto la = solve(va, testutil::peak_loads(na)), lb = solve(vb, testutil::peak_loads(nb));
  int y = na.node_index("y");
  EXPECT_LT(lb.voltage_magnitude(y, 0), la.voltage_magnitude(y, 0));
  EXPECT_GT(lb.losses_kw, la.losses_kw);
}

TEST(PowerFlow, VoltageFallsAlongEveryPathWithoutInjection) {
  auto net = testutil::random_feeder(30, 21);
  auto view = apply_configuration(net, net.base_configuration());
  auto sol = solve(view, testutil::peak_loads(net));
  ASSERT_TRUE(sol.converged);
  for (std::size_t n = 0; n < net.node_count(); ++n) {
    int par = view.parent_node(static_cast<int>(n));
    if (par < 0) continue;
    for (int p = 0; p < 3; ++p)
      if (view.node_phases(static_cast<int>(n)).has(p))
        EXPECT_LE(sol.voltage_magnitude(static_cast<int>(n), p), sol.voltage_magnitude(par, p) + 1e-12);
  }
}

TEST(PowerFlow, LosslessHeadAndDeviceFlows) {
  auto net = chain_with_device({0.0, 0.0}, 100.0, 200.0);
  auto view = apply_configuration(net, net.base_configuration());
  auto sol = solve(view, testutil::peak_loads(net));
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(head_flow(sol, view, 0), 300.0, 1e-9);
  EXPECT_NEAR(device_flow(sol, view, net.switch_index("d.sw")), 200.0, 1e-9);

  InjectionSet inj;
  inj.kva.assign(net.node_count(), {});
  inj.kva[net.node_index("n2")] = {300.0, 0.0};
  sol = solve(view, testutil::peak_loads(net), inj);
  EXPECT_NEAR(device_flow(sol, view, net.switch_index("d.sw")), -100.0, 1e-9);
  EXPECT_NEAR(head_flow(sol, view, 0), 0.0, 1e-9);
}

TEST(PowerFlow, DeviceFlowIncludesDownstreamLosses) {
  auto net = chain_with_device({0.3, 0.6}, 100.0, 200.0);
  auto view = apply_configuration(net, net.base_configuration());
  auto sol = solve(view, testutil::peak_loads(net));
  int d = net.section_index("d");
  double loss_d = 0.0;
  for (int p = 0; p < 3; ++p) loss_d += sol.branch_currents[d][p] * sol.branch_currents[d][p] * 0.3 / 1000.0;
  EXPECT_NEAR(device_flow(sol, view, net.switch_index("d.sw")), 200.0 + loss_d, 1e-4);
}

TEST(PowerFlow, DeviceFlowOnOpenSwitchIsAnError) {
  auto net = chain_with_device({0.1, 0.1}, 100.0, 200.0);
  auto view = apply_configuration(net, Configuration{"open", {"d.sw"}, {}, 0.0});
  auto sol = solve(view, testutil::peak_loads(net));
  EXPECT_THROW(device_flow(sol, view, net.switch_index("d.sw")), Error);
}

TEST(PowerFlow, InjectionAtDeEnergizedNodeIsRejected) {
  auto net = chain_with_device({0.1, 0.1}, 100.0, 200.0);
  auto view = apply_configuration(net, Configuration{"open", {"d.sw"}, {}, 0.0});
  InjectionSet inj;
  inj.kva.assign(net.node_count(), {});
  inj.kva[net.node_index("n2")] = {10.0, 0.0};
  EXPECT_THROW(solve(view, testutil::peak_loads(net), inj), Error);
}

TEST(PowerFlow, CollapseIsReportedNotThrown) {
  NetBuilder b;
  b.node("S").node("L");
  b.section("s1", "S", "L", {1.0, 1.0});
  b.source("S", "F", "s1");
  auto net = b.build();
  auto view = apply_configuration(net, net.base_configuration());
  std::vector<Complex> loads(net.node_count());
  loads[1] = {90000.0, 0.0};
  auto sol = solve(view, loads);
  EXPECT_FALSE(sol.converged);
  EXPECT_THROW(head_flow(sol, view, 0), NumericalError);
}

TEST(VoltVar, CurvePoints) {
  EXPECT_DOUBLE_EQ(apply_volt_var(1.00), 0.0);
  EXPECT_DOUBLE_EQ(apply_volt_var(1.04), -1.0);
  EXPECT_NEAR(apply_volt_var(1.03), -0.5, 1e-12);
  EXPECT_DOUBLE_EQ(apply_volt_var(0.90), 1.0);
  EXPECT_NEAR(apply_volt_var(0.97), 0.5, 1e-12);
}

TEST(VoltVar, AbsorptionLowersVoltageRise) {
  NetBuilder b;
  b.node("S").node("x");
  b.section("s1", "S", "x", {2.0, 2.0});
  b.source("S", "F", "s1", 1.01);
  auto net = b.build();
  auto view = apply_configuration(net, net.base_configuration());
  InjectionSet inj;
  inj.kva.assign(net.node_count(), {});
  inj.kva[1] = {1500.0, 0.0};
  auto plain = solve(view, {}, inj);
  inj.volt_var_enabled = true;
  auto vv = solve(view, {}, inj);
  ASSERT_TRUE(plain.converged);
  ASSERT_TRUE(vv.converged);
  EXPECT_GT(plain.voltage_magnitude(1, 0), 1.02);
  EXPECT_LT(vv.voltage_magnitude(1, 0), plain.voltage_magnitude(1, 0));
}

TEST(PowerFlowCsv, WritersEmitOneRowPerEnergizedPhase) {
  auto net = chain_with_device({0.1, 0.1}, 100.0, 200.0);
  auto view = apply_configuration(net, net.base_configuration());
  auto sol = solve(view, testutil::peak_loads(net));
  std::ostringstream v, f;
  write_voltages_csv(v, sol, view);
  write_flows_csv(f, sol, view);
  const std::string vs = v.str(), fs = f.str();
  EXPECT_EQ(vs.rfind("node,phase,voltage_pu\n", 0), 0u);
  EXPECT_EQ(fs.rfind("section,phase,kw,kvar\n", 0), 0u);
  EXPECT_EQ(std::count(vs.begin(), vs.end(), '\n'), 1 + 3 * 3);
  EXPECT_EQ(std::count(fs.begin(), fs.end(), '\n'), 1 + 2 * 3);
}
