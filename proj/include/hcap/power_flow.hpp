#pragma once

#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "network.hpp"

namespace hcap {

/// Piecewise-linear volt-var droop. Returns reactive output as a fraction of
/// rated kVA; positive injects (capacitive), negative absorbs (inductive).
struct VoltVarCurve {
  double v_full_inject = 0.96;
  double v_deadband_low = 0.98;
  double v_deadband_high = 1.02;
  double v_full_absorb = 1.04;

  double operator()(double v) const {
    if (v <= v_full_inject) return 1.0;
    if (v < v_deadband_low) return (v_deadband_low - v) / (v_deadband_low - v_full_inject);
    if (v <= v_deadband_high) return 0.0;
    if (v < v_full_absorb) return -(v - v_deadband_high) / (v_full_absorb - v_deadband_high);
    return -1.0;
  }
};

inline double apply_volt_var(double voltage_pu, const VoltVarCurve& curve = {}) { return curve(voltage_pu); }

/// Per-node complex injections in kW/kvar, generation positive. An empty
/// vector means no injections.
struct InjectionSet {
  std::vector<Complex> kva;
  bool volt_var_enabled = false;
  VoltVarCurve curve{};

  bool empty() const { return kva.empty(); }
};

struct PowerFlowOptions {
  double tolerance_pu = 1e-6;
  int max_iterations = 50;
  double volt_var_damping = 0.5;
};

struct PowerFlowSolution {
  std::vector<PerPhase<Complex>> node_voltages;   // per-unit; zero on absent phases
  std::vector<PerPhase<Complex>> branch_flows;    // kVA at the upstream end, positive away from source
  std::vector<PerPhase<double>> branch_currents;  // amperes
  std::vector<Complex> source_power;              // kVA delivered by each source
  std::vector<double> tree_losses_kw;
  std::vector<char> tree_converged;
  double losses_kw = 0.0;
  bool converged = false;
  int iterations = 0;

  double voltage_magnitude(int node, int phase) const { return magnitude(node_voltages[node][phase]); }

  void recompute_totals() {
    losses_kw = 0.0;
    for (double l : tree_losses_kw) losses_kw += l;
    converged = true;
    for (char c : tree_converged) converged = converged && c;
  }
};

/// Flattened sweep order for each source tree of an energized view. Built once
/// per view and shared across many solves.
class RadialModel {
 public:
  struct Tree {
    std::vector<int> node;        // network node index, root first
    std::vector<int> parent;      // position of parent in `node`, -1 at root
    std::vector<int> section;     // parent section, -1 at root
    std::vector<Complex> z;       // parent section impedance, ohms
    std::vector<std::uint8_t> phases;
    std::vector<double> v_nominal;
    double v_source = 0.0;        // volts
  };

  explicit RadialModel(const EnergizedView& view) : view_(&view) {
    const auto& net = view.network();
    trees_.resize(view.tree_count());
    position_.assign(net.node_count(), -1);
    for (std::size_t t = 0; t < view.tree_count(); ++t) {
      auto& tr = trees_[t];
      const auto& order = view.tree(static_cast<int>(t));
      for (std::size_t i = 0; i < order.size(); ++i) position_[order[i]] = static_cast<int>(i);
      for (int v : order) {
        tr.node.push_back(v);
        int ps = view.parent_section(v);
        tr.parent.push_back(ps < 0 ? -1 : position_[view.parent_node(v)]);
        tr.section.push_back(ps);
        tr.z.push_back(ps < 0 ? Complex{} : net.sections()[ps].impedance);
        tr.phases.push_back(view.node_phases(v).mask());
        tr.v_nominal.push_back(net.nodes()[v].nominal_voltage);
      }
      const auto& src = net.sources()[t];
      tr.v_source = src.voltage_setpoint * net.nodes()[net.source_node_index(static_cast<int>(t))].nominal_voltage;
    }
  }

  const EnergizedView& view() const { return *view_; }
  const Tree& tree(int t) const { return trees_[t]; }
  std::size_t tree_count() const { return trees_.size(); }

 private:
  const EnergizedView* view_;
  std::vector<Tree> trees_;
  std::vector<int> position_;
};

namespace detail {

// Complex arithmetic without inf/nan recovery.
inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline double abs2(Complex z) { return z.real() * z.real() + z.imag() * z.imag(); }

/// conj(s / v)
inline Complex conj_div(Complex s, Complex v) {
  double inv = 1.0 / (v.real() * v.real() + v.imag() * v.imag());
  return {(s.real() * v.real() + s.imag() * v.imag()) * inv, (s.real() * v.imag() - s.imag() * v.real()) * inv};
}

struct SweepBuffers {
  std::vector<PerPhase<Complex>> v, i_node, i_branch;
  std::vector<Complex> s_node;
  std::vector<int> nphase;

  void resize(std::size_t n) {
    v.assign(n, PerPhase<Complex>{});
    i_node.assign(n, PerPhase<Complex>{});
    i_branch.assign(n, PerPhase<Complex>{});
    s_node.assign(n, Complex{});
    nphase.assign(n, 0);
  }
};

inline const PerPhase<Complex>& phase_rotation() {
  static const PerPhase<Complex> rot{Complex{1.0, 0.0}, std::polar(1.0, -2.0 * std::numbers::pi / 3.0),
                                     std::polar(1.0, 2.0 * std::numbers::pi / 3.0)};
  return rot;
}

inline void check_injections(const EnergizedView& view, const InjectionSet& inj) {
  if (inj.kva.empty()) return;
  if (inj.kva.size() != view.network().node_count()) throw Error("injection vector size does not match node count");
  for (std::size_t n = 0; n < inj.kva.size(); ++n)
    if (inj.kva[n] != Complex{} && !view.energized(static_cast<int>(n)))
      throw Error("injection at de-energized node '" + view.network().nodes()[n].id + "'");
}

}  // namespace detail

inline PowerFlowSolution make_empty_solution(const EnergizedView& view) {
  const auto& net = view.network();
  PowerFlowSolution sol;
  sol.node_voltages.assign(net.node_count(), PerPhase<Complex>{});
  sol.branch_flows.assign(net.section_count(), PerPhase<Complex>{});
  sol.branch_currents.assign(net.section_count(), PerPhase<double>{});
  sol.source_power.assign(view.tree_count(), Complex{});
  sol.tree_losses_kw.assign(view.tree_count(), 0.0);
  sol.tree_converged.assign(view.tree_count(), 1);
  return sol;
}

/// Forward-backward sweep on one source tree, writing that tree's entries of
/// `sol` in place. With `warm_start`, iteration begins from the voltages
/// already stored in `sol`. Loads are constant power and split evenly across
/// the node's energized phases.
inline void solve_tree(const RadialModel& model, int t, const std::vector<Complex>& loads_kva,
                       const InjectionSet& injections, PowerFlowSolution& sol, const PowerFlowOptions& opt = {},
                       bool warm_start = false) {
  const auto& tr = model.tree(t);
  const std::size_t n = tr.node.size();
  const auto& rot = detail::phase_rotation();
  const bool has_inj = !injections.kva.empty();

  thread_local detail::SweepBuffers buf;
  buf.resize(n);
  auto& v = buf.v;
  auto& i_node = buf.i_node;
  auto& i_branch = buf.i_branch;
  auto& s_node = buf.s_node;  // net demand per node, VA per phase
  auto& nphase = buf.nphase;
  std::vector<double> q_vv;   // volt-var kvar per node (total)

  for (std::size_t k = 0; k < n; ++k) {
    int node = tr.node[k];
    nphase[k] = Phases(tr.phases[k]).count();
    Complex s = loads_kva.empty() ? Complex{} : loads_kva[node];
    if (has_inj) s -= injections.kva[node];
    s_node[k] = nphase[k] > 0 ? s * (1000.0 / nphase[k]) : Complex{};
    for (int p = 0; p < 3; ++p) {
      if (!((tr.phases[k] >> p) & 1U)) continue;
      v[k][p] = warm_start && sol.node_voltages[node][p] != Complex{} ? sol.node_voltages[node][p] * tr.v_nominal[k]
                                                                      : tr.v_source * rot[p];
    }
  }
  if (has_inj && injections.volt_var_enabled) q_vv.assign(n, 0.0);

  auto injection_currents = [&] {
    for (std::size_t k = 0; k < n; ++k) {
      Complex s = s_node[k];
      if (!q_vv.empty() && nphase[k] > 0) s -= Complex{0.0, q_vv[k] * 1000.0 / nphase[k]};
      for (int p = 0; p < 3; ++p) {
        if (!((tr.phases[k] >> p) & 1U)) continue;
        i_node[k][p] = s == Complex{} ? Complex{} : detail::conj_div(s, v[k][p]);
      }
    }
  };
  auto backward = [&] {
    for (std::size_t k = 0; k < n; ++k) i_branch[k] = i_node[k];
    for (std::size_t k = n; k-- > 1;) {
      int par = tr.parent[k];
      for (int p = 0; p < 3; ++p) i_branch[par][p] += i_branch[k][p];
    }
  };

  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= opt.max_iterations; ++iter) {
    injection_currents();
    backward();
    double max_dv = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      int par = tr.parent[k];
      for (int p = 0; p < 3; ++p) {
        if (!((tr.phases[k] >> p) & 1U)) continue;
        Complex vn = v[par][p] - detail::mul(tr.z[k], i_branch[k][p]);
        max_dv = std::max(max_dv, detail::abs2(vn - v[k][p]) / (tr.v_nominal[k] * tr.v_nominal[k]));
        v[k][p] = vn;
      }
    }
    double max_dq = 0.0;
    if (!q_vv.empty()) {
      for (std::size_t k = 0; k < n; ++k) {
        double rated = injections.kva[tr.node[k]].real();
        if (rated <= 0.0 || nphase[k] == 0) continue;
        double vm = 0.0;
        for (int p = 0; p < 3; ++p)
          if ((tr.phases[k] >> p) & 1U) vm += magnitude(v[k][p]) / tr.v_nominal[k];
        double target = injections.curve(vm / nphase[k]) * rated;
        double next = q_vv[k] + opt.volt_var_damping * (target - q_vv[k]);
        max_dq = std::max(max_dq, std::abs(next - q_vv[k]));
        q_vv[k] = next;
      }
    }
    max_dv = std::sqrt(max_dv);
    if (!std::isfinite(max_dv)) break;
    if (max_dv <= opt.tolerance_pu && max_dq <= 1e-3) {
      converged = true;
      break;
    }
  }

  // Final currents consistent with the converged voltages.
  injection_currents();
  backward();

  Complex s_source{};
  double losses = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    int node = tr.node[k];
    for (int p = 0; p < 3; ++p) {
      bool on = (tr.phases[k] >> p) & 1U;
      sol.node_voltages[node][p] = on ? v[k][p] / tr.v_nominal[k] : Complex{};
    }
    if (k == 0) {
      for (int p = 0; p < 3; ++p)
        if ((tr.phases[0] >> p) & 1U) s_source += detail::mul(v[0][p], std::conj(i_branch[0][p])) / 1000.0;
      continue;
    }
    int sec = tr.section[k];
    int par = tr.parent[k];
    for (int p = 0; p < 3; ++p) {
      bool on = (tr.phases[k] >> p) & 1U;
      sol.branch_flows[sec][p] = on ? detail::mul(v[par][p], std::conj(i_branch[k][p])) / 1000.0 : Complex{};
      double amps = on ? magnitude(i_branch[k][p]) : 0.0;
      sol.branch_currents[sec][p] = amps;
      losses += amps * amps * tr.z[k].real() / 1000.0;
    }
  }
  sol.source_power[t] = s_source;
  sol.tree_losses_kw[t] = losses;
  sol.tree_converged[t] = converged ? 1 : 0;
  sol.iterations = std::max(sol.iterations, iter);
}

/// Solves every source tree of the model's view. Sections and nodes outside
/// any tree keep zero entries.
inline PowerFlowSolution solve(const RadialModel& model, const std::vector<Complex>& loads_kva,
                               const InjectionSet& injections = {}, const PowerFlowOptions& opt = {}) {
  const auto& view = model.view();
  detail::check_injections(view, injections);
  auto sol = make_empty_solution(view);
  for (std::size_t t = 0; t < model.tree_count(); ++t) solve_tree(model, static_cast<int>(t), loads_kva, injections, sol, opt);
  sol.recompute_totals();
  return sol;
}

inline PowerFlowSolution solve(const EnergizedView& view, const std::vector<Complex>& loads_kva,
                               const InjectionSet& injections = {}, const PowerFlowOptions& opt = {}) {
  RadialModel model(view);
  return solve(model, loads_kva, injections, opt);
}

/// Real power through a source's head section; negative is reverse flow into
/// the substation.
inline double head_flow(const PowerFlowSolution& sol, const EnergizedView& view, int source) {
  if (!sol.tree_converged.at(source)) throw NumericalError("head_flow on an unconverged solution");
  int s = view.network().source_head_section(source);
  if (!view.section_energized(s)) return 0.0;
  const auto& f = sol.branch_flows[s];
  return f[0].real() + f[1].real() + f[2].real();
}

/// Real power through a switch, positive toward its load side.
inline double device_flow(const PowerFlowSolution& sol, const EnergizedView& view, int switch_index) {
  int s = view.network().switch_section_index(switch_index);
  if (!view.section_closed(s))
    throw Error("switch '" + view.network().switches()[switch_index].id + "' is open; no defined flow");
  if (!view.section_energized(s)) return 0.0;
  int src = view.source_of(view.downstream_node(s));
  if (!sol.tree_converged.at(src)) throw NumericalError("device_flow on an unconverged solution");
  const auto& f = sol.branch_flows[s];
  return f[0].real() + f[1].real() + f[2].real();
}

/// Dense per-node load vector from a sparse node-id map.
inline std::vector<Complex> loads_from_map(const Network& net, const std::vector<std::pair<std::string, Complex>>& m) {
  std::vector<Complex> out(net.node_count());
  for (const auto& [id, s] : m) out[net.node_index(id)] += s;
  return out;
}

inline void write_voltages_csv(std::ostream& os, const PowerFlowSolution& sol, const EnergizedView& view) {
  const auto& net = view.network();
  os << "node,phase,voltage_pu\n";
  static const char* names = "ABC";
  for (std::size_t n = 0; n < net.node_count(); ++n) {
    if (!view.energized(static_cast<int>(n))) continue;
    for (int p = 0; p < 3; ++p)
      if (view.node_phases(static_cast<int>(n)).has(p))
        os << net.nodes()[n].id << ',' << names[p] << ',' << fmt_fixed(std::abs(sol.node_voltages[n][p]), 6) << '\n';
  }
}

inline void write_flows_csv(std::ostream& os, const PowerFlowSolution& sol, const EnergizedView& view) {
  const auto& net = view.network();
  os << "section,phase,kw,kvar\n";
  static const char* names = "ABC";
  for (std::size_t s = 0; s < net.section_count(); ++s) {
    if (!view.section_energized(static_cast<int>(s))) continue;
    for (int p = 0; p < 3; ++p)
      if (net.sections()[s].phases.has(p))
        os << net.sections()[s].id << ',' << names[p] << ',' << fmt_fixed(sol.branch_flows[s][p].real()) << ','
           << fmt_fixed(sol.branch_flows[s][p].imag()) << '\n';
  }
}

}  // namespace hcap
