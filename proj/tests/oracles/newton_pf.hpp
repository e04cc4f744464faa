#pragma once

// Nodal power-balance solve with Newton-Raphson on a bus admittance matrix.
// Shares no code with the sweep solver beyond the network types.

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include <hcap/network.hpp>

namespace oracle {

using C = std::complex<double>;

struct NewtonResult {
  std::vector<std::array<C, 3>> v_pu;  // per node, zero on absent phases
  bool converged = false;
  int iterations = 0;
};

/// `demand_kva[n]` is the node's net demand (load minus injection), split
/// evenly across its energized phases.
inline NewtonResult newton_power_flow(const hcap::EnergizedView& view, const std::vector<C>& demand_kva,
                                      double tol_va = 1e-3, int max_iter = 40) {
  const auto& net = view.network();
  const std::size_t nn = net.node_count();
  NewtonResult out;
  out.v_pu.assign(nn, {C{}, C{}, C{}});
  out.converged = true;
  const double pi = std::acos(-1.0);
  const C rot[3] = {C{1, 0}, std::polar(1.0, -2.0 * pi / 3.0), std::polar(1.0, 2.0 * pi / 3.0)};

  for (int ph = 0; ph < 3; ++ph) {
    // Buses carrying this phase, sources first.
    std::vector<int> bus;
    std::map<int, int> pos;
    std::vector<int> slack;
    for (std::size_t s = 0; s < net.sources().size(); ++s) {
      int n = net.source_node_index(static_cast<int>(s));
      if (!view.energized(n) || !view.node_phases(n).has(ph)) continue;
      pos[n] = static_cast<int>(bus.size());
      bus.push_back(n);
      slack.push_back(static_cast<int>(s));
    }
    const int n_slack = static_cast<int>(bus.size());
    for (std::size_t n = 0; n < nn; ++n) {
      if (!view.energized(static_cast<int>(n)) || !view.node_phases(static_cast<int>(n)).has(ph) || pos.count(n)) continue;
      pos[static_cast<int>(n)] = static_cast<int>(bus.size());
      bus.push_back(static_cast<int>(n));
    }
    const int nb = static_cast<int>(bus.size());
    if (nb == n_slack) {
      for (int k = 0; k < n_slack; ++k)
        out.v_pu[bus[k]][ph] = net.sources()[slack[k]].voltage_setpoint * rot[ph];
      continue;
    }

    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(nb, nb);
    for (std::size_t s = 0; s < net.section_count(); ++s) {
      int si = static_cast<int>(s);
      if (!view.section_energized(si) || !net.sections()[s].phases.has(ph)) continue;
      int a = pos.at(net.from_index(si)), b = pos.at(net.to_index(si));
      C y = 1.0 / net.sections()[s].impedance;
      Y(a, a) += y;
      Y(b, b) += y;
      Y(a, b) -= y;
      Y(b, a) -= y;
    }

    Eigen::VectorXcd V(nb);
    std::vector<double> vbase(nb);
    Eigen::VectorXcd S_spec(nb);  // injected VA per bus (negative of demand)
    for (int k = 0; k < nb; ++k) {
      int n = bus[k];
      vbase[k] = net.nodes()[n].nominal_voltage;
      int phases = view.node_phases(n).count();
      S_spec(k) = -demand_kva[n] * 1000.0 / static_cast<double>(phases);
    }
    for (int k = 0; k < n_slack; ++k) V(k) = net.sources()[slack[k]].voltage_setpoint * vbase[k] * rot[ph];
    for (int k = n_slack; k < nb; ++k) {
      int src = view.source_of(bus[k]);
      V(k) = net.sources()[src].voltage_setpoint * vbase[k] * rot[ph];
    }

    const int m = nb - n_slack;
    auto mismatch = [&](const Eigen::VectorXcd& v) {
      Eigen::VectorXcd I = Y * v;
      Eigen::VectorXd f(2 * m);
      for (int k = 0; k < m; ++k) {
        C s = v(n_slack + k) * std::conj(I(n_slack + k)) - S_spec(n_slack + k);
        f(2 * k) = s.real();
        f(2 * k + 1) = s.imag();
      }
      return f;
    };

    bool ok = false;
    int it = 0;
    for (it = 0; it < max_iter; ++it) {
      Eigen::VectorXd f = mismatch(V);
      if (f.cwiseAbs().maxCoeff() < tol_va) {
        ok = true;
        break;
      }
      // Analytic Jacobian in rectangular coordinates.
      Eigen::VectorXcd I = Y * V;
      Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * m, 2 * m);
      for (int r = 0; r < m; ++r) {
        int i = n_slack + r;
        for (int c = 0; c < m; ++c) {
          int j = n_slack + c;
          // dS_i/de_j and dS_i/df_j with S_i = V_i conj(I_i)
          C dS_de = V(i) * std::conj(Y(i, j));
          C dS_df = V(i) * std::conj(Y(i, j) * C{0, 1});
          if (i == j) {
            dS_de += std::conj(I(i));
            dS_df += C{0, 1} * std::conj(I(i));
          }
          J(2 * r, 2 * c) = dS_de.real();
          J(2 * r, 2 * c + 1) = dS_df.real();
          J(2 * r + 1, 2 * c) = dS_de.imag();
          J(2 * r + 1, 2 * c + 1) = dS_df.imag();
        }
      }
      Eigen::VectorXd dx = J.fullPivLu().solve(-f);
      for (int c = 0; c < m; ++c) V(n_slack + c) += C{dx(2 * c), dx(2 * c + 1)};
    }
    out.iterations = std::max(out.iterations, it);
    out.converged = out.converged && ok;
    for (int k = 0; k < nb; ++k) out.v_pu[bus[k]][ph] = V(k) / vbase[k];
  }
  return out;
}

}  // namespace oracle
