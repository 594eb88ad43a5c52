#pragma once

// Multi-layer recurrent dynamics integrated to a fixed point with explicit
// Euler, and the energy function that the dynamics descend:
//
//   tau du^(p)/ds = -u^(p) + W^(p) r^(p-1) - (L^(p) - I) r^(p)
//                   + gamma * W^(p+1)^T r^(p+1)        (absent for p = P)
//   r^(p) = f(u^(p))
//
//   E = sum_p gamma^(p-P) * ( -2 r^(p).W^(p) r^(p-1) + r^(p).L^(p) r^(p)
//                             + 2 sum_i F(r_i^(p)) )
//
// With monotone bounded activations and symmetric L, E is nonincreasing
// along trajectories and bounded below, so integration converges to a fixed
// point. All layers step simultaneously from the current outputs.

#include "hebbnet/activation.hpp"
#include "hebbnet/common.hpp"
#include "hebbnet/weights.hpp"

#include <cmath>
#include <vector>

namespace hebbnet {

struct DynamicsConfig {
  enum class Mode { ToConvergence, FixedBudget };

  double tau = 1.0;
  double step = 0.1;   // Euler step as a fraction of tau, in (0, 1]
  double tol = 1e-6;   // threshold on the max-norm of the scaled update
  int max_iters = 10000;
  Mode mode = Mode::ToConvergence;
  int budget = 100;    // steps in FixedBudget mode
  bool warm_start = false;

  void validate() const {
    require(tau > 0.0, "dynamics: tau must be > 0");
    require(step > 0.0 && step <= 1.0, "dynamics: step must be in (0, 1] as a fraction of tau");
    require(tol > 0.0, "dynamics: tol must be > 0");
    require(max_iters >= 1, "dynamics: max_iters must be >= 1");
    require(budget >= 1, "dynamics: budget must be >= 1");
  }
};

struct NetworkState {
  Vec input;               // clamped r^(0) = x_t
  std::vector<Vec> u;      // internal potentials, index p-1 for layer p
  std::vector<Vec> r;      // outputs, r[p-1] = f(u[p-1])
  bool converged = false;
  int iterations = 0;
  double residual = kInf;              // last max scaled update, all layers
  std::vector<double> layer_residuals; // last max scaled update per layer

  int layers() const { return static_cast<int>(u.size()); }
  const Vec& output(int p) const { return p == 0 ? input : r[p - 1]; }
};

struct TraceRow {
  int iter;
  double energy;
  double max_residual;
};

namespace detail {

struct DynWorkspace {
  std::vector<Vec> du;
  Vec drive, lat, fb;
};

inline void check_shapes(const NetworkState& st, const std::vector<LayerWeights>& w,
                         const std::vector<Activation>& acts, double gamma) {
  const int P = static_cast<int>(w.size());
  require(P >= 1, "dynamics: at least one layer required");
  require(st.layers() == P, "dynamics: state/weights layer count mismatch");
  require(static_cast<int>(acts.size()) == P, "dynamics: one activation per layer required");
  require(gamma >= 0.0, "dynamics: gamma must be >= 0");
  for (int p = 0; p < P; ++p) {
    const Vec& prev = p == 0 ? st.input : st.r[p - 1];
    require(w[p].W.cols() == prev.size() && w[p].W.rows() == st.u[p].size(),
            "dynamics: W shape mismatch at layer " + std::to_string(p + 1));
    require(w[p].L.rows() == st.u[p].size() && w[p].L.cols() == st.u[p].size(),
            "dynamics: L shape mismatch at layer " + std::to_string(p + 1));
  }
}

// One simultaneous Euler step; returns max |h/tau * du|.
inline double step_unchecked(NetworkState& st, const std::vector<LayerWeights>& weights,
                             const std::vector<Activation>& acts, double gamma, double h,
                             DynWorkspace& ws) {
  const int P = static_cast<int>(weights.size());
  ws.du.resize(P);
  for (int p = 0; p < P; ++p) {
    const Vec& prev = p == 0 ? st.input : st.r[p - 1];
    weights[p].W.matvec(prev, ws.drive);
    weights[p].L.matvec(st.r[p], ws.lat);
    ws.du[p] = -st.u[p] + ws.drive - ws.lat + st.r[p];
    if (p + 1 < P && gamma != 0.0) {
      weights[p + 1].W.matvec_transpose(st.r[p + 1], ws.fb);
      ws.du[p] += gamma * ws.fb;
    }
  }
  double max_update = 0.0;
  st.layer_residuals.resize(P);
  for (int p = 0; p < P; ++p) {
    st.u[p] += h * ws.du[p];
    if (!all_finite(st.u[p]))
      throw DivergenceError("dynamics diverged at layer " + std::to_string(p + 1));
    for (Eigen::Index i = 0; i < st.u[p].size(); ++i)
      st.r[p][i] = acts[p].f(st.u[p][i]);
    const double m = h * ws.du[p].cwiseAbs().maxCoeff();
    st.layer_residuals[p] = m;
    if (m > max_update) max_update = m;
  }
  return max_update;
}

}  // namespace detail

inline double step_dynamics(NetworkState& st, const std::vector<LayerWeights>& weights,
                            const std::vector<Activation>& acts, double gamma,
                            const DynamicsConfig& cfg) {
  cfg.validate();
  detail::check_shapes(st, weights, acts, gamma);
  detail::DynWorkspace ws;
  return detail::step_unchecked(st, weights, acts, gamma, cfg.step, ws);
}

inline double energy(const NetworkState& st, const std::vector<LayerWeights>& weights,
                     const std::vector<Activation>& acts, double gamma) {
  const int P = static_cast<int>(weights.size());
  if (P > 1 && gamma <= 0.0)
    throw DomainError("energy: layer weights gamma^(p-P) are undefined for gamma = 0 with P > 1");
  double e = 0.0;
  Vec tmp;
  for (int p = 0; p < P; ++p) {
    const double w = std::pow(gamma, static_cast<double>(p + 1 - P));
    const Vec& prev = p == 0 ? st.input : st.r[p - 1];
    weights[p].W.matvec(prev, tmp);
    double term = -2.0 * st.r[p].dot(tmp);
    weights[p].L.matvec(st.r[p], tmp);
    term += st.r[p].dot(tmp);
    double reg = 0.0;
    for (Eigen::Index i = 0; i < st.r[p].size(); ++i) reg += acts[p].F(st.r[p][i]);
    term += 2.0 * reg;
    e += w * term;
  }
  return e;
}

inline NetworkState make_state(const Vec& x, const std::vector<LayerWeights>& weights,
                               const std::vector<Activation>& acts) {
  NetworkState st;
  st.input = x;
  const int P = static_cast<int>(weights.size());
  st.u.resize(P);
  st.r.resize(P);
  for (int p = 0; p < P; ++p) {
    st.u[p] = Vec::Zero(weights[p].W.rows());
    st.r[p] = Vec::Constant(weights[p].W.rows(), acts[p].f(0.0));
  }
  return st;
}

// Integrate from a cold start (u = 0), or from `warm` when warm-starting is
// enabled. ToConvergence stops once the max scaled update drops below tol;
// exhausting max_iters leaves converged = false rather than raising.
// FixedBudget runs exactly cfg.budget steps and reports whether the final
// step met the tolerance.
inline NetworkState run_to_fixed_point(const Vec& x, const std::vector<LayerWeights>& weights,
                                       const std::vector<Activation>& acts, double gamma,
                                       const DynamicsConfig& cfg,
                                       std::vector<TraceRow>* trace = nullptr,
                                       const NetworkState* warm = nullptr) {
  cfg.validate();
  if (!all_finite(x)) throw InvalidInputError("run_to_fixed_point: non-finite input");
  NetworkState st;
  if (cfg.warm_start && warm != nullptr && warm->layers() == static_cast<int>(weights.size())) {
    st = *warm;
    st.input = x;
  } else {
    st = make_state(x, weights, acts);
  }
  detail::check_shapes(st, weights, acts, gamma);
  detail::DynWorkspace ws;
  const bool fixed = cfg.mode == DynamicsConfig::Mode::FixedBudget;
  const int steps = fixed ? cfg.budget : cfg.max_iters;
  const bool energy_ok = weights.size() == 1 || gamma > 0.0;
  for (int it = 0; it < steps; ++it) {
    st.residual = detail::step_unchecked(st, weights, acts, gamma, cfg.step, ws);
    st.iterations = it + 1;
    if (trace)
      trace->push_back({it + 1, energy_ok ? energy(st, weights, acts, gamma)
                                          : std::numeric_limits<double>::quiet_NaN(),
                        st.residual});
    if (!fixed && st.residual < cfg.tol) break;
  }
  st.converged = st.residual < cfg.tol;
  return st;
}

}  // namespace hebbnet
