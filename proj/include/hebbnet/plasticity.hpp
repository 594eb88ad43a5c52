#pragma once

// Local learning rules and the per-sample dual objective they descend.
// With post-first index storage (W_ij connects presynaptic j in layer p-1
// to postsynaptic i in layer p) the rules read
//
//   dW^(p)_ij = eta * g_p * ( r^(p)_i r^(p-1)_j - W^(p)_ij / cW_ij )
//   dL^(p)_ij = eta/2 * g_p * ( r^(p)_i r^(p)_j - L^(p)_ij / (k_p cL_ij) )
//
// where g_p = gamma^(p-P) (or 1 with absorb_gamma, eta then being a
// per-layer rate) and k_p = 1 + gamma for p < P, 1 for the top layer.
// Feedforward updates are Hebbian, lateral updates anti-Hebbian.
//
// The sample objective
//
//   l_t = sum_p sum_synapses g_p W^2 / cW - sum_p sum_synapses g_p L^2 / (2 k_p cL)
//         + sum_p g_p ( -2 r^(p).W^(p) r^(p-1) + r^(p).L^(p) r^(p) + 2 sum F(r^(p)) )
//
// evaluated at the fixed point factorizes over synapses; its per-synapse
// derivatives (taking the fixed point as given) are exactly the negated /
// doubled update directions above, which is what makes the rules
// gradient-based despite using only local information.

#include "hebbnet/activation.hpp"
#include "hebbnet/common.hpp"
#include "hebbnet/dynamics.hpp"
#include "hebbnet/weights.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace hebbnet {

struct PlasticityConfig {
  enum class Schedule { Constant, InvT };

  std::vector<double> eta;        // per-layer rates; size 1 broadcasts
  bool absorb_gamma = true;       // drop gamma^(p-P), treat eta as per-layer
  bool strict_convergence = false;
  Schedule schedule = Schedule::Constant;
  double decay_t0 = 1.0;          // InvT: rate * t0 / (t0 + t)

  double rate(int layer_index, long t) const {
    require(!eta.empty(), "plasticity: eta not set");
    double e = eta.size() == 1 ? eta[0] : eta.at(layer_index);
    require(e >= 0.0, "plasticity: eta must be >= 0");
    if (schedule == Schedule::InvT) e *= decay_t0 / (decay_t0 + static_cast<double>(t));
    return e;
  }

  void validate(int P) const {
    require(eta.size() == 1 || static_cast<int>(eta.size()) == P,
            "plasticity: eta must have one entry or one per layer");
    for (double e : eta) require(e >= 0.0, "plasticity: eta must be >= 0");
  }
};

namespace detail {
inline double gamma_power(double gamma, int p, int P) {
  if (p == P) return 1.0;
  require(gamma > 0.0,
          "plasticity: gamma^(p-P) undefined for gamma = 0 below the top layer; "
          "use absorb_gamma with explicit per-layer rates");
  return std::pow(gamma, static_cast<double>(p - P));
}
inline double lateral_coeff(double gamma, int p, int P) {
  return p < P ? 1.0 + gamma : 1.0;
}
}  // namespace detail

// Accumulates the Hebbian products of one converged sample; apply() performs
// one masked in-place update. Splitting accumulation from application is
// what the minibatch path averages over.
struct SampleUpdate {
  // ww[p][k] = r^(p)_i * r^(p-1)_j at synapse k; ll[p][k] = r^(p)_i r^(p)_j.
  std::vector<std::vector<double>> ww, ll;
};

inline SampleUpdate hebbian_products(const std::vector<LayerWeights>& weights,
                                     const NetworkState& st) {
  const int P = static_cast<int>(weights.size());
  SampleUpdate su;
  su.ww.resize(P);
  su.ll.resize(P);
  for (int p = 0; p < P; ++p) {
    const Vec& post = st.r[p];
    const Vec& pre = p == 0 ? st.input : st.r[p - 1];
    const auto& W = weights[p].W;
    su.ww[p].resize(W.nnz());
    for (std::size_t k = 0; k < W.nnz(); ++k)
      su.ww[p][k] = post[W.row_index()[k]] * pre[W.col_index()[k]];
    const auto& L = weights[p].L;
    su.ll[p].resize(L.nnz());
    for (std::size_t k = 0; k < L.nnz(); ++k)
      su.ll[p][k] = post[L.row_index()[k]] * post[L.col_index()[k]];
  }
  return su;
}

inline void apply_update(std::vector<LayerWeights>& weights, const SampleUpdate& su,
                         double gamma, const PlasticityConfig& cfg, long t) {
  const int P = static_cast<int>(weights.size());
  cfg.validate(P);
  for (int p = 0; p < P; ++p) {
    const double g = cfg.absorb_gamma ? 1.0 : detail::gamma_power(gamma, p + 1, P);
    const double rate = cfg.rate(p, t) * g;
    const double kp = detail::lateral_coeff(gamma, p + 1, P);
    auto& W = weights[p].W;
    const auto& cw = W.constants();
    for (std::size_t k = 0; k < W.nnz(); ++k)
      W.values()[k] += rate * (su.ww[p][k] - W.values()[k] / cw[k]);
    auto& L = weights[p].L;
    const auto& cl = L.constants();
    for (std::size_t k = 0; k < L.nnz(); ++k)
      L.values()[k] += 0.5 * rate * (su.ll[p][k] - L.values()[k] / (kp * cl[k]));
  }
}

// One online update from a fixed-point state. In strict mode an unconverged
// state is rejected; otherwise truncated dynamics are accepted as-is.
inline void update_weights(std::vector<LayerWeights>& weights, const NetworkState& st,
                           double gamma, const PlasticityConfig& cfg, long t = 0) {
  if (cfg.strict_convergence && !st.converged)
    throw StaleStateError("update_weights: state is not a converged fixed point");
  apply_update(weights, hebbian_products(weights, st), gamma, cfg, t);
}

// ---------------------------------------------------------------------------
// Dual objective at the attained state.

inline double local_objective(const std::vector<LayerWeights>& weights,
                              const NetworkState& st, const std::vector<Activation>& acts,
                              double gamma) {
  const int P = static_cast<int>(weights.size());
  double lt = 0.0;
  Vec tmp;
  for (int p = 0; p < P; ++p) {
    const double g = detail::gamma_power(gamma, p + 1, P);
    const double kp = detail::lateral_coeff(gamma, p + 1, P);
    const auto& W = weights[p].W;
    for (std::size_t k = 0; k < W.nnz(); ++k)
      lt += g * W.values()[k] * W.values()[k] / W.constants()[k];
    const auto& L = weights[p].L;
    for (std::size_t k = 0; k < L.nnz(); ++k)
      lt -= g * L.values()[k] * L.values()[k] / (2.0 * kp * L.constants()[k]);
    const Vec& prev = p == 0 ? st.input : st.r[p - 1];
    W.matvec(prev, tmp);
    double term = -2.0 * st.r[p].dot(tmp);
    L.matvec(st.r[p], tmp);
    term += st.r[p].dot(tmp);
    double reg = 0.0;
    for (Eigen::Index i = 0; i < st.r[p].size(); ++i) reg += acts[p].F(st.r[p][i]);
    lt += g * (term + 2.0 * reg);
  }
  return lt;
}

// Per-synapse derivatives of l_t with the fixed point held fixed (valid by
// the envelope argument since r* minimizes the inner problem). Entry-aligned
// with the weight storage.
struct LocalGradients {
  std::vector<std::vector<double>> dW, dL;
};

inline LocalGradients local_objective_gradients(const std::vector<LayerWeights>& weights,
                                                const NetworkState& st, double gamma) {
  const int P = static_cast<int>(weights.size());
  LocalGradients gr;
  gr.dW.resize(P);
  gr.dL.resize(P);
  for (int p = 0; p < P; ++p) {
    const double g = detail::gamma_power(gamma, p + 1, P);
    const double kp = detail::lateral_coeff(gamma, p + 1, P);
    const Vec& post = st.r[p];
    const Vec& pre = p == 0 ? st.input : st.r[p - 1];
    const auto& W = weights[p].W;
    gr.dW[p].resize(W.nnz());
    for (std::size_t k = 0; k < W.nnz(); ++k)
      gr.dW[p][k] = 2.0 * g * (W.values()[k] / W.constants()[k] -
                               post[W.row_index()[k]] * pre[W.col_index()[k]]);
    const auto& L = weights[p].L;
    gr.dL[p].resize(L.nnz());
    for (std::size_t k = 0; k < L.nnz(); ++k)
      gr.dL[p][k] = g * (post[L.row_index()[k]] * post[L.col_index()[k]] -
                         L.values()[k] / (kp * L.constants()[k]));
  }
  return gr;
}

// ---------------------------------------------------------------------------
// Closed-form optima of the duality identities (unstructured case): for
// fixed outputs, W* = (1/T) sum r x^T minimizes the feedforward identity and
// L* = (1/T) sum r r^T maximizes the lateral one.

inline std::pair<Mat, Mat> dual_optimal_weights(const std::vector<Vec>& batch_r,
                                                const std::vector<Vec>& batch_x) {
  if (batch_r.empty() || batch_r.size() != batch_x.size())
    throw InvalidInputError("dual_optimal_weights: empty or mismatched batches");
  const double T = static_cast<double>(batch_r.size());
  const Eigen::Index N = batch_r[0].size(), K = batch_x[0].size();
  Mat W = Mat::Zero(N, K), L = Mat::Zero(N, N);
  for (std::size_t t = 0; t < batch_r.size(); ++t) {
    if (batch_r[t].size() != N || batch_x[t].size() != K)
      throw InvalidInputError("dual_optimal_weights: ragged batch");
    W.noalias() += batch_r[t] * batch_x[t].transpose();
    L.noalias() += batch_r[t] * batch_r[t].transpose();
  }
  W /= T;
  L /= T;
  return {W, L};
}

}  // namespace hebbnet
