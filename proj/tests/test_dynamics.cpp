#include "hebbnet/dynamics.hpp"

#include "hebbnet/verify.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hebbnet;

namespace {

std::vector<LayerWeights> scalar_net(double w, double l) {
  std::vector<LayerWeights> weights;
  LayerWeights lw(StructureMask::all_to_all(1, 1), StructureMask::all_to_all(1, 1));
  lw.W.values()[0] = w;
  lw.L.values()[0] = l;
  weights.push_back(std::move(lw));
  return weights;
}

TEST(Dynamics, ZeroInputZeroInitIsFixedPoint) {
  Rng rng = make_rng(4, "zero");
  auto net = verify_detail::random_net(2, 8, false, rng);
  // tanh everywhere so f(0) = 0 exactly
  for (auto& a : net.acts) a = Activation::tanh();
  DynamicsConfig cfg;
  cfg.tol = 1e-12;
  NetworkState st = run_to_fixed_point(Vec::Zero(net.sizes[0]), net.weights, net.acts,
                                       net.gamma, cfg);
  EXPECT_TRUE(st.converged);
  EXPECT_EQ(st.iterations, 1);
  for (const auto& r : st.r) EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dynamics, ScalarLinearFixedPoint) {
  // u = Wx - (L - 1) r with W = 2, L = 2, x = 1 and r = u solves r = 1.
  auto weights = scalar_net(2.0, 2.0);
  std::vector<Activation> acts{Activation::linear()};
  DynamicsConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iters = 100000;
  Vec x(1);
  x << 1.0;
  NetworkState st = run_to_fixed_point(x, weights, acts, 0.0, cfg);
  EXPECT_TRUE(st.converged);
  EXPECT_NEAR(st.r[0][0], 1.0, 1e-9);
}

TEST(Dynamics, GammaZeroDecouplesLowerLayer) {
  Rng rng = make_rng(5, "decouple");
  auto net = verify_detail::random_net(2, 10, false, rng);
  DynamicsConfig cfg;
  cfg.tol = 1e-11;
  cfg.max_iters = 100000;
  const Vec x = verify_detail::random_vec(net.sizes[0], rng);
  NetworkState both = run_to_fixed_point(x, net.weights, net.acts, 0.0, cfg);

  std::vector<LayerWeights> only_first{net.weights[0]};
  std::vector<Activation> act1{net.acts[0]};
  NetworkState single = run_to_fixed_point(x, only_first, act1, 0.0, cfg);
  // Identical trajectories, not merely identical fixed points.
  EXPECT_EQ((both.r[0] - single.r[0]).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dynamics, EnergyExamples) {
  // All r = 0 with F(0) = 0 gives E = 0.
  auto weights = scalar_net(2.0, 3.0);
  std::vector<Activation> acts{Activation::capped_relu(0.0, 1.0)};
  NetworkState st = make_state(Vec::Zero(1), weights, acts);
  EXPECT_EQ(energy(st, weights, acts, 0.0), 0.0);

  // P=1, r=[1], x=[1], W=[2], L=[3], linear: E = -2*2 + 3 + 0 = -1.
  std::vector<Activation> lin{Activation::linear()};
  st.input = Vec::Ones(1);
  st.u[0] = Vec::Ones(1);
  st.r[0] = Vec::Ones(1);
  EXPECT_DOUBLE_EQ(energy(st, weights, lin, 0.0), -1.0);
}

TEST(Dynamics, EnergyUndefinedForGammaZeroDeep) {
  Rng rng = make_rng(6, "gamma0");
  auto net = verify_detail::random_net(2, 4, false, rng);
  NetworkState st = make_state(Vec::Zero(net.sizes[0]), net.weights, net.acts);
  EXPECT_THROW(energy(st, net.weights, net.acts, 0.0), DomainError);
}

// Energy is nonincreasing step by step (small-sample version of the
// acceptance suite's 100-network run).
TEST(Dynamics, LyapunovDescent) {
  SuiteResult res = verify_lyapunov(15, /*seed=*/11, /*step=*/0.01, /*slack=*/1e-8, 800);
  EXPECT_TRUE(res.pass) << res.details;
}

TEST(Dynamics, FixedPointStationarity) {
  Rng rng = make_rng(7, "stationary");
  auto net = verify_detail::random_net(2, 10, false, rng);
  DynamicsConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iters = 200000;
  const Vec x = verify_detail::random_vec(net.sizes[0], rng);
  NetworkState st = run_to_fixed_point(x, net.weights, net.acts, net.gamma, cfg);
  ASSERT_TRUE(st.converged);
  const double res = step_dynamics(st, net.weights, net.acts, net.gamma, cfg);
  EXPECT_LT(res, cfg.tol * 10);
}

TEST(Dynamics, BoundsPreservedThroughout) {
  Rng rng = make_rng(8, "bounds");
  auto net = verify_detail::random_net(3, 8, false, rng);
  DynamicsConfig cfg;
  NetworkState st = make_state(verify_detail::random_vec(net.sizes[0], rng), net.weights, net.acts);
  for (int it = 0; it < 300; ++it) {
    step_dynamics(st, net.weights, net.acts, net.gamma, cfg);
    for (int p = 0; p < 3; ++p) {
      EXPECT_GE(st.r[p].minCoeff(), net.acts[p].lower());
      EXPECT_LE(st.r[p].maxCoeff(), net.acts[p].upper());
    }
  }
}

// Two-neuron tanh network against a brute-force grid search of the energy
// over [-1,1]^2 (the small version of the fixed-point oracle).
TEST(Dynamics, MatchesGridSearchMinimum) {
  Rng rng = make_rng(12, "grid2");
  verify_detail::RandomNet net;
  net.sizes = {3, 2};
  net.gamma = 0.0;
  net.acts = {Activation::tanh()};
  net.w_masks = {StructureMask::all_to_all(2, 3)};
  net.l_masks = {StructureMask::all_to_all(2, 2)};
  LayerWeights lw(net.w_masks[0], net.l_masks[0]);
  init_layer_weights(lw, rng);
  Mat sym(2, 2);
  sym << 1.1, 0.2, 0.2, 0.9;
  lw.L.set_dense(sym);
  net.weights.push_back(std::move(lw));
  const Vec x = verify_detail::random_vec(3, rng, 0.7);

  DynamicsConfig cfg;
  cfg.tol = 1e-10;
  cfg.max_iters = 200000;
  cfg.step = 0.05;
  NetworkState st = run_to_fixed_point(x, net.weights, net.acts, 0.0, cfg);
  ASSERT_TRUE(st.converged);

  const auto qe = verify_detail::assemble_energy(net, x);
  const auto [e_grid, r_grid] = verify_detail::grid_minimum(qe, 1e-3);
  const double e_dyn = energy(st, net.weights, net.acts, 0.0);
  EXPECT_LE(e_dyn, e_grid + 1e-4);
  EXPECT_NEAR(st.r[0][0], r_grid[0], 2e-3);
  EXPECT_NEAR(st.r[0][1], r_grid[1], 2e-3);
}

// The two-layer feedback toy converges comfortably within its step budget;
// the iteration counts are frozen as a regression baseline.
TEST(Dynamics, ToyNetworkConvergenceBaseline) {
  Preset preset = preset_toy61();
  NetworkConfig cfg = config_from_json(preset.config);
  Dataset d = dataset_from_manifest(preset.data_manifest, ".");
  Network net = Network::initialize(cfg);
  DynamicsConfig dyn;
  dyn.step = 0.05;
  dyn.tol = 1e-6;
  dyn.max_iters = 5000;
  NetworkState st = net.infer(d.samples.row(0).transpose(), cfg.gamma, dyn);
  EXPECT_TRUE(st.converged);
  EXPECT_LE(st.iterations, 5000);
  EXPECT_EQ(st.iterations, 505);  // frozen baseline for the untrained preset net
}

TEST(Dynamics, WarmStartConvergesFasterToSameFixedPoint) {
  Rng rng = make_rng(14, "warm");
  auto net = verify_detail::random_net(2, 10, false, rng);
  DynamicsConfig cfg;
  cfg.tol = 1e-9;
  cfg.max_iters = 100000;
  const Vec x = verify_detail::random_vec(net.sizes[0], rng);
  NetworkState cold = run_to_fixed_point(x, net.weights, net.acts, net.gamma, cfg);
  ASSERT_TRUE(cold.converged);
  DynamicsConfig warm_cfg = cfg;
  warm_cfg.warm_start = true;
  // restart on a nearby input from the previous state
  const Vec x2 = x + 0.01 * verify_detail::random_vec(net.sizes[0], rng);
  NetworkState warm = run_to_fixed_point(x2, net.weights, net.acts, net.gamma, warm_cfg,
                                         nullptr, &cold);
  NetworkState cold2 = run_to_fixed_point(x2, net.weights, net.acts, net.gamma, cfg);
  ASSERT_TRUE(warm.converged && cold2.converged);
  EXPECT_LT(warm.iterations, cold2.iterations);
  EXPECT_LT((warm.r[1] - cold2.r[1]).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Dynamics, NonConvergenceReportsFlag) {
  auto weights = scalar_net(2.0, 2.0);
  std::vector<Activation> acts{Activation::linear()};
  DynamicsConfig cfg;
  cfg.tol = 1e-14;
  cfg.max_iters = 3;
  Vec x(1);
  x << 1.0;
  NetworkState st = run_to_fixed_point(x, weights, acts, 0.0, cfg);
  EXPECT_FALSE(st.converged);
  EXPECT_EQ(st.iterations, 3);
}

TEST(Dynamics, FixedBudgetRunsExactly) {
  auto weights = scalar_net(1.0, 1.5);
  std::vector<Activation> acts{Activation::tanh()};
  DynamicsConfig cfg;
  cfg.mode = DynamicsConfig::Mode::FixedBudget;
  cfg.budget = 17;
  Vec x(1);
  x << 0.5;
  NetworkState st = run_to_fixed_point(x, weights, acts, 0.0, cfg);
  EXPECT_EQ(st.iterations, 17);
}

TEST(Dynamics, DivergenceRaises) {
  // A strongly self-exciting linear net blows up.
  auto weights = scalar_net(1.0, -8.0);
  std::vector<Activation> acts{Activation::linear()};
  DynamicsConfig cfg;
  cfg.step = 1.0;
  cfg.max_iters = 100000;
  Vec x(1);
  x << 1.0;
  EXPECT_THROW(run_to_fixed_point(x, weights, acts, 0.0, cfg), DivergenceError);
}

TEST(Dynamics, ShapeMismatchIsConfigError) {
  auto weights = scalar_net(1.0, 1.0);
  std::vector<Activation> acts{Activation::tanh()};
  DynamicsConfig cfg;
  Vec x(3);
  x.setZero();
  EXPECT_THROW(run_to_fixed_point(x, weights, acts, 0.0, cfg), ConfigError);
}

TEST(Dynamics, TraceExportsEnergyAndResidual) {
  auto weights = scalar_net(1.0, 1.2);
  std::vector<Activation> acts{Activation::tanh()};
  DynamicsConfig cfg;
  cfg.tol = 1e-9;
  Vec x(1);
  x << 0.8;
  std::vector<TraceRow> trace;
  NetworkState st = run_to_fixed_point(x, weights, acts, 0.0, cfg, &trace);
  ASSERT_EQ(static_cast<int>(trace.size()), st.iterations);
  for (std::size_t i = 1; i < trace.size(); ++i)
    EXPECT_LE(trace[i].energy, trace[i - 1].energy + 1e-10);
}

}  // namespace
