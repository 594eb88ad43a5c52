#pragma once

// Verification harnesses for the library's central claims: energy descent
// (Lyapunov), the similarity-matching duality, per-synapse gradient
// factorization (credit assignment), brute-force fixed-point optimality for
// tiny networks, gamma = 0 layer decoupling, and structural invariants of
// the learning rules. Shared by the `verify` CLI subcommand and the
// acceptance suite.

#include "hebbnet/activation.hpp"
#include "hebbnet/common.hpp"
#include "hebbnet/connectivity.hpp"
#include "hebbnet/dynamics.hpp"
#include "hebbnet/objective.hpp"
#include "hebbnet/plasticity.hpp"
#include "hebbnet/weights.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <sstream>
#include <string>
#include <vector>

namespace hebbnet {

struct SuiteResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;  // worst observed deviation
  double limit = 0.0;
  std::string details;
  double seconds = 0.0;
};

namespace verify_detail {

struct RandomNet {
  std::vector<int> sizes;
  std::vector<Activation> acts;
  std::vector<StructureMask> w_masks, l_masks;
  std::vector<LayerWeights> weights;
  double gamma = 1.0;
};

inline StructureMask random_w_mask(int rows, int cols, double density, bool random_c, Rng& rng) {
  std::vector<MaskEntry> es;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (uniform_real(rng) < density)
        es.push_back({i, j, random_c ? 0.5 + 1.5 * uniform_real(rng) : 1.0});
  if (es.empty()) es.push_back({0, 0, 1.0});  // keep the layer reachable
  return StructureMask(rows, cols, std::move(es));
}

// Symmetric lateral mask with a full diagonal; c values are mirrored so the
// anti-Hebbian updates stay exactly symmetric.
inline StructureMask random_l_mask(int n, double density, bool random_c, Rng& rng) {
  std::vector<MaskEntry> es;
  for (int i = 0; i < n; ++i) {
    es.push_back({i, i, random_c ? 0.5 + 1.5 * uniform_real(rng) : 1.0});
    for (int j = i + 1; j < n; ++j) {
      if (uniform_real(rng) < density) {
        const double c = random_c ? 0.5 + 1.5 * uniform_real(rng) : 1.0;
        es.push_back({i, j, c});
        es.push_back({j, i, c});
      }
    }
  }
  return StructureMask(n, n, std::move(es));
}

inline Activation random_bounded_act(Rng& rng) {
  if (uniform_real(rng) < 0.5) return Activation::capped_relu(0.3 * uniform_real(rng), 1.0);
  return Activation::tanh();
}

inline RandomNet random_net(int P, int max_width, bool random_c, Rng& rng) {
  RandomNet net;
  net.sizes.push_back(2 + static_cast<int>(uniform_below(rng, max_width - 1)));
  for (int p = 1; p <= P; ++p) {
    net.sizes.push_back(2 + static_cast<int>(uniform_below(rng, max_width - 1)));
    net.acts.push_back(random_bounded_act(rng));
  }
  net.gamma = 0.2 + uniform_real(rng);
  for (int p = 1; p <= P; ++p) {
    const double density = 0.4 + 0.6 * uniform_real(rng);
    net.w_masks.push_back(random_w_mask(net.sizes[p], net.sizes[p - 1], density, random_c, rng));
    net.l_masks.push_back(random_l_mask(net.sizes[p], density, random_c, rng));
  }
  for (int p = 0; p < P; ++p) {
    LayerWeights lw(net.w_masks[p], net.l_masks[p]);
    init_layer_weights(lw, rng);
    // Symmetric lateral noise on top of the identity diagonal.
    const int n = net.sizes[p + 1];
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = gaussian(rng);
    Mat sym = 0.15 * (g + g.transpose()) + Mat::Identity(n, n);
    net.l_masks[p].project(sym);
    lw.L.set_dense(sym);
    net.weights.push_back(std::move(lw));
  }
  return net;
}

inline Vec random_vec(Eigen::Index n, Rng& rng, double scale = 1.0) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * gaussian(rng);
  return v;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace verify_detail

// ---------------------------------------------------------------------------
// Lyapunov: for random networks integrated at h = 0.01 tau, the energy must
// be nonincreasing at every Euler step to within `slack`.

inline SuiteResult verify_lyapunov(int n_networks = 100, std::uint64_t seed = 101,
                                   double step = 0.01, double slack = 1e-8,
                                   int steps_per_net = 1200) {
  using namespace verify_detail;
  Timer timer;
  SuiteResult res{"lyapunov", true, -kInf, slack, "", 0.0};
  Rng rng = make_rng(seed, "lyapunov");
  int worst_net = -1;
  detail::DynWorkspace ws;
  for (int n = 0; n < n_networks; ++n) {
    const int P = 1 + static_cast<int>(uniform_below(rng, 3));
    RandomNet net = random_net(P, 20, false, rng);
    const Vec x = random_vec(net.sizes[0], rng);
    NetworkState st = make_state(x, net.weights, net.acts);
    double prev = energy(st, net.weights, net.acts, net.gamma);
    for (int it = 0; it < steps_per_net; ++it) {
      detail::step_unchecked(st, net.weights, net.acts, net.gamma, step, ws);
      const double e = energy(st, net.weights, net.acts, net.gamma);
      const double rise = e - prev;
      if (rise > res.measured) {
        res.measured = rise;
        worst_net = n;
      }
      prev = e;
    }
  }
  res.pass = res.measured <= slack;
  std::ostringstream os;
  os << n_networks << " networks, worst energy rise " << res.measured << " (net " << worst_net
     << ")";
  res.details = os.str();
  res.seconds = timer.elapsed();
  return res;
}

// ---------------------------------------------------------------------------
// Duality: the primal similarity-matching cost equals the dual objective
// evaluated at the closed-form (W*, L*) plus the input-only constant.

inline SuiteResult verify_duality(int n_batches = 50, std::uint64_t seed = 202,
                                  double tol = 1e-9) {
  using namespace verify_detail;
  Timer timer;
  SuiteResult res{"duality", true, 0.0, tol, "", 0.0};
  Rng rng = make_rng(seed, "duality");
  for (int b = 0; b < n_batches; ++b) {
    const int T = 1 + static_cast<int>(uniform_below(rng, 10));
    const int K = 1 + static_cast<int>(uniform_below(rng, 5));
    const int N = 1 + static_cast<int>(uniform_below(rng, 4));
    const Activation act = Activation::capped_relu(0.5 * uniform_real(rng), 1.0);
    Mat X(T, K), R(T, N);
    std::vector<Vec> xs, rs;
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k < K; ++k) X(t, k) = gaussian(rng);
      for (int i = 0; i < N; ++i) R(t, i) = uniform_real(rng);  // within [0, 1]
      xs.push_back(X.row(t).transpose());
      rs.push_back(R.row(t).transpose());
    }
    const double primal = similarity_matching_cost(X, R, act);
    const auto [Wopt, Lopt] = dual_optimal_weights(rs, xs);
    double dual = 0.0;
    for (int t = 0; t < T; ++t) {
      const Vec& r = rs[t];
      const Vec& x = xs[t];
      double lt = Wopt.squaredNorm() - 0.5 * Lopt.squaredNorm();
      lt += -2.0 * r.dot(Wopt * x) + r.dot(Lopt * r) + 2.0 * act.regularizer_value(r);
      dual += lt;
    }
    dual /= static_cast<double>(T);
    const double dev = std::abs(primal - (dual + input_similarity_constant(X)));
    if (dev > res.measured) res.measured = dev;
  }
  res.pass = res.measured < tol;
  std::ostringstream os;
  os << n_batches << " batches, max primal/dual deviation " << res.measured;
  res.details = os.str();
  res.seconds = timer.elapsed();
  return res;
}

// ---------------------------------------------------------------------------
// Credit assignment: per-synapse analytic gradients of l_t match central
// finite differences of the re-solved objective.

inline SuiteResult verify_gradients(int n_instances = 20, std::uint64_t seed = 303,
                                    double tol = 1e-4, double eps = 1e-5) {
  using namespace verify_detail;
  Timer timer;
  SuiteResult res{"gradients", true, 0.0, tol, "", 0.0};
  Rng rng = make_rng(seed, "gradients");
  DynamicsConfig cfg;
  cfg.step = 0.05;
  cfg.tol = 1e-10;
  cfg.max_iters = 400000;
  long synapses = 0;
  for (int n = 0; n < n_instances; ++n) {
    RandomNet net = random_net(2, 6, /*random_c=*/true, rng);
    const Vec x = random_vec(net.sizes[0], rng);

    auto objective_at = [&](void) {
      NetworkState st = run_to_fixed_point(x, net.weights, net.acts, net.gamma, cfg);
      return local_objective(net.weights, st, net.acts, net.gamma);
    };
    NetworkState st = run_to_fixed_point(x, net.weights, net.acts, net.gamma, cfg);
    const LocalGradients analytic = local_objective_gradients(net.weights, st, net.gamma);

    for (int p = 0; p < 2; ++p) {
      for (std::size_t k = 0; k < net.weights[p].W.nnz(); ++k) {
        double& v = net.weights[p].W.values()[k];
        const double orig = v;
        v = orig + eps;
        const double fp = objective_at();
        v = orig - eps;
        const double fm = objective_at();
        v = orig;
        const double fd = (fp - fm) / (2.0 * eps);
        const double a = analytic.dW[p][k];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
        if (rel > res.measured) res.measured = rel;
        synapses++;
      }
      // Lateral perturbations keep L symmetric by moving the mirrored entry
      // together; the matching derivative is the sum of both entries'
      // gradients. Diagonal entries move alone.
      const auto& L = net.weights[p].L;
      for (std::size_t k = 0; k < L.nnz(); ++k) {
        const int i = L.row_index()[k], j = L.col_index()[k];
        if (i > j) continue;
        // locate mirror entry
        std::size_t mirror = k;
        if (i != j) {
          for (std::size_t m = 0; m < L.nnz(); ++m)
            if (L.row_index()[m] == j && L.col_index()[m] == i) { mirror = m; break; }
        }
        double& v1 = net.weights[p].L.values()[k];
        double& v2 = net.weights[p].L.values()[mirror];
        const double o1 = v1, o2 = v2;
        v1 = o1 + eps;
        if (i != j) v2 = o2 + eps;
        const double fp = objective_at();
        v1 = o1 - eps;
        if (i != j) v2 = o2 - eps;
        const double fm = objective_at();
        v1 = o1;
        v2 = o2;
        const double fd = (fp - fm) / (2.0 * eps);
        const double a =
            i == j ? analytic.dL[p][k] : analytic.dL[p][k] + analytic.dL[p][mirror];
        const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
        if (rel > res.measured) res.measured = rel;
        synapses++;
      }
    }
  }
  res.pass = res.measured < tol;
  std::ostringstream os;
  os << n_instances << " instances, " << synapses << " synapses, worst relative error "
     << res.measured;
  res.details = os.str();
  res.seconds = timer.elapsed();
  return res;
}

// ---------------------------------------------------------------------------
// Fixed-point oracle: for networks with at most 3 neurons in total, the
// converged energy matches a grid search at the given pitch, or the fixed
// point is itself a grid-local stationary point (documented).

namespace verify_detail {

struct TinyInstance {
  RandomNet net;
  Vec x;
  std::string label;
};

// E(r) over all coordinates: r^T Q r + b.r + 2 sum_d w_d F_d(r_d).
struct QuadraticEnergy {
  Mat Q;
  Vec b;
  std::vector<double> w;           // gamma^(p-P) per coordinate
  std::vector<const Activation*> act;

  double eval(const Vec& r) const {
    double e = r.dot(Q * r) + b.dot(r);
    for (Eigen::Index d = 0; d < r.size(); ++d) e += 2.0 * w[d] * act[d]->F(r[d]);
    return e;
  }
};

inline QuadraticEnergy assemble_energy(const RandomNet& net, const Vec& x) {
  const int P = static_cast<int>(net.weights.size());
  int total = 0;
  std::vector<int> offset(P + 1, 0);
  for (int p = 0; p < P; ++p) {
    offset[p] = total;
    total += net.sizes[p + 1];
  }
  offset[P] = total;
  QuadraticEnergy qe;
  qe.Q = Mat::Zero(total, total);
  qe.b = Vec::Zero(total);
  qe.w.resize(total);
  qe.act.resize(total);
  for (int p = 0; p < P; ++p) {
    const double g = std::pow(net.gamma, static_cast<double>(p + 1 - P));
    const Mat L = net.weights[p].L.dense();
    const Mat W = net.weights[p].W.dense();
    qe.Q.block(offset[p], offset[p], net.sizes[p + 1], net.sizes[p + 1]) += g * L;
    if (p == 0) {
      qe.b.segment(offset[0], net.sizes[1]) += -2.0 * g * (W * x);
    } else {
      qe.Q.block(offset[p], offset[p - 1], net.sizes[p + 1], net.sizes[p]) += -g * W;
      qe.Q.block(offset[p - 1], offset[p], net.sizes[p], net.sizes[p + 1]) += -g * W.transpose();
    }
    for (int i = 0; i < net.sizes[p + 1]; ++i) {
      qe.w[offset[p] + i] = g;
      qe.act[offset[p] + i] = &net.acts[p];
    }
  }
  return qe;
}

// Exhaustive scan over the box [a,b]^n at the given pitch, n <= 3. The
// innermost axis is evaluated incrementally from a per-axis table.
inline std::pair<double, Vec> grid_minimum(const QuadraticEnergy& qe, double pitch) {
  const int n = static_cast<int>(qe.b.size());
  require(n >= 1 && n <= 3, "grid_minimum: supports 1..3 coordinates");
  std::vector<std::vector<double>> axis(n);
  for (int d = 0; d < n; ++d) {
    const double a = qe.act[d]->lower(), b = qe.act[d]->upper();
    require(std::isfinite(a) && std::isfinite(b), "grid_minimum: needs bounded activations");
    for (double v = a; v <= b + 0.5 * pitch; v += pitch) axis[d].push_back(std::min(v, b));
  }
  const int z = n - 1;
  // Table over the innermost axis: Q_zz t^2 + b_z t + 2 w_z F_z(t).
  std::vector<double> table(axis[z].size());
  for (std::size_t k = 0; k < axis[z].size(); ++k) {
    const double t = axis[z][k];
    table[k] = qe.Q(z, z) * t * t + qe.b[z] * t + 2.0 * qe.w[z] * qe.act[z]->F(t);
  }
  double best = kInf;
  Vec best_r = Vec::Zero(n);
  Vec r = Vec::Zero(n);
  const auto outer_dims = n - 1;
  std::vector<std::size_t> idx(std::max(outer_dims, 0), 0);
  auto scan_inner = [&](double outer_e) {
    // cross = 2 * sum_{d<z} Q_dz r_d (Q symmetric across the pair blocks).
    double cross = 0.0;
    for (int d = 0; d < z; ++d) cross += (qe.Q(d, z) + qe.Q(z, d)) * r[d];
    for (std::size_t k = 0; k < axis[z].size(); ++k) {
      const double e = outer_e + cross * axis[z][k] + table[k];
      if (e < best) {
        best = e;
        best_r = r;
        best_r[z] = axis[z][k];
      }
    }
  };
  if (outer_dims == 0) {
    scan_inner(0.0);
  } else if (outer_dims == 1) {
    for (std::size_t i = 0; i < axis[0].size(); ++i) {
      r[0] = axis[0][i];
      const double e0 = qe.Q(0, 0) * r[0] * r[0] + qe.b[0] * r[0] + 2.0 * qe.w[0] * qe.act[0]->F(r[0]);
      scan_inner(e0);
    }
  } else {
    for (std::size_t i = 0; i < axis[0].size(); ++i) {
      r[0] = axis[0][i];
      const double e0 = qe.Q(0, 0) * r[0] * r[0] + qe.b[0] * r[0] + 2.0 * qe.w[0] * qe.act[0]->F(r[0]);
      for (std::size_t j = 0; j < axis[1].size(); ++j) {
        r[1] = axis[1][j];
        const double e1 = e0 + (qe.Q(0, 1) + qe.Q(1, 0)) * r[0] * r[1] + qe.Q(1, 1) * r[1] * r[1] +
                          qe.b[1] * r[1] + 2.0 * qe.w[1] * qe.act[1]->F(r[1]);
        scan_inner(e1);
      }
    }
  }
  return {best, best_r};
}

}  // namespace verify_detail

inline SuiteResult verify_fixed_point_oracle(std::uint64_t seed = 404, double tol = 1e-4,
                                             double pitch = 1e-3) {
  using namespace verify_detail;
  Timer timer;
  SuiteResult res{"fixed_point_oracle", true, 0.0, tol, "", 0.0};
  Rng rng = make_rng(seed, "oracle");

  auto make_instance = [&](int P, std::vector<int> sizes, Activation act, double gamma,
                           const std::string& label) {
    TinyInstance inst;
    inst.net.sizes = sizes;
    inst.net.gamma = gamma;
    for (int p = 1; p <= P; ++p) {
      inst.net.acts.push_back(act);
      inst.net.w_masks.push_back(StructureMask::all_to_all(sizes[p], sizes[p - 1]));
      inst.net.l_masks.push_back(StructureMask::all_to_all(sizes[p], sizes[p]));
    }
    for (int p = 0; p < P; ++p) {
      LayerWeights lw(inst.net.w_masks[p], inst.net.l_masks[p]);
      init_layer_weights(lw, rng);
      const int n = sizes[p + 1];
      Mat g(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = gaussian(rng);
      Mat sym = 0.2 * (g + g.transpose()) + Mat::Identity(n, n);
      lw.L.set_dense(sym);
      inst.net.weights.push_back(std::move(lw));
    }
    inst.x = random_vec(sizes[0], rng);
    inst.label = label;
    return inst;
  };

  std::vector<TinyInstance> instances;
  instances.push_back(make_instance(1, {2, 1}, Activation::capped_relu(0.1, 1.0), 0.0, "P1 N1 relu"));
  instances.push_back(make_instance(1, {3, 2}, Activation::tanh(), 0.0, "P1 N2 tanh"));
  instances.push_back(make_instance(1, {2, 3}, Activation::capped_relu(0.0, 1.0), 0.0, "P1 N3 relu"));
  instances.push_back(make_instance(2, {2, 2, 1}, Activation::capped_relu(0.05, 1.0), 0.8, "P2 N2+1 relu"));
  instances.push_back(make_instance(2, {2, 1, 1}, Activation::tanh(), 0.5, "P2 N1+1 tanh"));
  instances.push_back(make_instance(3, {2, 1, 1, 1}, Activation::capped_relu(0.1, 1.0), 0.6, "P3 N1+1+1 relu"));

  DynamicsConfig cfg;
  cfg.step = 0.05;
  cfg.tol = 1e-9;
  cfg.max_iters = 300000;

  std::ostringstream os;
  for (const auto& inst : instances) {
    NetworkState st = run_to_fixed_point(inst.x, inst.net.weights, inst.net.acts, inst.net.gamma, cfg);
    const double e_dyn = energy(st, inst.net.weights, inst.net.acts, inst.net.gamma);
    QuadraticEnergy qe = assemble_energy(inst.net, inst.x);
    const auto [e_grid, r_grid] = grid_minimum(qe, pitch);
    const double gap = e_dyn - e_grid;
    os << inst.label << ": E_dyn=" << e_dyn << " E_grid=" << e_grid << " gap=" << gap;
    if (gap > res.measured) res.measured = gap;
    if (gap > tol) {
      // Distinct stationary point: snap the fixed point to the grid and
      // check that no single-axis neighbor improves the energy.
      Vec snapped(qe.b.size());
      int d = 0;
      for (int p = 0; p < static_cast<int>(inst.net.weights.size()); ++p)
        for (Eigen::Index i = 0; i < st.r[p].size(); ++i, ++d)
          snapped[d] = std::round(st.r[p][i] / pitch) * pitch;
      bool local_min = true;
      const double e_snap = qe.eval(snapped);
      for (Eigen::Index dd = 0; dd < snapped.size(); ++dd) {
        for (double delta : {-pitch, pitch}) {
          Vec nb = snapped;
          nb[dd] = std::clamp(nb[dd] + delta, qe.act[dd]->lower(), qe.act[dd]->upper());
          if (qe.eval(nb) < e_snap - 1e-9) local_min = false;
        }
      }
      if (local_min && st.converged) {
        os << " [distinct grid-local stationary point]";
      } else {
        res.pass = false;
        os << " [FAIL]";
      }
    }
    os << "; ";
  }
  res.details = os.str();
  res.seconds = timer.elapsed();
  return res;
}

// ---------------------------------------------------------------------------
// gamma = 0 decoupling: joint integration equals solving layers one at a
// time on frozen lower-layer outputs.

inline SuiteResult verify_decoupling(int n_networks = 20, std::uint64_t seed = 505,
                                     double tol = 1e-6) {
  using namespace verify_detail;
  Timer timer;
  SuiteResult res{"decoupling", true, 0.0, tol, "", 0.0};
  Rng rng = make_rng(seed, "decoupling");
  DynamicsConfig cfg;
  cfg.step = 0.05;
  cfg.tol = 1e-9;
  cfg.max_iters = 200000;
  for (int n = 0; n < n_networks; ++n) {
    RandomNet net = random_net(2, 12, false, rng);
    net.gamma = 0.0;
    const Vec x = random_vec(net.sizes[0], rng);
    NetworkState joint = run_to_fixed_point(x, net.weights, net.acts, net.gamma, cfg);

    std::vector<LayerWeights> first{net.weights[0]};
    std::vector<Activation> act1{net.acts[0]};
    NetworkState s1 = run_to_fixed_point(x, first, act1, 0.0, cfg);
    std::vector<LayerWeights> second{net.weights[1]};
    std::vector<Activation> act2{net.acts[1]};
    NetworkState s2 = run_to_fixed_point(s1.r[0], second, act2, 0.0, cfg);

    const double d1 = (joint.r[0] - s1.r[0]).cwiseAbs().maxCoeff();
    const double d2 = (joint.r[1] - s2.r[0]).cwiseAbs().maxCoeff();
    res.measured = std::max({res.measured, d1, d2});
  }
  res.pass = res.measured < tol;
  std::ostringstream os;
  os << n_networks << " two-layer networks, worst coordinate gap " << res.measured;
  res.details = os.str();
  res.seconds = timer.elapsed();
  return res;
}

// ---------------------------------------------------------------------------
// Structural invariants after many updates: masked-out entries stay exactly
// zero, L stays exactly symmetric, and the identity-initialized single-layer
// L keeps a strictly positive minimum eigenvalue.

inline SuiteResult verify_structural(std::uint64_t seed = 606, int updates = 10000) {
  using namespace verify_detail;
  Timer timer;
  SuiteResult res{"structural", true, 0.0, 0.0, "", 0.0};
  Rng rng = make_rng(seed, "structural");
  std::ostringstream os;

  // Structured two-layer net: mask confinement and exact lateral symmetry.
  {
    RandomNet net = random_net(2, 8, /*random_c=*/true, rng);
    PlasticityConfig pc;
    pc.eta = {0.05, 0.05};
    pc.absorb_gamma = true;
    DynamicsConfig cfg;
    cfg.mode = DynamicsConfig::Mode::FixedBudget;
    cfg.budget = 30;
    cfg.step = 0.1;
    for (int t = 0; t < updates; ++t) {
      const Vec x = random_vec(net.sizes[0], rng);
      NetworkState st = run_to_fixed_point(x, net.weights, net.acts, net.gamma, cfg);
      update_weights(net.weights, st, net.gamma, pc, t);
    }
    double out_of_mask = 0.0;
    double asym = 0.0;
    for (int p = 0; p < 2; ++p) {
      Mat W = net.weights[p].W.dense();
      Mat masked = W;
      net.w_masks[p].project(masked);
      out_of_mask = std::max(out_of_mask, (W - masked).cwiseAbs().maxCoeff());
      asym = std::max(asym, net.weights[p].L.max_asymmetry());
    }
    os << "mask leakage " << out_of_mask << ", lateral asymmetry " << asym;
    if (out_of_mask != 0.0 || asym != 0.0) res.pass = false;
    res.measured = std::max(out_of_mask, asym);
  }

  // Single-layer linear net, identity L: positive definiteness persists.
  {
    const int K = 8, N = 5;
    std::vector<StructureMask> wm{StructureMask::all_to_all(N, K)};
    std::vector<StructureMask> lm{StructureMask::all_to_all(N, N)};
    std::vector<LayerWeights> weights;
    weights.emplace_back(wm[0], lm[0]);
    init_layer_weights(weights[0], rng);
    std::vector<Activation> acts{Activation::linear()};
    PlasticityConfig pc;
    pc.eta = {0.2};
    DynamicsConfig cfg;
    cfg.step = 0.1;
    cfg.tol = 1e-8;
    cfg.max_iters = 20000;
    for (int t = 0; t < updates; ++t) {
      const Vec x = random_vec(K, rng);
      NetworkState st = run_to_fixed_point(x, weights, acts, 0.0, cfg);
      update_weights(weights, st, 0.0, pc, t);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(weights[0].L.dense());
    const double min_eig = es.eigenvalues().minCoeff();
    os << "; single-layer L min eigenvalue " << min_eig;
    if (!(min_eig > 0.0)) res.pass = false;
  }

  res.details = os.str();
  res.seconds = timer.elapsed();
  return res;
}

}  // namespace hebbnet
