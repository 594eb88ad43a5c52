#pragma once

// Batch evaluation of the primal similarity-matching costs, used for
// monitoring and for the duality cross-checks. Batches are stored one row
// per sample; layer 0 is the input.

#include "hebbnet/activation.hpp"
#include "hebbnet/common.hpp"
#include "hebbnet/connectivity.hpp"

#include <cmath>
#include <vector>

namespace hebbnet {

// Fixed-point outputs for a batch, layers 0..P. Row t of batch[p] is
// r_t^(p); batch[0] holds the inputs.
using BatchOutputs = std::vector<Mat>;

namespace detail {
inline double regularizer_batch_sum(const Mat& R, const Activation& act) {
  double s = 0.0;
  for (Eigen::Index t = 0; t < R.rows(); ++t)
    for (Eigen::Index i = 0; i < R.cols(); ++i) s += act.F(R(t, i));
  return s;
}
}  // namespace detail

// Single-layer similarity matching over inputs X (T x K) and outputs R
// (T x N):
//   (1/2T^2) sum_tt' (x_t.x_t' - r_t.r_t')^2 + (2/T) sum_t sum_i F(r_ti)
inline double similarity_matching_cost(const Mat& X, const Mat& R, const Activation& act) {
  require(X.rows() == R.rows() && X.rows() >= 1, "similarity_matching_cost: need T >= 1 rows");
  const double T = static_cast<double>(X.rows());
  Mat G = X * X.transpose() - R * R.transpose();
  return G.squaredNorm() / (2.0 * T * T) + (2.0 / T) * detail::regularizer_batch_sum(R, act);
}

// The input-only constant dropped from the structured costs:
// (1/2T^2) sum_tt' (x_t.x_t')^2.
inline double input_similarity_constant(const Mat& X) {
  const double T = static_cast<double>(X.rows());
  return (X * X.transpose()).squaredNorm() / (2.0 * T * T);
}

// Structured and deep similarity-matching cost, with layer coupling gamma
// and per-layer structure constants. Input-only terms are dropped. Masks
// are stored post-first: w_masks[p-1] has shape N^(p) x N^(p-1) and
// l_masks[p-1] is N^(p) x N^(p). The double sum over samples reduces to
// squared batch correlations at the mask entries.
inline double deep_structured_cost(const BatchOutputs& batch,
                                   const std::vector<StructureMask>& w_masks,
                                   const std::vector<StructureMask>& l_masks, double gamma,
                                   const std::vector<Activation>& acts) {
  const int P = static_cast<int>(batch.size()) - 1;
  require(P >= 1, "deep_structured_cost: need at least one layer");
  require(static_cast<int>(w_masks.size()) == P && static_cast<int>(l_masks.size()) == P &&
              static_cast<int>(acts.size()) == P,
          "deep_structured_cost: one mask pair and activation per layer");
  require(gamma >= 0.0, "deep_structured_cost: gamma must be >= 0");
  if (gamma == 0.0)
    require(P == 1, "deep_structured_cost: gamma^(p-P) undefined for gamma = 0 with P > 1");
  const double T = static_cast<double>(batch[0].rows());
  for (const Mat& m : batch)
    require(m.rows() == batch[0].rows(), "deep_structured_cost: batch row counts differ");

  double cost = 0.0;
  for (int p = 1; p <= P; ++p) {
    const Mat& prev = batch[p - 1];
    const Mat& cur = batch[p];
    require(w_masks[p - 1].rows() == cur.cols() && w_masks[p - 1].cols() == prev.cols(),
            "deep_structured_cost: W mask shape mismatch at layer " + std::to_string(p));
    require(l_masks[p - 1].rows() == cur.cols() && l_masks[p - 1].cols() == cur.cols(),
            "deep_structured_cost: L mask shape mismatch at layer " + std::to_string(p));
    const double g = std::pow(gamma, static_cast<double>(p - P));
    const double kp = p < P ? 1.0 + gamma : 1.0;

    // sum_tt' r^(p-1)_{t,j} r^(p-1)_{t',j} r^(p)_{t,i} r^(p)_{t',i} c_ij
    //   = sum_entries c_ij * (sum_t cur(t,i) prev(t,j))^2
    double wterm = 0.0;
    for (const auto& e : w_masks[p - 1].entries()) {
      const double corr = cur.col(e.row).dot(prev.col(e.col));
      wterm += e.c * corr * corr;
    }
    double lterm = 0.0;
    for (const auto& e : l_masks[p - 1].entries()) {
      const double corr = cur.col(e.row).dot(cur.col(e.col));
      lterm += e.c * corr * corr;
    }
    cost += g / (T * T) * (-wterm + 0.5 * kp * lterm);
    cost += 2.0 * g / T * detail::regularizer_batch_sum(cur, acts[p - 1]);
  }
  return cost;
}

// Pairwise dot products scaled so the largest equals 1; the all-zero batch
// maps to the zero matrix.
inline Mat similarity_matrix(const Mat& outputs) {
  require(outputs.rows() >= 1, "similarity_matrix: need T >= 1");
  Mat S = outputs * outputs.transpose();
  const double m = S.maxCoeff();
  if (m == 0.0) return Mat::Zero(S.rows(), S.cols());
  return S / m;
}

}  // namespace hebbnet
