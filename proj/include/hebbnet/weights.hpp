#pragma once

// Masked weight storage. Values live only at mask entries, so weights with
// c = 0 are structurally zero and stay zero through arbitrary updates. The
// flat entry order is the mask's (row, col) sort, which makes row-major
// matvec, transpose matvec and the local update loops simple passes over
// parallel arrays.

#include "hebbnet/common.hpp"
#include "hebbnet/connectivity.hpp"

#include <utility>
#include <vector>

namespace hebbnet {

class MaskedMatrix {
 public:
  MaskedMatrix() = default;

  explicit MaskedMatrix(const StructureMask& mask)
      : rows_(mask.rows()), cols_(mask.cols()) {
    const auto& es = mask.entries();
    row_.reserve(es.size());
    col_.reserve(es.size());
    c_.reserve(es.size());
    v_.assign(es.size(), 0.0);
    outer_.assign(rows_ + 1, 0);
    for (const auto& e : es) {
      row_.push_back(e.row);
      col_.push_back(e.col);
      c_.push_back(e.c);
      outer_[e.row + 1]++;
    }
    for (int i = 0; i < rows_; ++i) outer_[i + 1] += outer_[i];
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return v_.size(); }

  const std::vector<int>& row_index() const { return row_; }
  const std::vector<int>& col_index() const { return col_; }
  const std::vector<double>& constants() const { return c_; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  // out = M x
  void matvec(const Vec& x, Vec& out) const {
    out.setZero(rows_);
    for (int i = 0; i < rows_; ++i) {
      double acc = 0.0;
      for (int k = outer_[i]; k < outer_[i + 1]; ++k) acc += v_[k] * x[col_[k]];
      out[i] = acc;
    }
  }

  // out = M^T x
  void matvec_transpose(const Vec& x, Vec& out) const {
    out.setZero(cols_);
    for (int i = 0; i < rows_; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (int k = outer_[i]; k < outer_[i + 1]; ++k) out[col_[k]] += v_[k] * xi;
    }
  }

  Mat dense() const {
    Mat m = Mat::Zero(rows_, cols_);
    for (std::size_t k = 0; k < v_.size(); ++k) m(row_[k], col_[k]) = v_[k];
    return m;
  }

  void set_dense(const Mat& m) {
    require(m.rows() == rows_ && m.cols() == cols_, "set_dense: shape mismatch");
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] = m(row_[k], col_[k]);
  }

  double max_asymmetry() const {
    Mat d = dense();
    if (rows_ != cols_) return kInf;
    return (d - d.transpose()).cwiseAbs().maxCoeff();
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<int> outer_;   // rows_+1 row starts
  std::vector<int> row_, col_;
  std::vector<double> c_;    // structure constants, entry-aligned
  std::vector<double> v_;    // weight values, entry-aligned
};

// One layer's synapses: feedforward W (N_p x N_{p-1}) and lateral L
// (N_p x N_p), each confined to its structure mask.
struct LayerWeights {
  MaskedMatrix W;
  MaskedMatrix L;

  LayerWeights() = default;
  LayerWeights(const StructureMask& w_mask, const StructureMask& l_mask)
      : W(w_mask), L(l_mask) {}
};

// W entries i.i.d. zero-mean Gaussian with sd fan_in^{-1/2} (fan-in counted
// on the mask); L gets the identity restricted to the mask diagonal.
inline void init_layer_weights(LayerWeights& lw, Rng& rng) {
  std::vector<int> fanin(lw.W.rows(), 0);
  for (std::size_t k = 0; k < lw.W.nnz(); ++k) fanin[lw.W.row_index()[k]]++;
  for (std::size_t k = 0; k < lw.W.nnz(); ++k) {
    const int fi = std::max(1, fanin[lw.W.row_index()[k]]);
    lw.W.values()[k] = gaussian(rng) / std::sqrt(static_cast<double>(fi));
  }
  for (std::size_t k = 0; k < lw.L.nnz(); ++k)
    lw.L.values()[k] = (lw.L.row_index()[k] == lw.L.col_index()[k]) ? 1.0 : 0.0;
}

}  // namespace hebbnet
