#pragma once

// Structure constants c^W, c^L stored sparsely. An absent entry means c = 0:
// no synapse, and the corresponding weight is pinned to zero. Generators
// cover the all-to-all case, block-diagonal partitions, and grid-based
// locally connected topologies where connectivity is decided by Euclidean
// distance between grid sites.

#include "hebbnet/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hebbnet {

// A layer arranged on a 2-D grid. `stride` is relative to the previous
// layer's grid: the site at (a, b) anchors at previous-layer coordinate
// (a*stride, b*stride), with no centering offset. `neurons_per_site` (NPS)
// neurons share each site and its fan-in footprint.
struct GridLayout {
  int height = 0;
  int width = 0;
  int stride = 1;
  int neurons_per_site = 1;

  int sites() const { return height * width; }
  int neuron_count() const { return sites() * neurons_per_site; }
  int site_of(int neuron) const { return neuron / neurons_per_site; }
  int site_row(int site) const { return site / width; }
  int site_col(int site) const { return site % width; }

  void validate() const {
    require(height >= 1 && width >= 1, "grid: height/width must be >= 1");
    require(stride >= 1, "grid: stride must be >= 1");
    require(neurons_per_site >= 1, "grid: neurons_per_site must be >= 1");
  }
};

struct MaskEntry {
  int row;  // postsynaptic index
  int col;  // presynaptic index
  double c; // structure constant, > 0
};

class StructureMask {
 public:
  StructureMask() = default;

  StructureMask(int rows, int cols, std::vector<MaskEntry> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    require(rows_ >= 0 && cols_ >= 0, "mask: negative shape");
    std::sort(entries_.begin(), entries_.end(), [](const MaskEntry& a, const MaskEntry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      require(e.row >= 0 && e.row < rows_ && e.col >= 0 && e.col < cols_,
              "mask: entry out of range");
      if (!(e.c > 0.0)) throw InvalidInputError("mask: structure constants must be > 0");
      if (k > 0 && entries_[k - 1].row == e.row && entries_[k - 1].col == e.col)
        throw InvalidInputError("mask: duplicate (i,j) entry");
    }
  }

  static StructureMask all_to_all(int rows, int cols, double c = 1.0) {
    require(rows >= 1 && cols >= 1, "all_to_all: rows and cols must be >= 1");
    if (!(c > 0.0)) throw InvalidInputError("all_to_all: c must be > 0");
    std::vector<MaskEntry> es;
    es.reserve(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) es.push_back({i, j, c});
    return StructureMask(rows, cols, std::move(es));
  }

  // Dense within matching (row-block, col-block) pairs, zero elsewhere.
  static StructureMask block_diagonal(const std::vector<int>& row_blocks,
                                      const std::vector<int>& col_blocks,
                                      double c = 1.0) {
    require(row_blocks.size() == col_blocks.size() && !row_blocks.empty(),
            "block_diagonal: block lists must be non-empty and equal length");
    if (!(c > 0.0)) throw InvalidInputError("block_diagonal: c must be > 0");
    int rows = 0, cols = 0;
    for (int b : row_blocks) { require(b >= 1, "block_diagonal: bad block size"); rows += b; }
    for (int b : col_blocks) { require(b >= 1, "block_diagonal: bad block size"); cols += b; }
    std::vector<MaskEntry> es;
    int r0 = 0, c0 = 0;
    for (std::size_t b = 0; b < row_blocks.size(); ++b) {
      for (int i = 0; i < row_blocks[b]; ++i)
        for (int j = 0; j < col_blocks[b]; ++j) es.push_back({r0 + i, c0 + j, c});
      r0 += row_blocks[b];
      c0 += col_blocks[b];
    }
    return StructureMask(rows, cols, std::move(es));
  }

  // Feedforward connectivity: post neuron at site (a,b) anchors at
  // pre-coordinate (a*stride, b*stride) and connects to every pre neuron
  // whose site lies within `radius` (in pre-grid units) of that anchor.
  // Fan-in sets are clipped at grid edges. All NPS neurons of a site share
  // the fan-in set.
  static StructureMask local_feedforward(const GridLayout& pre, const GridLayout& post,
                                         double radius, double c = 1.0) {
    pre.validate();
    post.validate();
    if (radius < 0.0) throw InvalidInputError("local_feedforward: radius must be >= 0");
    if (!(c > 0.0)) throw InvalidInputError("local_feedforward: c must be > 0");
    const double r2 = radius * radius;
    const int reach = static_cast<int>(std::floor(radius));
    std::vector<MaskEntry> es;
    for (int site = 0; site < post.sites(); ++site) {
      const int ay = post.site_row(site) * post.stride;
      const int ax = post.site_col(site) * post.stride;
      for (int py = std::max(0, ay - reach); py <= std::min(pre.height - 1, ay + reach); ++py) {
        for (int px = std::max(0, ax - reach); px <= std::min(pre.width - 1, ax + reach); ++px) {
          const double d2 = double(py - ay) * (py - ay) + double(px - ax) * (px - ax);
          if (d2 > r2) continue;
          const int pre_site = py * pre.width + px;
          for (int ni = 0; ni < post.neurons_per_site; ++ni)
            for (int nj = 0; nj < pre.neurons_per_site; ++nj)
              es.push_back({site * post.neurons_per_site + ni,
                            pre_site * pre.neurons_per_site + nj, c});
        }
      }
    }
    return StructureMask(post.neuron_count(), pre.neuron_count(), std::move(es));
  }

  // Lateral connectivity within one layer: sites within `radius` of each
  // other (in the layer's own grid units) are coupled; all neuron pairs
  // across coupled sites get an entry. Same-site pairs are always within
  // radius 0. The i == j diagonal is governed by include_diagonal.
  static StructureMask local_lateral(const GridLayout& layout, double radius,
                                     bool include_diagonal = true, double c = 1.0) {
    layout.validate();
    if (radius < 0.0) throw InvalidInputError("local_lateral: radius must be >= 0");
    if (!(c > 0.0)) throw InvalidInputError("local_lateral: c must be > 0");
    const double r2 = radius * radius;
    const int reach = static_cast<int>(std::floor(radius));
    const int nps = layout.neurons_per_site;
    std::vector<MaskEntry> es;
    for (int site = 0; site < layout.sites(); ++site) {
      const int ay = layout.site_row(site), ax = layout.site_col(site);
      for (int oy = std::max(0, ay - reach); oy <= std::min(layout.height - 1, ay + reach); ++oy) {
        for (int ox = std::max(0, ax - reach); ox <= std::min(layout.width - 1, ax + reach); ++ox) {
          const double d2 = double(oy - ay) * (oy - ay) + double(ox - ax) * (ox - ax);
          if (d2 > r2) continue;
          const int other = oy * layout.width + ox;
          for (int ni = 0; ni < nps; ++ni) {
            for (int nj = 0; nj < nps; ++nj) {
              const int i = site * nps + ni;
              const int j = other * nps + nj;
              if (i == j && !include_diagonal) continue;
              es.push_back({i, j, c});
            }
          }
        }
      }
    }
    return StructureMask(layout.neuron_count(), layout.neuron_count(), std::move(es));
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<MaskEntry>& entries() const { return entries_; }

  bool contains(int i, int j) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{i, j},
                               [](const MaskEntry& e, const std::pair<int, int>& p) {
                                 return e.row != p.first ? e.row < p.first : e.col < p.second;
                               });
    return it != entries_.end() && it->row == i && it->col == j;
  }

  bool is_symmetric() const {
    if (rows_ != cols_) return false;
    for (const auto& e : entries_)
      if (!contains(e.col, e.row)) return false;
    return true;
  }

  // Structure constants as a dense matrix (0 where no synapse).
  Mat dense() const {
    Mat m = Mat::Zero(rows_, cols_);
    for (const auto& e : entries_) m(e.row, e.col) = e.c;
    return m;
  }

  // Zero every entry of `w` outside the mask. Idempotent.
  void project(Mat& w) const {
    require(w.rows() == rows_ && w.cols() == cols_, "project: shape mismatch");
    Mat kept = Mat::Zero(rows_, cols_);
    for (const auto& e : entries_) kept(e.row, e.col) = w(e.row, e.col);
    w = kept;
  }

  std::vector<int> row_nnz() const {
    std::vector<int> n(rows_, 0);
    for (const auto& e : entries_) n[e.row]++;
    return n;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<MaskEntry> entries_;
};

inline bool mask_symmetry_check(const StructureMask& m) { return m.is_symmetric(); }

}  // namespace hebbnet
