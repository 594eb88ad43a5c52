#pragma once

// Downstream evaluation: fixed-point feature extraction, a one-vs-rest
// linear hinge-loss classifier trained by seeded stochastic subgradient
// descent, representational similarity, and reverse-correlation feature
// images masked to each neuron's connectivity footprint.

#include "hebbnet/common.hpp"
#include "hebbnet/data.hpp"
#include "hebbnet/model.hpp"
#include "hebbnet/objective.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace hebbnet {

struct FeatureMatrix {
  Mat values;                    // T x N^(p)
  int layer = 0;
  std::vector<char> converged;   // per-row convergence flag
  std::string provenance;
};

inline FeatureMatrix extract_features(const Network& net, const Dataset& data, int layer) {
  require(layer >= 1 && layer <= net.P(), "extract_features: layer out of range");
  require(data.dim() == net.config().sizes[0], "extract_features: input dimension mismatch");
  FeatureMatrix fm;
  fm.layer = layer;
  fm.values.resize(data.size(), net.config().sizes[layer]);
  fm.converged.assign(data.size(), 0);
  const int threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (long t = w; t < data.size(); t += threads) {
          NetworkState st = net.infer(data.samples.row(t).transpose());
          fm.values.row(t) = st.r[layer - 1].transpose();
          fm.converged[t] = st.converged ? 1 : 0;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  fm.provenance = "layer=" + std::to_string(layer) + " src=" + data.provenance;
  return fm;
}

// ---------------------------------------------------------------------------
// Linear classifier: one-vs-rest hinge loss with L2 regularization, trained
// by stochastic subgradient descent with a 1/(lambda t) step size.

struct ClassifierConfig {
  double l2 = 1e-4;
  int epochs = 10;
  std::uint64_t seed = 7;
};

class LinearClassifier {
 public:
  static LinearClassifier train(const Mat& features, const std::vector<int>& labels,
                                const ClassifierConfig& cfg = {}) {
    require(features.rows() == static_cast<long>(labels.size()),
            "classifier: feature/label count mismatch");
    require(features.rows() >= 1, "classifier: empty training set");
    int classes = 0;
    for (int l : labels) classes = std::max(classes, l + 1);
    if (classes < 2)
      throw InvalidInputError("classifier: degenerate problem, need at least two classes");

    LinearClassifier clf;
    clf.W_ = Mat::Zero(classes, features.cols());
    clf.b_ = Vec::Zero(classes);
    const long T = features.rows();
    Rng rng = make_rng(cfg.seed, "classifier");
    long step = 0;
    for (int e = 0; e < cfg.epochs; ++e) {
      std::vector<long> order(T);
      for (long i = 0; i < T; ++i) order[i] = i;
      shuffle_indices(order, rng);
      for (long i = 0; i < T; ++i) {
        step++;
        const double lr = 1.0 / (cfg.l2 * static_cast<double>(step));
        const auto x = features.row(order[i]);
        const int y = labels[order[i]];
        // L2 shrinkage applied once per step, then hinge subgradients for
        // every violated one-vs-rest margin. The bias is shrunk like a
        // weight against a constant input so early large steps anneal.
        clf.W_ *= (1.0 - lr * cfg.l2);
        clf.b_ *= (1.0 - lr * cfg.l2);
        for (int c = 0; c < classes; ++c) {
          const double target = c == y ? 1.0 : -1.0;
          const double margin = target * (clf.W_.row(c).dot(x) + clf.b_[c]);
          if (margin < 1.0) {
            clf.W_.row(c) += (lr * target / static_cast<double>(classes)) * x;
            clf.b_[c] += lr * target / static_cast<double>(classes);
          }
        }
      }
    }
    require(all_finite(clf.W_) && all_finite(clf.b_), "classifier: training diverged");
    return clf;
  }

  int classify(const Vec& x) const {
    Eigen::Index best;
    (W_ * x + b_).maxCoeff(&best);
    return static_cast<int>(best);
  }

  std::vector<int> classify(const Mat& features) const {
    std::vector<int> out(features.rows());
    for (long t = 0; t < features.rows(); ++t) {
      const Vec x = features.row(t).transpose();
      out[t] = classify(x);
    }
    return out;
  }

  double error_rate(const Mat& features, const std::vector<int>& labels) const {
    require(features.rows() == static_cast<long>(labels.size()),
            "error_rate: feature/label count mismatch");
    const auto pred = classify(features);
    long wrong = 0;
    for (std::size_t t = 0; t < pred.size(); ++t)
      if (pred[t] != labels[t]) wrong++;
    return static_cast<double>(wrong) / static_cast<double>(pred.size());
  }

  const Mat& weight() const { return W_; }
  const Vec& bias() const { return b_; }

 private:
  Mat W_;
  Vec b_;
};

// ---------------------------------------------------------------------------
// Representational similarity over selected rows.

inline Mat representational_similarity(const FeatureMatrix& fm, const std::vector<long>& rows) {
  Mat sel(rows.size(), fm.values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < fm.values.rows(), "representational_similarity: bad index");
    sel.row(i) = fm.values.row(rows[i]);
  }
  return similarity_matrix(sel);
}

// ---------------------------------------------------------------------------
// Connectivity footprints: the set of input pixels reachable from a neuron
// through the composed feedforward masks.

inline std::vector<std::vector<int>> layer_footprints(const std::vector<StructureMask>& w_masks,
                                                      int layer) {
  require(layer >= 1 && layer <= static_cast<int>(w_masks.size()), "footprints: layer out of range");
  // reach[i] = sorted input indices reachable from neuron i of layer `cur`.
  std::vector<std::vector<int>> reach(w_masks[0].rows());
  for (const auto& e : w_masks[0].entries()) reach[e.row].push_back(e.col);
  for (auto& v : reach) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (int p = 2; p <= layer; ++p) {
    std::vector<std::vector<int>> next(w_masks[p - 1].rows());
    for (const auto& e : w_masks[p - 1].entries()) {
      auto& dst = next[e.row];
      dst.insert(dst.end(), reach[e.col].begin(), reach[e.col].end());
    }
    for (auto& v : next) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    reach = std::move(next);
  }
  return reach;
}

// ---------------------------------------------------------------------------
// Reverse correlation: response-weighted average of the inputs over samples
// where the neuron responds, restricted to the neuron's footprint, with an
// optional threshold on the normalized pixel weight. Neurons that never
// respond yield an empty feature with the flag cleared.

struct NeuronFeature {
  Vec image;        // input-dimensional, zero outside the footprint
  bool active = false;
  double peak = 0.0;
};

inline std::vector<NeuronFeature> reverse_correlation_features(const Network& net,
                                                               const Dataset& data, int layer,
                                                               double mask_threshold = 0.0) {
  if (data.image_height <= 0 || data.image_width <= 0)
    throw InvalidInputError("reverse_correlation: dataset is not image-shaped");
  require(data.dim() == net.config().sizes[0], "reverse_correlation: input dimension mismatch");
  const FeatureMatrix fm = extract_features(net, data, layer);
  const auto footprints = layer_footprints(net.config().w_masks, layer);
  const int N = static_cast<int>(fm.values.cols());
  std::vector<NeuronFeature> features(N);
  for (int j = 0; j < N; ++j) {
    NeuronFeature& nf = features[j];
    nf.image = Vec::Zero(data.dim());
    double total = 0.0;
    for (long t = 0; t < data.size(); ++t) {
      const double resp = fm.values(t, j);
      if (resp > 0.0) {
        nf.image += resp * data.samples.row(t).transpose();
        total += resp;
      }
    }
    if (total <= 0.0) continue;
    nf.active = true;
    nf.image /= total;
    // Restrict to the connectivity footprint.
    Vec masked = Vec::Zero(data.dim());
    for (int px : footprints[j]) masked[px] = nf.image[px];
    nf.image = std::move(masked);
    nf.peak = nf.image.cwiseAbs().maxCoeff();
    if (mask_threshold > 0.0 && nf.peak > 0.0) {
      for (Eigen::Index i = 0; i < nf.image.size(); ++i)
        if (std::abs(nf.image[i]) < mask_threshold * nf.peak) nf.image[i] = 0.0;
    }
  }
  return features;
}

// Tile per-neuron feature images into one montage for PGM export. Each tile
// is independently scaled to [0,1]; inactive neurons render as flat gray.
inline Mat feature_montage(const std::vector<NeuronFeature>& features, int height, int width) {
  const int n = static_cast<int>(features.size());
  require(n >= 1, "feature_montage: no features");
  const int tiles = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int pad = 2;
  Mat canvas = Mat::Constant(tiles * (height + pad) - pad, tiles * (width + pad) - pad, 1.0);
  for (int j = 0; j < n; ++j) {
    const int ty = (j / tiles) * (height + pad);
    const int tx = (j % tiles) * (width + pad);
    if (!features[j].active) {
      canvas.block(ty, tx, height, width).setConstant(0.5);
      continue;
    }
    const Vec& img = features[j].image;
    const double lo = img.minCoeff(), hi = img.maxCoeff();
    const double span = hi - lo > 0 ? hi - lo : 1.0;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        canvas(ty + y, tx + x) = (img[y * width + x] - lo) / span;
  }
  return canvas;
}

}  // namespace hebbnet
