#pragma once

// Prefilled experiment configurations. Numbers that describe the
// architectures (strides, radii, activations, gamma) follow the published
// setups; training hyperparameters (rates, epochs, integration settings)
// are this repo's choices and live here so results always point back to a
// concrete config file.

#include "hebbnet/common.hpp"
#include "hebbnet/model.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hebbnet {

struct Preset {
  Json config;
  Json data_manifest;  // null when the dataset is user-supplied
};

namespace preset_detail {
// Random orthonormal directions (QR of a Gaussian matrix), one column per
// cluster. Orthogonal cluster means give zero target cross-similarity, which
// the nonnegative outputs can represent exactly as disjoint codes.
inline Mat orthonormal_means(int dims, int count, Rng& rng) {
  Mat g(dims, count);
  for (int i = 0; i < dims; ++i)
    for (int j = 0; j < count; ++j) g(i, j) = gaussian(rng);
  return Eigen::HouseholderQR<Mat>(g).householderQ() * Mat::Identity(dims, count);
}
}  // namespace preset_detail

// Two-cluster, two-subnetwork toy: layer 1 is a pair of separate 10-neuron
// nets, each seeing its own 100-dimensional input block; layer 2 is a single
// 10-neuron net coupled to both with gamma = 0.8 feedback. Training starts
// with decoupled epochs (gamma warmup) before the feedback phase.
inline Preset preset_toy61(std::uint64_t seed = 7) {
  Preset p;
  // The small activation threshold gates sub-threshold cross-talk; without
  // it the saturating feedback loop gradually merges the cluster codes. The
  // boosted init keeps the thresholded network bootstrappable.
  auto act = Json{{"kind", "capped_relu"}, {"lambda", 0.05}, {"cap", 1.0}};
  p.config = Json{
      {"seed", seed},
      {"gamma", 0.8},
      {"init_w_scale", 3.0},
      {"input", {{"size", 200}}},
      {"layers",
       Json::array(
           {Json{{"size", 20},
                 {"activation", act},
                 {"feedforward",
                  {{"type", "block_diagonal"},
                   {"row_blocks", {10, 10}},
                   {"col_blocks", {100, 100}}}},
                 {"lateral", {{"type", "block_diagonal"}, {"blocks", {10, 10}}}}},
            Json{{"size", 10},
                 {"activation", act},
                 {"feedforward", {{"type", "all_to_all"}}},
                 {"lateral", {{"type", "all_to_all"}}}}})},
      {"dynamics",
       {{"tau", 1.0}, {"step", 0.1}, {"tol", 1e-7}, {"max_iters", 6000}, {"mode", "to_convergence"}}},
      {"plasticity", {{"eta", Json::array({0.02, 0.02})}, {"absorb_gamma", true}}},
      {"train",
       {{"epochs", 16},
        {"gamma_warmup_epochs", 14},
        {"coupled_eta_scale", 0.05},
        {"batch_size", 1},
        {"metrics_every", 150},
        {"monitor_subbatch", 512}}}};

  Rng rng = make_rng(seed, "toy61_means");
  const Mat top = preset_detail::orthonormal_means(100, 2, rng);
  const Mat bot = preset_detail::orthonormal_means(100, 2, rng);
  Json clusters = Json::array();
  for (int k = 0; k < 2; ++k) {
    std::vector<double> mean(200);
    for (int i = 0; i < 100; ++i) {
      mean[i] = top(i, k);
      mean[100 + i] = bot(i, k);
    }
    clusters.push_back(Json{{"mean", mean}, {"sigma", 0.05}, {"count", 300}});
  }
  p.data_manifest = Json{{"type", "synth_clusters"}, {"seed", seed + 1}, {"clusters", clusters}};
  return p;
}

// Three locally connected layers on a 64x64 grid: strides 2/4/8 (so 1024,
// 256 and 64 neurons), connection radii 8/12/24 in input units for both
// feedforward and lateral links, gamma = 0.01.
inline Preset preset_faces62() {
  Preset p;
  auto act = Json{{"kind", "capped_relu"}, {"lambda", 0.0}, {"cap", 1.0}};
  p.config = Json{
      {"seed", 62},
      {"gamma", 0.01},
      {"input", {{"grid", {{"height", 64}, {"width", 64}}}}},
      {"layers",
       Json::array(
           {Json{{"grid", {{"stride", 2}, {"nps", 1}}},
                 {"activation", act},
                 {"feedforward", {{"type", "local"}, {"radius", 8.0}}},
                 {"lateral", {{"type", "local"}, {"radius", 8.0}, {"include_diagonal", true}}},
                 {"eta", 0.02}},
            Json{{"grid", {{"stride", 4}, {"nps", 1}}},
                 {"activation", act},
                 {"feedforward", {{"type", "local"}, {"radius", 12.0}}},
                 {"lateral", {{"type", "local"}, {"radius", 12.0}, {"include_diagonal", true}}},
                 {"eta", 0.02}},
            Json{{"grid", {{"stride", 8}, {"nps", 1}}},
                 {"activation", act},
                 {"feedforward", {{"type", "local"}, {"radius", 24.0}}},
                 {"lateral", {{"type", "local"}, {"radius", 24.0}, {"include_diagonal", true}}},
                 {"eta", 0.02}}})},
      {"dynamics",
       {{"tau", 1.0}, {"step", 0.1}, {"tol", 1e-6}, {"mode", "fixed_budget"}, {"budget", 120}}},
      {"plasticity",
       {{"eta", 0.02}, {"absorb_gamma", true}, {"schedule", "inv_t"}, {"decay_t0", 200.0}}},
      {"train", {{"epochs", 4}, {"batch_size", 1}}}};
  p.data_manifest = Json{{"type", "pgm_dir"}, {"dir", "faces_pgm"}, {"side", 64}};
  return p;
}

// Single-layer locally connected MNIST network: stride 2 (14x14 sites),
// fan-in radius 4, tanh activation, within-site lateral inhibition, mean
// subtracted inputs.
inline Preset preset_mnist63(int nps = 8) {
  Preset p;
  p.config = Json{
      {"seed", 63},
      {"gamma", 0.0},
      {"input", {{"grid", {{"height", 28}, {"width", 28}}}}},
      {"layers",
       Json::array({Json{{"grid", {{"stride", 2}, {"nps", nps}}},
                         {"activation", {{"kind", "tanh"}}},
                         {"feedforward", {{"type", "local"}, {"radius", 4.0}}},
                         {"lateral",
                          {{"type", "local"}, {"radius", 0.0}, {"include_diagonal", true}}},
                         {"eta", 0.02}}})},
      {"dynamics",
       {{"tau", 1.0}, {"step", 0.2}, {"tol", 1e-5}, {"mode", "fixed_budget"}, {"budget", 60}}},
      {"plasticity", {{"eta", 0.02}, {"absorb_gamma", true}}},
      {"train", {{"epochs", 2}, {"batch_size", 1}, {"monitor_subbatch", 512}}}};
  p.data_manifest = Json{{"type", "idx"},
                         {"images", "train-images-idx3-ubyte"},
                         {"labels", "train-labels-idx1-ubyte"},
                         {"limit", 10000},
                         {"preprocess", {{"mean_subtract", "per_pixel"}}}};
  return p;
}

inline Preset preset_by_name(const std::string& name) {
  if (name == "toy61") return preset_toy61();
  if (name == "faces62") return preset_faces62();
  if (name == "mnist63") return preset_mnist63();
  if (name == "custom") {
    Preset p;
    p.config = Json{
        {"seed", 1},
        {"gamma", 0.0},
        {"input", {{"size", 16}}},
        {"layers", Json::array({Json{{"size", 8},
                                     {"activation", {{"kind", "tanh"}}},
                                     {"feedforward", {{"type", "all_to_all"}}},
                                     {"lateral", {{"type", "all_to_all"}}}}})},
        {"dynamics", {{"step", 0.1}, {"tol", 1e-6}, {"max_iters", 10000}, {"mode", "to_convergence"}}},
        {"plasticity", {{"eta", 0.02}, {"absorb_gamma", true}}},
        {"train", {{"epochs", 1}, {"batch_size", 1}}}};
    return p;
  }
  throw ConfigError("unknown preset: " + name + " (want toy61|faces62|mnist63|custom)");
}

}  // namespace hebbnet
