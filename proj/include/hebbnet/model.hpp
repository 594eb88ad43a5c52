#pragma once

// Network assembly, the stochastic alternating training loop (fixed-point
// inference followed by a local weight update per sample, optionally
// minibatched), and checkpointing.
//
// Every random draw is derived from (seed, tag, index), so a run is fully
// determined by the seed plus plain counters; checkpoints persist exactly
// those counters and resume bit-identically.

#include "hebbnet/activation.hpp"
#include "hebbnet/common.hpp"
#include "hebbnet/connectivity.hpp"
#include "hebbnet/data.hpp"
#include "hebbnet/dynamics.hpp"
#include "hebbnet/objective.hpp"
#include "hebbnet/plasticity.hpp"
#include "hebbnet/weights.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace hebbnet {

using Json = nlohmann::json;

struct TrainConfig {
  int epochs = 1;
  int batch_size = 1;
  double skip_budget_frac = 0.01;  // tolerated share of divergent samples
  int metrics_every = 0;           // samples between metric rows; 0 = epoch end only
  int monitor_subbatch = 512;      // cost-estimate sub-batch when T > 2000
  int threads = 0;                 // 0 = hardware concurrency
  // Feedback warmup: the first epochs run decoupled (gamma = 0), after which
  // the lateral weights below the top layer are rescaled once by (1+gamma),
  // mapping the decoupled dual optimum onto the coupled parameterization.
  // Direct training at strong gamma from random weights tends to fall into a
  // saturated input-independent attractor; the warmup avoids it. The coupled
  // phase usually needs a colder rate than the warmup; coupled_eta_scale
  // multiplies the per-layer rates once feedback is on.
  int gamma_warmup_epochs = 0;
  double coupled_eta_scale = 1.0;

  void validate() const {
    require(epochs >= 0, "train: epochs must be >= 0");
    require(batch_size >= 1, "train: batch_size must be >= 1");
    require(skip_budget_frac >= 0.0, "train: skip_budget_frac must be >= 0");
    require(monitor_subbatch >= 1, "train: monitor_subbatch must be >= 1");
    require(gamma_warmup_epochs >= 0, "train: gamma_warmup_epochs must be >= 0");
    require(coupled_eta_scale > 0.0, "train: coupled_eta_scale must be > 0");
  }
};

struct NetworkConfig {
  std::uint64_t seed = 1;
  double gamma = 0.0;
  double init_w_scale = 1.0;              // multiplies the fan-in^(-1/2) init sd
  std::vector<int> sizes;                 // N^(0)..N^(P)
  std::vector<Activation> activations;    // layers 1..P
  std::vector<StructureMask> w_masks;     // layer p: N^(p) x N^(p-1)
  std::vector<StructureMask> l_masks;     // layer p: N^(p) x N^(p)
  std::vector<GridLayout> layouts;        // empty, or layers 0..P
  DynamicsConfig dynamics;
  PlasticityConfig plasticity;
  TrainConfig train;

  int P() const { return static_cast<int>(sizes.size()) - 1; }

  void validate() const {
    require(sizes.size() >= 2, "config: need an input layer and at least one layer");
    const int P = this->P();
    require(static_cast<int>(activations.size()) == P, "config: one activation per layer");
    require(static_cast<int>(w_masks.size()) == P && static_cast<int>(l_masks.size()) == P,
            "config: one mask pair per layer");
    require(gamma >= 0.0, "config: gamma must be >= 0");
    for (int p = 1; p <= P; ++p) {
      require(w_masks[p - 1].rows() == sizes[p] && w_masks[p - 1].cols() == sizes[p - 1],
              "config: W mask shape mismatch at layer " + std::to_string(p));
      require(l_masks[p - 1].rows() == sizes[p] && l_masks[p - 1].cols() == sizes[p],
              "config: L mask shape mismatch at layer " + std::to_string(p));
      // Unbounded activations admit a lower-bounded energy only in the
      // single-layer positive-definite-L regime.
      if (!activations[p - 1].bounded())
        require(P == 1, "config: unbounded activations are only allowed for single-layer networks");
    }
    if (!layouts.empty())
      require(static_cast<int>(layouts.size()) == P + 1,
              "config: layouts must cover layers 0..P when present");
    if (train.gamma_warmup_epochs > 0 && P > 1)
      require(plasticity.absorb_gamma,
              "config: gamma warmup needs absorb_gamma (raw gamma^(p-P) rates are undefined "
              "in the decoupled phase)");
    dynamics.validate();
    plasticity.validate(P);
    train.validate();
  }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization of config pieces.

inline Json activation_to_json(const Activation& a) {
  Json j{{"kind", a.name()}};
  if (a.kind() == Activation::Kind::CappedRelu) {
    j["lambda"] = a.lambda();
    j["cap"] = a.cap();
  } else if (a.kind() == Activation::Kind::Shrinkage) {
    j["lambda"] = a.lambda();
  }
  return j;
}

inline Activation activation_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "capped_relu")
    return Activation::capped_relu(j.value("lambda", 0.0), j.value("cap", kInf));
  if (kind == "tanh") return Activation::tanh();
  if (kind == "linear") return Activation::linear();
  if (kind == "shrinkage") return Activation::shrinkage(j.value("lambda", 0.0));
  throw ConfigError("unknown activation kind: " + kind);
}

inline Json dynamics_to_json(const DynamicsConfig& d) {
  return Json{{"tau", d.tau},
              {"step", d.step},
              {"tol", d.tol},
              {"max_iters", d.max_iters},
              {"mode", d.mode == DynamicsConfig::Mode::ToConvergence ? "to_convergence" : "fixed_budget"},
              {"budget", d.budget},
              {"warm_start", d.warm_start}};
}

inline DynamicsConfig dynamics_from_json(const Json& j) {
  DynamicsConfig d;
  d.tau = j.value("tau", d.tau);
  d.step = j.value("step", d.step);
  d.tol = j.value("tol", d.tol);
  d.max_iters = j.value("max_iters", d.max_iters);
  const std::string mode = j.value("mode", "to_convergence");
  if (mode == "to_convergence") d.mode = DynamicsConfig::Mode::ToConvergence;
  else if (mode == "fixed_budget") d.mode = DynamicsConfig::Mode::FixedBudget;
  else throw ConfigError("unknown dynamics mode: " + mode);
  d.budget = j.value("budget", d.budget);
  d.warm_start = j.value("warm_start", d.warm_start);
  d.validate();
  return d;
}

inline Json plasticity_to_json(const PlasticityConfig& p) {
  return Json{{"eta", p.eta},
              {"absorb_gamma", p.absorb_gamma},
              {"strict_convergence", p.strict_convergence},
              {"schedule", p.schedule == PlasticityConfig::Schedule::Constant ? "constant" : "inv_t"},
              {"decay_t0", p.decay_t0}};
}

inline Json train_to_json(const TrainConfig& t) {
  return Json{{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"skip_budget", t.skip_budget_frac},
              {"metrics_every", t.metrics_every},
              {"monitor_subbatch", t.monitor_subbatch},
              {"threads", t.threads},
              {"gamma_warmup_epochs", t.gamma_warmup_epochs},
              {"coupled_eta_scale", t.coupled_eta_scale}};
}

inline TrainConfig train_from_json(const Json& j) {
  TrainConfig t;
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.skip_budget_frac = j.value("skip_budget", t.skip_budget_frac);
  t.metrics_every = j.value("metrics_every", t.metrics_every);
  t.monitor_subbatch = j.value("monitor_subbatch", t.monitor_subbatch);
  t.threads = j.value("threads", t.threads);
  t.gamma_warmup_epochs = j.value("gamma_warmup_epochs", t.gamma_warmup_epochs);
  t.coupled_eta_scale = j.value("coupled_eta_scale", t.coupled_eta_scale);
  t.validate();
  return t;
}

inline Json layout_to_json(const GridLayout& g) {
  return Json{{"height", g.height}, {"width", g.width}, {"stride", g.stride}, {"nps", g.neurons_per_site}};
}

inline GridLayout layout_from_json(const Json& j) {
  GridLayout g;
  g.height = j.at("height").get<int>();
  g.width = j.at("width").get<int>();
  g.stride = j.value("stride", 1);
  g.neurons_per_site = j.value("nps", 1);
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Config-file schema. Grid strides and radii in the file are absolute, i.e.
// expressed in input-grid units like the architecture descriptions they come
// from; the builder converts them to the previous-layer units the mask
// generators use. See README for the full schema reference.

namespace detail {

struct GridChain {
  std::vector<GridLayout> layouts;     // relative strides, layers 0..P
  std::vector<int> absolute_strides;   // layer p site spacing in input units
};

inline StructureMask mask_from_json(const Json& j, int rows, int cols, bool lateral,
                                    const GridChain* grids, int layer) {
  const std::string type = j.at("type").get<std::string>();
  const double c = j.value("c", 1.0);
  if (type == "all_to_all") return StructureMask::all_to_all(rows, cols, c);
  if (type == "none") return StructureMask(rows, cols, {});
  if (type == "block_diagonal") {
    if (lateral) {
      const auto blocks = j.at("blocks").get<std::vector<int>>();
      return StructureMask::block_diagonal(blocks, blocks, c);
    }
    return StructureMask::block_diagonal(j.at("row_blocks").get<std::vector<int>>(),
                                         j.at("col_blocks").get<std::vector<int>>(), c);
  }
  if (type == "local") {
    require(grids != nullptr, "config: local masks need grid layers (and a grid input)");
    const double radius_abs = j.at("radius").get<double>();
    if (lateral) {
      const double unit = grids->absolute_strides[layer];
      return StructureMask::local_lateral(grids->layouts[layer], radius_abs / unit,
                                          j.value("include_diagonal", true), c);
    }
    const double unit = grids->absolute_strides[layer - 1];
    return StructureMask::local_feedforward(grids->layouts[layer - 1], grids->layouts[layer],
                                            radius_abs / unit, c);
  }
  throw ConfigError("unknown mask type: " + type);
}

}  // namespace detail

inline NetworkConfig config_from_json(const Json& j,
                                      const std::vector<StructureMask>* stored_w = nullptr,
                                      const std::vector<StructureMask>* stored_l = nullptr) {
  NetworkConfig cfg;
  cfg.seed = j.value("seed", 1ULL);
  cfg.gamma = j.value("gamma", 0.0);
  cfg.init_w_scale = j.value("init_w_scale", 1.0);
  require(cfg.init_w_scale > 0.0, "config: init_w_scale must be > 0");
  if (j.contains("dynamics")) cfg.dynamics = dynamics_from_json(j.at("dynamics"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));

  const Json& input = j.at("input");
  std::optional<detail::GridChain> grids;
  if (input.contains("grid")) {
    detail::GridChain gc;
    GridLayout in = layout_from_json(input.at("grid"));
    in.stride = 1;
    gc.layouts.push_back(in);
    gc.absolute_strides.push_back(1);
    grids = std::move(gc);
    cfg.sizes.push_back(in.neuron_count());
  } else {
    cfg.sizes.push_back(input.at("size").get<int>());
  }

  const Json& layers = j.at("layers");
  require(layers.is_array() && !layers.empty(), "config: layers must be a non-empty array");
  const int P = static_cast<int>(layers.size());

  // First pass: sizes and layouts.
  for (int p = 1; p <= P; ++p) {
    const Json& lj = layers[p - 1];
    if (lj.contains("grid")) {
      require(grids.has_value(), "config: grid layer requires a grid input");
      const Json& gj = lj.at("grid");
      const int abs_stride = gj.value("stride", grids->absolute_strides.back());
      const int prev_abs = grids->absolute_strides.back();
      require(abs_stride % prev_abs == 0,
              "config: layer stride " + std::to_string(abs_stride) +
                  " must be a multiple of the previous layer's stride");
      const int rel = abs_stride / prev_abs;
      GridLayout g;
      g.stride = rel;
      g.neurons_per_site = gj.value("nps", 1);
      const GridLayout& prev = grids->layouts.back();
      g.height = gj.contains("height") ? gj.at("height").get<int>() : (prev.height - 1) / rel + 1;
      g.width = gj.contains("width") ? gj.at("width").get<int>() : (prev.width - 1) / rel + 1;
      g.validate();
      grids->layouts.push_back(g);
      grids->absolute_strides.push_back(abs_stride);
      cfg.sizes.push_back(g.neuron_count());
    } else {
      require(!grids.has_value() || lj.contains("size"),
              "config: layer needs either a grid or a size");
      cfg.sizes.push_back(lj.at("size").get<int>());
      if (grids.has_value())
        throw ConfigError("config: cannot mix grid and size layers (footprints would be undefined)");
    }
    cfg.activations.push_back(activation_from_json(lj.at("activation")));
  }

  // Second pass: masks.
  for (int p = 1; p <= P; ++p) {
    const Json& lj = layers[p - 1];
    if (stored_w != nullptr) {
      cfg.w_masks.push_back(stored_w->at(p - 1));
      cfg.l_masks.push_back(stored_l->at(p - 1));
      continue;
    }
    cfg.w_masks.push_back(detail::mask_from_json(lj.at("feedforward"), cfg.sizes[p],
                                                 cfg.sizes[p - 1], false,
                                                 grids ? &*grids : nullptr, p));
    cfg.l_masks.push_back(detail::mask_from_json(lj.at("lateral"), cfg.sizes[p], cfg.sizes[p],
                                                 true, grids ? &*grids : nullptr, p));
  }
  if (grids) cfg.layouts = grids->layouts;

  // Learning rates: explicit array, else per-layer overrides, else the
  // absorbed default eta * gamma^(P-p) (the raw gamma^(p-P) factor is kept
  // by apply_update when absorb_gamma is off).
  const Json pj = j.value("plasticity", Json::object());
  PlasticityConfig& pl = cfg.plasticity;
  pl.absorb_gamma = pj.value("absorb_gamma", true);
  pl.strict_convergence = pj.value("strict_convergence", false);
  const std::string sched = pj.value("schedule", "constant");
  if (sched == "constant") pl.schedule = PlasticityConfig::Schedule::Constant;
  else if (sched == "inv_t") pl.schedule = PlasticityConfig::Schedule::InvT;
  else throw ConfigError("unknown plasticity schedule: " + sched);
  pl.decay_t0 = pj.value("decay_t0", 1.0);
  if (pj.contains("eta") && pj.at("eta").is_array()) {
    pl.eta = pj.at("eta").get<std::vector<double>>();
  } else {
    const double base = pj.value("eta", 0.01);
    pl.eta.resize(P);
    for (int p = 1; p <= P; ++p) {
      double e = base;
      if (pl.absorb_gamma && p < P) {
        require(cfg.gamma > 0.0,
                "config: default per-layer rates eta*gamma^(P-p) need gamma > 0; "
                "set explicit per-layer eta for gamma = 0");
        e = base * std::pow(cfg.gamma, static_cast<double>(P - p));
      }
      pl.eta[p - 1] = e;
    }
    for (int p = 1; p <= P; ++p)
      if (layers[p - 1].contains("eta")) pl.eta[p - 1] = layers[p - 1].at("eta").get<double>();
  }

  cfg.validate();
  return cfg;
}

// Serializes everything needed to rebuild the config except mask contents,
// which checkpoints store as explicit triples ("stored" markers here).
inline Json config_to_json(const NetworkConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["gamma"] = cfg.gamma;
  j["init_w_scale"] = cfg.init_w_scale;
  j["dynamics"] = dynamics_to_json(cfg.dynamics);
  j["plasticity"] = plasticity_to_json(cfg.plasticity);
  j["train"] = train_to_json(cfg.train);
  if (!cfg.layouts.empty())
    j["input"] = Json{{"grid", layout_to_json(cfg.layouts[0])}};
  else
    j["input"] = Json{{"size", cfg.sizes[0]}};
  Json layers = Json::array();
  for (int p = 1; p <= cfg.P(); ++p) {
    Json lj;
    if (!cfg.layouts.empty()) lj["grid"] = layout_to_json(cfg.layouts[p]);
    else lj["size"] = cfg.sizes[p];
    lj["activation"] = activation_to_json(cfg.activations[p - 1]);
    lj["feedforward"] = Json{{"type", "stored"}};
    lj["lateral"] = Json{{"type", "stored"}};
    layers.push_back(lj);
  }
  j["layers"] = layers;
  return j;
}

// ---------------------------------------------------------------------------
// Training.

struct MetricsRow {
  int epoch = 0;
  long samples_seen = 0;
  double cost_estimate = 0.0;
  int subbatch_size = 0;
  std::vector<double> layer_residuals;  // mean final residual per layer
};

class Network;

struct TrainCallbacks {
  std::function<void(const MetricsRow&)> on_metrics;
  std::function<void(int epoch, Network&)> on_epoch_end;
};

struct TrainResult {
  std::vector<MetricsRow> metrics;
  long samples_processed = 0;
  long skipped = 0;
};

class Network {
 public:
  static Network initialize(NetworkConfig cfg) {
    cfg.validate();
    Network net;
    net.cfg_ = std::move(cfg);
    const int P = net.cfg_.P();
    net.weights_.reserve(P);
    for (int p = 0; p < P; ++p)
      net.weights_.emplace_back(net.cfg_.w_masks[p], net.cfg_.l_masks[p]);
    Rng rng = make_rng(net.cfg_.seed, "init");
    for (auto& lw : net.weights_) {
      init_layer_weights(lw, rng);
      if (net.cfg_.init_w_scale != 1.0)
        for (double& v : lw.W.values()) v *= net.cfg_.init_w_scale;
    }
    return net;
  }

  const NetworkConfig& config() const { return cfg_; }
  const std::vector<LayerWeights>& weights() const { return weights_; }
  std::vector<LayerWeights>& weights() { return weights_; }
  int P() const { return cfg_.P(); }
  int epoch() const { return epoch_; }
  long position() const { return pos_; }
  long samples_seen() const { return samples_seen_; }
  long skipped() const { return skipped_; }

  NetworkState infer(const Vec& x) const {
    return run_to_fixed_point(x, weights_, cfg_.activations, cfg_.gamma, cfg_.dynamics);
  }
  NetworkState infer(const Vec& x, double gamma, const DynamicsConfig& dcfg) const {
    return run_to_fixed_point(x, weights_, cfg_.activations, gamma, dcfg);
  }

  TrainResult train_stream(const Dataset& data, const TrainCallbacks& cb = {}) {
    return train_impl(data, cb, /*batch_size=*/1);
  }

  TrainResult train_minibatch(const Dataset& data, const TrainCallbacks& cb = {}) {
    return train_impl(data, cb, cfg_.train.batch_size);
  }

  // -------------------------------------------------------------------------
  // Checkpointing: single file, magic + version + JSON manifest + tensor
  // blobs (mask triples and weight values, little-endian). Written to a
  // temp file and renamed so readers never observe a partial checkpoint.

  void save_checkpoint(const std::string& path) const {
    Json manifest;
    manifest["config"] = config_to_json(cfg_);
    manifest["counters"] = Json{{"epoch", epoch_},
                                {"pos", pos_},
                                {"samples_seen", samples_seen_},
                                {"skipped", skipped_}};
    Json layers = Json::array();
    for (const auto& lw : weights_)
      layers.push_back(Json{{"rows", lw.W.rows()},
                            {"w_cols", lw.W.cols()},
                            {"w_nnz", lw.W.nnz()},
                            {"l_nnz", lw.L.nnz()}});
    manifest["layers"] = layers;
    const std::string mjson = manifest.dump();

    const std::string tmp = path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot write checkpoint: " + tmp);
      f.write(kMagic, 8);
      write_u32_le(f, kVersion);
      write_u64_le(f, mjson.size());
      f.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
      for (const auto& lw : weights_) {
        write_masked(f, lw.W);
        write_masked(f, lw.L);
      }
      if (!f) throw IoError("failed writing checkpoint: " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  static Network load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    char magic[8] = {};
    f.read(magic, 8);
    if (f.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
      throw CorruptFileError("not a checkpoint file: " + path);
    const std::uint32_t version = read_u32_le(f);
    if (version != kVersion)
      throw CorruptFileError("unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t mlen = read_u64_le(f);
    std::string mjson(mlen, '\0');
    detail::read_exact(f, mjson.data(), mlen, path);
    Json manifest;
    try {
      manifest = Json::parse(mjson);
    } catch (const Json::exception& e) {
      throw CorruptFileError(std::string("bad checkpoint manifest: ") + e.what());
    }

    const Json& layers = manifest.at("layers");
    std::vector<StructureMask> w_masks, l_masks;
    std::vector<std::vector<double>> w_vals, l_vals;
    for (const Json& lj : layers) {
      auto [wm, wv] = read_masked(f, lj.at("rows").get<int>(), lj.at("w_cols").get<int>(),
                                  lj.at("w_nnz").get<std::size_t>(), path);
      auto [lm, lv] = read_masked(f, lj.at("rows").get<int>(), lj.at("rows").get<int>(),
                                  lj.at("l_nnz").get<std::size_t>(), path);
      w_masks.push_back(std::move(wm));
      w_vals.push_back(std::move(wv));
      l_masks.push_back(std::move(lm));
      l_vals.push_back(std::move(lv));
    }

    NetworkConfig cfg = config_from_json(manifest.at("config"), &w_masks, &l_masks);
    Network net;
    net.cfg_ = std::move(cfg);
    for (std::size_t p = 0; p < w_masks.size(); ++p) {
      LayerWeights lw(net.cfg_.w_masks[p], net.cfg_.l_masks[p]);
      lw.W.values() = std::move(w_vals[p]);
      lw.L.values() = std::move(l_vals[p]);
      net.weights_.push_back(std::move(lw));
    }
    const Json& counters = manifest.at("counters");
    net.epoch_ = counters.at("epoch").get<int>();
    net.pos_ = counters.at("pos").get<long>();
    net.samples_seen_ = counters.at("samples_seen").get<long>();
    net.skipped_ = counters.at("skipped").get<long>();
    return net;
  }

 private:
  static constexpr const char* kMagic = "HBNCKPT1";
  static constexpr std::uint32_t kVersion = 1;

  static void write_masked(std::ostream& os, const MaskedMatrix& m) {
    for (std::size_t k = 0; k < m.nnz(); ++k) {
      write_u32_le(os, static_cast<std::uint32_t>(m.row_index()[k]));
      write_u32_le(os, static_cast<std::uint32_t>(m.col_index()[k]));
      write_f64_le(os, m.constants()[k]);
    }
    for (std::size_t k = 0; k < m.nnz(); ++k) write_f64_le(os, m.values()[k]);
  }

  static std::pair<StructureMask, std::vector<double>> read_masked(std::istream& is, int rows,
                                                                   int cols, std::size_t nnz,
                                                                   const std::string& path) {
    std::vector<MaskEntry> entries(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      entries[k].row = static_cast<int>(read_u32_le(is));
      entries[k].col = static_cast<int>(read_u32_le(is));
      entries[k].c = read_f64_le(is);
    }
    std::vector<double> values(nnz);
    for (std::size_t k = 0; k < nnz; ++k) values[k] = read_f64_le(is);
    if (!is) throw CorruptFileError("truncated checkpoint: " + path);
    return {StructureMask(rows, cols, std::move(entries)), std::move(values)};
  }

  std::vector<long> epoch_permutation(int epoch, long T) const {
    std::vector<long> perm(T);
    for (long i = 0; i < T; ++i) perm[i] = i;
    Rng rng = make_rng(cfg_.seed, "epoch_perm", static_cast<std::uint64_t>(epoch));
    shuffle_indices(perm, rng);
    return perm;
  }

  std::vector<long> monitor_indices(long T) const {
    // Fixed across the run so epoch costs are comparable. Full batch up to
    // the O(T^2)-safe size, a seeded uniform sub-batch beyond it.
    const long count = T <= 2000 ? T : std::min<long>(cfg_.train.monitor_subbatch, T);
    std::vector<long> all(T);
    for (long i = 0; i < T; ++i) all[i] = i;
    if (count >= T) return all;
    Rng rng = make_rng(cfg_.seed, "monitor");
    shuffle_indices(all, rng);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
  }

  MetricsRow evaluate_metrics(const Dataset& data, const std::vector<long>& monitor) {
    MetricsRow row;
    row.epoch = epoch_;
    row.samples_seen = samples_seen_;
    row.subbatch_size = static_cast<int>(monitor.size());
    const int P = cfg_.P();
    BatchOutputs batch(P + 1);
    batch[0].resize(monitor.size(), cfg_.sizes[0]);
    for (int p = 1; p <= P; ++p) batch[p].resize(monitor.size(), cfg_.sizes[p]);
    Mat residuals = Mat::Zero(static_cast<long>(monitor.size()), P);
    run_parallel(monitor.size(), [&](long mi) {
      try {
        NetworkState st = infer(data.samples.row(monitor[mi]).transpose());
        batch[0].row(mi) = data.samples.row(monitor[mi]);
        for (int p = 1; p <= P; ++p) batch[p].row(mi) = st.r[p - 1].transpose();
        for (int p = 0; p < P; ++p) residuals(mi, p) = st.layer_residuals[p];
      } catch (const DivergenceError&) {
        batch[0].row(mi).setZero();
        for (int p = 1; p <= P; ++p) batch[p].row(mi).setZero();
      }
    });
    row.layer_residuals.assign(P, 0.0);
    for (int p = 0; p < P; ++p) row.layer_residuals[p] = residuals.col(p).mean();
    if (P == 1 || cfg_.gamma > 0.0)
      row.cost_estimate =
          deep_structured_cost(batch, cfg_.w_masks, cfg_.l_masks, cfg_.gamma, cfg_.activations);
    else
      row.cost_estimate = std::numeric_limits<double>::quiet_NaN();
    return row;
  }

  void run_parallel(std::size_t n, const std::function<void(long)>& fn) const {
    int threads = cfg_.train.threads > 0 ? cfg_.train.threads
                                         : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min<int>(threads, static_cast<int>(n));
    if (threads <= 1) {
      for (std::size_t i = 0; i < n; ++i) fn(static_cast<long>(i));
      return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(threads))
            fn(static_cast<long>(i));
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  // Pairwise mean over per-sample Hebbian products; exact for power-of-two
  // counts of identical members.
  static SampleUpdate pairwise_mean(std::vector<SampleUpdate> items) {
    const double count = static_cast<double>(items.size());
    std::size_t n = items.size();
    while (n > 1) {
      const std::size_t half = (n + 1) / 2;
      for (std::size_t i = 0; i + half < n; ++i) {
        auto& a = items[i];
        const auto& b = items[i + half];
        for (std::size_t p = 0; p < a.ww.size(); ++p) {
          for (std::size_t k = 0; k < a.ww[p].size(); ++k) a.ww[p][k] += b.ww[p][k];
          for (std::size_t k = 0; k < a.ll[p].size(); ++k) a.ll[p][k] += b.ll[p][k];
        }
      }
      n = half;
    }
    for (std::size_t p = 0; p < items[0].ww.size(); ++p) {
      for (double& v : items[0].ww[p]) v /= count;
      for (double& v : items[0].ll[p]) v /= count;
    }
    return std::move(items[0]);
  }

  TrainResult train_impl(const Dataset& data, const TrainCallbacks& cb, int batch_size) {
    cfg_.validate();
    data.validate();
    require(data.dim() == cfg_.sizes[0],
            "train: sample dimension " + std::to_string(data.dim()) + " != input size " +
                std::to_string(cfg_.sizes[0]));
    const long T = data.size();
    require(T >= 1, "train: empty dataset");

    const long skip_budget = static_cast<long>(
        cfg_.train.skip_budget_frac * static_cast<double>(T) * cfg_.train.epochs);
    const std::vector<long> monitor = monitor_indices(T);

    TrainResult result;
    auto emit = [&](MetricsRow row) {
      if (cb.on_metrics) cb.on_metrics(row);
      result.metrics.push_back(std::move(row));
    };

    while (epoch_ < cfg_.train.epochs) {
      const bool warmup_phase = epoch_ < cfg_.train.gamma_warmup_epochs;
      if (!warmup_phase && cfg_.train.gamma_warmup_epochs > 0 &&
          epoch_ == cfg_.train.gamma_warmup_epochs && pos_ == 0 && cfg_.gamma > 0.0) {
        // One-time transition out of the decoupled phase: the dual optimum of
        // the lateral weights carries a (1+gamma) factor below the top layer.
        for (int p = 0; p + 1 < cfg_.P(); ++p)
          for (double& v : weights_[p].L.values()) v *= 1.0 + cfg_.gamma;
      }
      const double train_gamma = warmup_phase ? 0.0 : cfg_.gamma;
      PlasticityConfig phase_plasticity = cfg_.plasticity;
      if (!warmup_phase && cfg_.train.gamma_warmup_epochs > 0 &&
          cfg_.train.coupled_eta_scale != 1.0)
        for (double& e : phase_plasticity.eta) e *= cfg_.train.coupled_eta_scale;
      const std::vector<long> perm = epoch_permutation(epoch_, T);
      while (pos_ < T) {
        const long members = std::min<long>(batch_size, T - pos_);
        std::vector<std::optional<SampleUpdate>> updates(members);
        std::vector<bool> unconverged(members, false);
        if (members == 1) {
          // Online path: no snapshot indirection, optional warm start.
          const Vec x = data.samples.row(perm[pos_]).transpose();
          try {
            NetworkState st = run_to_fixed_point(x, weights_, cfg_.activations, train_gamma,
                                                 cfg_.dynamics, nullptr,
                                                 warm_.has_value() ? &*warm_ : nullptr);
            if (cfg_.dynamics.warm_start) warm_ = st;
            update_weights(weights_, st, train_gamma, phase_plasticity, samples_seen_);
          } catch (const DivergenceError&) {
            skipped_++;
            result.skipped++;
            if (skipped_ > skip_budget)
              throw DivergenceError("skip budget exceeded: " + std::to_string(skipped_) +
                                    " divergent samples");
          }
        } else {
          run_parallel(members, [&](long m) {
            const Vec x = data.samples.row(perm[pos_ + m]).transpose();
            try {
              NetworkState st =
                  run_to_fixed_point(x, weights_, cfg_.activations, train_gamma, cfg_.dynamics);
              if (cfg_.plasticity.strict_convergence && !st.converged) unconverged[m] = true;
              else updates[m] = hebbian_products(weights_, st);
            } catch (const DivergenceError&) {
              // skipped below, on the writer thread
            }
          });
          for (long m = 0; m < members; ++m)
            if (unconverged[m])
              throw StaleStateError("minibatch member did not converge in strict mode");
          std::vector<SampleUpdate> good;
          for (auto& u : updates)
            if (u.has_value()) good.push_back(std::move(*u));
          const long bad = members - static_cast<long>(good.size());
          if (bad > 0) {
            skipped_ += bad;
            result.skipped += bad;
            if (skipped_ > skip_budget)
              throw DivergenceError("skip budget exceeded: " + std::to_string(skipped_) +
                                    " divergent samples");
          }
          if (!good.empty())
            apply_update(weights_, pairwise_mean(std::move(good)), train_gamma,
                         phase_plasticity, samples_seen_);
        }
        pos_ += members;
        samples_seen_ += members;
        result.samples_processed += members;
        if (cfg_.train.metrics_every > 0 &&
            (samples_seen_ % cfg_.train.metrics_every) < members)
          emit(evaluate_metrics(data, monitor));
      }
      pos_ = 0;
      emit(evaluate_metrics(data, monitor));
      // Counters are advanced before the callback so a checkpoint taken
      // there resumes at the next epoch.
      epoch_++;
      if (cb.on_epoch_end) cb.on_epoch_end(epoch_ - 1, *this);
    }
    return result;
  }

  NetworkConfig cfg_;
  std::vector<LayerWeights> weights_;
  std::optional<NetworkState> warm_;
  int epoch_ = 0;
  long pos_ = 0;
  long samples_seen_ = 0;
  long skipped_ = 0;
};

}  // namespace hebbnet
