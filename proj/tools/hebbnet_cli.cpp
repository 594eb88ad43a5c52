// hebbnet command line: batch training and evaluation of structured and
// deep Hebbian/anti-Hebbian networks. Every figure-style artifact is
// emitted as data (CSV / PGM); there is no interactive mode.
//
// Subcommands
//   init-config       write a preset config (and data manifest)
//   train             train a network from a config + data manifest
//   eval-classify     linear-classifier error on fixed-point features
//   export-similarity representational similarity matrices as CSV
//   export-features   reverse-correlation feature montages as PGM
//   export-trace      per-step dynamics trace (iteration, energy, residual)
//   verify            run the property suites (lyapunov | duality |
//                     gradients | oracle)
//
// Failures print one machine-readable JSON object on stderr and exit with
// the error-class code.

#include "hebbnet/hebbnet.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using hebbnet::Json;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw hebbnet::IoError("cannot write file: " + path);
  f << text;
}

std::uint64_t effective_seed(std::uint64_t config_seed) {
  if (const char* env = std::getenv("HEBBNET_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw hebbnet::UsageError("HEBBNET_SEED must be an unsigned integer");
    }
  }
  return config_seed;
}

struct RunPaths {
  fs::path dir;
  fs::path config() const { return dir / "config.json"; }
  fs::path data_manifest() const { return dir / "data.json"; }
  fs::path preprocess() const { return dir / "preprocess.json"; }
  fs::path metrics() const { return dir / "metrics.csv"; }
  fs::path checkpoints() const { return dir / "checkpoints"; }
  fs::path final_checkpoint() const { return checkpoints() / "final.ckpt"; }
  fs::path exports() const { return dir / "exports"; }
};

hebbnet::Dataset load_run_dataset(const Json& manifest, const fs::path& base,
                                  const RunPaths& run, bool fit_if_needed) {
  hebbnet::Dataset ds = hebbnet::dataset_from_manifest(manifest, base);
  auto pre = hebbnet::preprocessor_from_manifest(manifest);
  if (!pre.has_value()) return ds;
  if (fs::exists(run.preprocess())) {
    const auto stats = hebbnet::load_json_file(run.preprocess().string());
    const auto ms = hebbnet::preprocessor_from_stats(stats);
    return ms.apply(ds);
  }
  if (!fit_if_needed)
    throw hebbnet::UsageError("preprocessing requested but no fitted statistics in run dir (" +
                              run.preprocess().string() + ")");
  pre->fit(ds);
  write_text_file(run.preprocess().string(), hebbnet::preprocessor_to_json(*pre).dump(2));
  return pre->apply(ds);
}

int cmd_init_config(const std::string& preset, const std::string& out,
                    const std::string& data_out) {
  hebbnet::Preset p = hebbnet::preset_by_name(preset);
  write_text_file(out, p.config.dump(2) + "\n");
  std::cout << "wrote " << out << "\n";
  if (!data_out.empty() && !p.data_manifest.is_null()) {
    write_text_file(data_out, p.data_manifest.dump(2) + "\n");
    std::cout << "wrote " << data_out << "\n";
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir, const std::string& resume, int threads,
              int checkpoint_every) {
  RunPaths run{fs::path(out_dir)};
  fs::create_directories(run.checkpoints());
  fs::create_directories(run.exports());

  Json config_json = hebbnet::load_json_file(config_path);
  config_json["seed"] = effective_seed(config_json.value("seed", 1ULL));
  if (threads > 0) config_json["train"]["threads"] = threads;
  const Json manifest = hebbnet::load_json_file(data_path);
  write_text_file(run.config().string(), config_json.dump(2) + "\n");
  write_text_file(run.data_manifest().string(), manifest.dump(2) + "\n");

  hebbnet::Dataset ds =
      load_run_dataset(manifest, fs::path(data_path).parent_path(), run, /*fit=*/true);

  hebbnet::Network net = resume.empty()
                             ? hebbnet::Network::initialize(hebbnet::config_from_json(config_json))
                             : hebbnet::Network::load_checkpoint(resume);

  std::ofstream metrics(run.metrics(), resume.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) throw hebbnet::IoError("cannot write metrics: " + run.metrics().string());
  if (resume.empty()) {
    metrics << "epoch,samples_seen,cost_estimate,subbatch_size";
    for (int p = 1; p <= net.P(); ++p) metrics << ",residual_l" << p;
    metrics << "\n";
  }

  hebbnet::TrainCallbacks cb;
  cb.on_metrics = [&](const hebbnet::MetricsRow& row) {
    metrics << row.epoch << "," << row.samples_seen << "," << row.cost_estimate << ","
            << row.subbatch_size;
    for (double r : row.layer_residuals) metrics << "," << r;
    metrics << "\n";
    metrics.flush();
  };
  cb.on_epoch_end = [&](int epoch, hebbnet::Network& n) {
    if (checkpoint_every > 0 && (epoch + 1) % checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch);
      n.save_checkpoint((run.checkpoints() / name).string());
    }
  };

  hebbnet::TrainResult result = net.config().train.batch_size > 1 ? net.train_minibatch(ds, cb)
                                                                  : net.train_stream(ds, cb);
  net.save_checkpoint(run.final_checkpoint().string());

  Json report{{"samples_processed", result.samples_processed},
              {"skipped", result.skipped},
              {"epochs", net.epoch()},
              {"final_cost", result.metrics.empty() ? 0.0 : result.metrics.back().cost_estimate}};
  write_text_file((run.dir / "run_report.json").string(), report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_eval_classify(const std::string& run_dir, int layer, const std::string& train_manifest,
                      const std::string& test_manifest, int epochs, double l2,
                      std::uint64_t seed, bool export_features) {
  RunPaths run{fs::path(run_dir)};
  hebbnet::Network net = hebbnet::Network::load_checkpoint(run.final_checkpoint().string());

  const Json train_m = hebbnet::load_json_file(train_manifest);
  const Json test_m = hebbnet::load_json_file(test_manifest);
  hebbnet::Dataset train =
      load_run_dataset(train_m, fs::path(train_manifest).parent_path(), run, /*fit=*/false);
  hebbnet::Dataset test =
      load_run_dataset(test_m, fs::path(test_manifest).parent_path(), run, /*fit=*/false);
  if (!train.has_labels() || !test.has_labels())
    throw hebbnet::InvalidInputError("eval-classify: both datasets need labels");

  const auto ftrain = hebbnet::extract_features(net, train, layer);
  const auto ftest = hebbnet::extract_features(net, test, layer);

  hebbnet::ClassifierConfig ccfg;
  ccfg.epochs = epochs;
  ccfg.l2 = l2;
  ccfg.seed = seed;
  const auto clf = hebbnet::LinearClassifier::train(ftrain.values, train.labels, ccfg);
  const double train_err = clf.error_rate(ftrain.values, train.labels);
  const double test_err = clf.error_rate(ftest.values, test.labels);

  Json report{{"layer", layer},
              {"train_error", train_err},
              {"test_error", test_err},
              {"train_size", train.size()},
              {"test_size", test.size()},
              {"classifier", {{"epochs", epochs}, {"l2", l2}, {"seed", seed}}}};
  fs::create_directories(run.exports());
  const std::string tag = "layer" + std::to_string(layer);
  write_text_file((run.exports() / ("classify_" + tag + ".json")).string(), report.dump(2) + "\n");
  hebbnet::write_tensor_file((run.exports() / ("classifier_" + tag + ".tns")).string(),
                             {{"weight", clf.weight()}, {"bias", clf.bias()}});
  if (export_features) {
    hebbnet::write_tensor_file((run.exports() / ("features_" + tag + "_train.tns")).string(),
                               {{"features", ftrain.values}});
    hebbnet::write_tensor_file((run.exports() / ("features_" + tag + "_test.tns")).string(),
                               {{"features", ftest.values}});
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

std::vector<long> read_indices(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw hebbnet::IoError("cannot open indices file: " + path);
  std::vector<long> idx;
  long v;
  while (f >> v) idx.push_back(v);
  if (idx.empty()) throw hebbnet::InvalidInputError("indices file is empty: " + path);
  return idx;
}

void write_csv_matrix(const std::string& path, const hebbnet::Mat& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw hebbnet::IoError("cannot write file: " + path);
  f.precision(12);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) f << (j ? "," : "") << m(i, j);
    f << "\n";
  }
}

int cmd_export_similarity(const std::string& run_dir, const std::string& indices_path,
                          const std::string& data_path, int layer) {
  RunPaths run{fs::path(run_dir)};
  hebbnet::Network net = hebbnet::Network::load_checkpoint(run.final_checkpoint().string());
  const std::string data = data_path.empty() ? run.data_manifest().string() : data_path;
  const Json manifest = hebbnet::load_json_file(data);
  hebbnet::Dataset ds = load_run_dataset(manifest, fs::path(data).parent_path(), run, false);
  const auto indices = read_indices(indices_path);
  for (long i : indices)
    if (i < 0 || i >= ds.size())
      throw hebbnet::InvalidInputError("index out of range: " + std::to_string(i));

  fs::create_directories(run.exports());
  const int lo = layer >= 0 ? layer : 0;
  const int hi = layer >= 0 ? layer : net.P();
  for (int p = lo; p <= hi; ++p) {
    hebbnet::Mat sel;
    if (p == 0) {
      sel.resize(indices.size(), ds.dim());
      for (std::size_t i = 0; i < indices.size(); ++i) sel.row(i) = ds.samples.row(indices[i]);
      sel = hebbnet::similarity_matrix(sel);
    } else {
      const auto fm = hebbnet::extract_features(net, ds, p);
      sel = hebbnet::representational_similarity(fm, indices);
    }
    const std::string out =
        (run.exports() / ("similarity_layer" + std::to_string(p) + ".csv")).string();
    write_csv_matrix(out, sel);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_export_features(const std::string& run_dir, int layer, const std::string& data_path,
                        double threshold) {
  RunPaths run{fs::path(run_dir)};
  hebbnet::Network net = hebbnet::Network::load_checkpoint(run.final_checkpoint().string());
  const std::string data = data_path.empty() ? run.data_manifest().string() : data_path;
  const Json manifest = hebbnet::load_json_file(data);
  hebbnet::Dataset ds = load_run_dataset(manifest, fs::path(data).parent_path(), run, false);
  const auto features = hebbnet::reverse_correlation_features(net, ds, layer, threshold);
  const hebbnet::Mat montage =
      hebbnet::feature_montage(features, ds.image_height, ds.image_width);
  fs::create_directories(run.exports());
  const std::string out =
      (run.exports() / ("features_layer" + std::to_string(layer) + ".pgm")).string();
  hebbnet::write_pgm(out, montage);
  int active = 0;
  for (const auto& f : features) active += f.active ? 1 : 0;
  std::cout << "wrote " << out << " (" << active << "/" << features.size()
            << " neurons responded)\n";
  return 0;
}

int cmd_export_trace(const std::string& run_dir, const std::string& data_path, long sample,
                     const std::string& out_path) {
  RunPaths run{fs::path(run_dir)};
  hebbnet::Network net = hebbnet::Network::load_checkpoint(run.final_checkpoint().string());
  const std::string data = data_path.empty() ? run.data_manifest().string() : data_path;
  const Json manifest = hebbnet::load_json_file(data);
  hebbnet::Dataset ds = load_run_dataset(manifest, fs::path(data).parent_path(), run, false);
  if (sample < 0 || sample >= ds.size())
    throw hebbnet::InvalidInputError("sample index out of range");
  std::vector<hebbnet::TraceRow> trace;
  hebbnet::run_to_fixed_point(ds.samples.row(sample).transpose(), net.weights(),
                              net.config().activations, net.config().gamma,
                              net.config().dynamics, &trace);
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw hebbnet::IoError("cannot write file: " + out_path);
  f << "iteration,energy,max_residual\n";
  f.precision(12);
  for (const auto& row : trace) f << row.iter << "," << row.energy << "," << row.max_residual << "\n";
  std::cout << "wrote " << out_path << " (" << trace.size() << " steps)\n";
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, int count) {
  hebbnet::SuiteResult res;
  if (suite == "lyapunov")
    res = hebbnet::verify_lyapunov(count > 0 ? count : 100, seed);
  else if (suite == "duality")
    res = hebbnet::verify_duality(count > 0 ? count : 50, seed);
  else if (suite == "gradients")
    res = hebbnet::verify_gradients(count > 0 ? count : 20, seed);
  else if (suite == "oracle")
    res = hebbnet::verify_fixed_point_oracle(seed);
  else
    throw hebbnet::UsageError("unknown suite: " + suite +
                              " (want lyapunov|duality|gradients|oracle)");
  std::cout << "suite " << res.name << ": " << (res.pass ? "PASS" : "FAIL")
            << "  measured=" << res.measured << "  limit=" << res.limit << "  ["
            << res.seconds << "s]\n"
            << res.details << "\n";
  return res.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured and deep Hebbian/anti-Hebbian networks"};
  app.require_subcommand(1);

  auto* init = app.add_subcommand("init-config", "write a preset config");
  std::string preset = "custom", init_out = "config.json", init_data_out;
  init->add_option("--preset", preset, "toy61|faces62|mnist63|custom");
  init->add_option("--out", init_out, "config output path");
  init->add_option("--data-out", init_data_out, "data manifest output path");

  auto* train = app.add_subcommand("train", "train a network");
  std::string train_config, train_data, train_out, train_resume;
  int train_threads = 0, checkpoint_every = 1;
  train->add_option("--config", train_config)->required();
  train->add_option("--data", train_data)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--threads", train_threads, "worker cap (0 = all cores)");
  train->add_option("--checkpoint-every", checkpoint_every, "epochs between checkpoints");

  auto* evalc = app.add_subcommand("eval-classify", "linear classification on features");
  std::string ec_run, ec_train, ec_test;
  int ec_layer = 1, ec_epochs = 10;
  double ec_l2 = 1e-4;
  std::uint64_t ec_seed = 7;
  evalc->add_option("--run", ec_run)->required();
  evalc->add_option("--layer", ec_layer);
  evalc->add_option("--train", ec_train)->required();
  evalc->add_option("--test", ec_test)->required();
  evalc->add_option("--epochs", ec_epochs);
  evalc->add_option("--l2", ec_l2);
  evalc->add_option("--seed", ec_seed);
  bool ec_export_features = false;
  evalc->add_flag("--export-features", ec_export_features, "also write feature matrices");

  auto* exsim = app.add_subcommand("export-similarity", "similarity matrices as CSV");
  std::string es_run, es_indices, es_data;
  int es_layer = -1;
  exsim->add_option("--run", es_run)->required();
  exsim->add_option("--indices", es_indices)->required();
  exsim->add_option("--data", es_data, "defaults to the run's data manifest");
  exsim->add_option("--layer", es_layer, "single layer (default: all)");

  auto* exfeat = app.add_subcommand("export-features", "reverse-correlation features as PGM");
  std::string ef_run, ef_data;
  int ef_layer = 1;
  double ef_threshold = 0.0;
  exfeat->add_option("--run", ef_run)->required();
  exfeat->add_option("--layer", ef_layer);
  exfeat->add_option("--data", ef_data);
  exfeat->add_option("--threshold", ef_threshold, "mask threshold on normalized pixel weight");

  auto* extrace = app.add_subcommand("export-trace", "per-step dynamics trace as CSV");
  std::string et_run, et_data, et_out = "trace.csv";
  long et_sample = 0;
  extrace->add_option("--run", et_run)->required();
  extrace->add_option("--data", et_data);
  extrace->add_option("--sample", et_sample);
  extrace->add_option("--out", et_out);

  auto* verify = app.add_subcommand("verify", "run property suites");
  std::string vf_suite;
  std::uint64_t vf_seed = 0;
  int vf_count = 0;
  verify->add_option("--suite", vf_suite)->required();
  verify->add_option("--seed", vf_seed, "override suite seed");
  verify->add_option("--count", vf_count, "override instance count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      Json err{{"error", "usage"}, {"message", e.what()}};
      std::cerr << err.dump() << "\n";
    }
    return app.exit(e);
  }

  try {
    if (init->parsed()) return cmd_init_config(preset, init_out, init_data_out);
    if (train->parsed())
      return cmd_train(train_config, train_data, train_out, train_resume, train_threads,
                       checkpoint_every);
    if (evalc->parsed())
      return cmd_eval_classify(ec_run, ec_layer, ec_train, ec_test, ec_epochs, ec_l2,
                               ec_seed, ec_export_features);
    if (exsim->parsed()) return cmd_export_similarity(es_run, es_indices, es_data, es_layer);
    if (exfeat->parsed()) return cmd_export_features(ef_run, ef_layer, ef_data, ef_threshold);
    if (extrace->parsed()) return cmd_export_trace(et_run, et_data, et_sample, et_out);
    if (verify->parsed()) {
      std::uint64_t seed = vf_seed;
      if (seed == 0) {
        seed = vf_suite == "lyapunov" ? 101 : vf_suite == "duality" ? 202
               : vf_suite == "gradients" ? 303 : 404;
      }
      return cmd_verify(vf_suite, seed, vf_count);
    }
  } catch (const hebbnet::Error& e) {
    Json err{{"error", e.error_class()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    Json err{{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
