#pragma once

// Dataset manifests: small JSON files describing where a dataset comes from
// and how to preprocess it, so runs are reproducible from two files (config
// + data manifest). Paths are resolved relative to the manifest's directory.
//
//   {"type":"synth_clusters","seed":1,
//    "clusters":[{"mean":[...],"sigma":0.05,"count":300}, ...]}
//   {"type":"idx","images":"train-images-idx3-ubyte","labels":"...","limit":10000}
//   {"type":"pgm_dir","dir":"faces","side":64}
//
// plus an optional {"preprocess":{"mean_subtract":"per_pixel"|"per_sample"}}.

#include "hebbnet/common.hpp"
#include "hebbnet/data.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace hebbnet {

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open file: " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

inline Dataset dataset_from_manifest(const nlohmann::json& m,
                                     const std::filesystem::path& base_dir) {
  const std::string type = m.at("type").get<std::string>();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base_dir / fp).string();
  };
  Dataset d;
  if (type == "synth_clusters") {
    std::vector<ClusterSpec> specs;
    for (const auto& cj : m.at("clusters")) {
      ClusterSpec cs;
      const auto mean = cj.at("mean").get<std::vector<double>>();
      cs.mean = Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(mean.size()));
      cs.sigma = cj.value("sigma", 0.0);
      cs.count = cj.at("count").get<int>();
      specs.push_back(std::move(cs));
    }
    d = synth_clusters(specs, m.value("seed", 1ULL));
  } else if (type == "idx") {
    d = load_idx(resolve(m.at("images").get<std::string>()),
                 resolve(m.at("labels").get<std::string>()));
  } else if (type == "pgm_dir") {
    d = load_image_dir(resolve(m.at("dir").get<std::string>()), m.at("side").get<int>());
  } else {
    throw ConfigError("unknown dataset manifest type: " + type);
  }
  if (m.contains("limit")) {
    const long limit = m.at("limit").get<long>();
    require(limit >= 1, "manifest: limit must be >= 1");
    if (limit < d.size()) {
      Dataset cut;
      cut.samples = d.samples.topRows(limit);
      if (d.has_labels()) cut.labels.assign(d.labels.begin(), d.labels.begin() + limit);
      cut.image_height = d.image_height;
      cut.image_width = d.image_width;
      cut.provenance = d.provenance + " limit=" + std::to_string(limit);
      d = std::move(cut);
    }
  }
  return d;
}

inline std::optional<MeanSubtract> preprocessor_from_manifest(const nlohmann::json& m) {
  if (!m.contains("preprocess")) return std::nullopt;
  const auto& pj = m.at("preprocess");
  if (!pj.contains("mean_subtract")) return std::nullopt;
  const std::string scope = pj.at("mean_subtract").get<std::string>();
  if (scope == "none") return std::nullopt;
  if (scope == "per_sample") return MeanSubtract(MeanSubtract::Scope::PerSample);
  if (scope == "per_pixel") return MeanSubtract(MeanSubtract::Scope::PerPixel);
  throw ConfigError("unknown mean_subtract scope: " + scope);
}

inline nlohmann::json preprocessor_to_json(const MeanSubtract& ms) {
  nlohmann::json j;
  j["scope"] = ms.scope() == MeanSubtract::Scope::PerSample ? "per_sample" : "per_pixel";
  if (ms.scope() == MeanSubtract::Scope::PerPixel) {
    std::vector<double> mean(ms.pixel_mean().data(), ms.pixel_mean().data() + ms.pixel_mean().size());
    j["pixel_mean"] = mean;
  }
  return j;
}

inline MeanSubtract preprocessor_from_stats(const nlohmann::json& j) {
  const std::string scope = j.at("scope").get<std::string>();
  if (scope == "per_sample") {
    MeanSubtract ms(MeanSubtract::Scope::PerSample);
    ms.fit(Dataset{});
    return ms;
  }
  MeanSubtract ms(MeanSubtract::Scope::PerPixel);
  const auto mean = j.at("pixel_mean").get<std::vector<double>>();
  ms.set_pixel_mean(Eigen::Map<const Vec>(mean.data(), static_cast<Eigen::Index>(mean.size())));
  return ms;
}

}  // namespace hebbnet
