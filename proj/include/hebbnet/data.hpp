#pragma once

// Dataset ingestion and synthesis: Gaussian cluster patterns, MNIST-style
// IDX containers, directories of grayscale PGM images, and mean-subtraction
// preprocessing with persistable statistics.

#include "hebbnet/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hebbnet {

struct Dataset {
  Mat samples;              // T x K, one row per sample
  std::vector<int> labels;  // empty, or one label per row
  int image_height = 0;     // set when samples are image-shaped
  int image_width = 0;
  std::string provenance;

  long size() const { return samples.rows(); }
  long dim() const { return samples.cols(); }
  bool has_labels() const { return !labels.empty(); }
  int num_classes() const {
    int m = -1;
    for (int l : labels) m = std::max(m, l);
    return m + 1;
  }

  void validate() const {
    require(all_finite(samples), "dataset: non-finite sample values");
    if (has_labels()) {
      require(static_cast<long>(labels.size()) == size(), "dataset: label count mismatch");
      for (int l : labels)
        require(l >= 0, "dataset: negative label");
    }
  }
};

// ---------------------------------------------------------------------------
// Synthetic Gaussian clusters.

struct ClusterSpec {
  Vec mean;
  double sigma = 0.0;  // isotropic; ignored when cov is set
  Mat cov;             // optional full covariance (symmetric PSD)
  int count = 0;
};

inline Dataset synth_clusters(const std::vector<ClusterSpec>& clusters, std::uint64_t seed) {
  require(!clusters.empty(), "synth_clusters: no clusters");
  const Eigen::Index K = clusters[0].mean.size();
  long total = 0;
  for (const auto& c : clusters) {
    require(c.mean.size() == K, "synth_clusters: mean dimensions differ");
    require(c.count >= 0, "synth_clusters: negative count");
    total += c.count;
  }
  Dataset d;
  d.samples.resize(total, K);
  d.labels.reserve(total);
  Rng rng = make_rng(seed, "synth_clusters");
  long row = 0;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const auto& c = clusters[ci];
    Mat transform;  // maps standard normals to the cluster covariance
    if (c.cov.size() > 0) {
      require(c.cov.rows() == K && c.cov.cols() == K, "synth_clusters: covariance shape");
      if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + c.cov.cwiseAbs().maxCoeff()))
        throw InvalidInputError("synth_clusters: covariance not symmetric");
      Eigen::SelfAdjointEigenSolver<Mat> es(c.cov);
      const Vec evals = es.eigenvalues();
      const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());
      Vec sq(K);
      for (Eigen::Index i = 0; i < K; ++i) {
        if (evals[i] < -1e-10 * scale)
          throw InvalidInputError("synth_clusters: covariance not positive semidefinite");
        sq[i] = std::sqrt(std::max(0.0, evals[i]));
      }
      transform = es.eigenvectors() * sq.asDiagonal();
    }
    for (int n = 0; n < c.count; ++n, ++row) {
      Vec z(K);
      for (Eigen::Index i = 0; i < K; ++i) z[i] = gaussian(rng);
      if (transform.size() > 0)
        d.samples.row(row) = (c.mean + transform * z).transpose();
      else
        d.samples.row(row) = (c.mean + c.sigma * z).transpose();
      d.labels.push_back(static_cast<int>(ci));
    }
  }
  d.provenance = "synth_clusters(seed=" + std::to_string(seed) + ")";
  d.validate();
  return d;
}

// Base vector for ambiguity probes: the midpoint of two cluster means,
// rescaled to their average norm so its dot-product similarity to either
// centroid matches. The 10% agreement property is asserted, not assumed.
inline Vec ambiguous_midpoint(const Vec& m1, const Vec& m2) {
  require(m1.size() == m2.size(), "ambiguous_midpoint: dimension mismatch");
  Vec mid = 0.5 * (m1 + m2);
  const double target = 0.5 * (m1.norm() + m2.norm());
  const double n = mid.norm();
  if (n > 0.0) mid *= target / n;
  const double s1 = mid.dot(m1), s2 = mid.dot(m2);
  const double ref = std::max(std::abs(s1), std::abs(s2));
  if (ref > 0.0 && std::abs(s1 - s2) > 0.1 * ref)
    throw InvalidInputError(
        "ambiguous_midpoint: similarities to the two centroids differ by more than 10%");
  return mid;
}

// ---------------------------------------------------------------------------
// IDX containers (the MNIST distribution format). Integers are big-endian;
// image files carry magic 0x00000803 and three dimensions, label files
// 0x00000801 and one dimension.

namespace detail {
constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline std::ifstream open_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open file: " + path);
  return f;
}

inline void read_exact(std::istream& is, char* buf, std::size_t n, const std::string& path) {
  is.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw CorruptFileError("truncated file: " + path);
}
}  // namespace detail

inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  auto img = detail::open_binary(images_path);
  const std::uint32_t magic = read_u32_be(img);
  if (magic != detail::kIdxImagesMagic)
    throw CorruptFileError("wrong magic in " + images_path + ": expected 0x00000803, got 0x" +
                           [&] { char b[16]; std::snprintf(b, 16, "%08x", magic); return std::string(b); }());
  const std::uint32_t count = read_u32_be(img);
  const std::uint32_t h = read_u32_be(img);
  const std::uint32_t w = read_u32_be(img);
  const std::size_t pixels = static_cast<std::size_t>(count) * h * w;
  std::vector<unsigned char> raw(pixels);
  detail::read_exact(img, reinterpret_cast<char*>(raw.data()), pixels, images_path);

  auto lab = detail::open_binary(labels_path);
  const std::uint32_t lmagic = read_u32_be(lab);
  if (lmagic != detail::kIdxLabelsMagic)
    throw CorruptFileError("wrong magic in " + labels_path + ": expected 0x00000801, got 0x" +
                           [&] { char b[16]; std::snprintf(b, 16, "%08x", lmagic); return std::string(b); }());
  const std::uint32_t lcount = read_u32_be(lab);
  if (lcount != count)
    throw CorruptFileError("image/label count mismatch: " + std::to_string(count) + " images vs " +
                           std::to_string(lcount) + " labels");
  std::vector<unsigned char> lraw(lcount);
  detail::read_exact(lab, reinterpret_cast<char*>(lraw.data()), lcount, labels_path);

  Dataset d;
  d.samples.resize(count, static_cast<Eigen::Index>(h) * w);
  for (std::uint32_t t = 0; t < count; ++t)
    for (std::uint32_t i = 0; i < h * w; ++i)
      d.samples(t, i) = raw[static_cast<std::size_t>(t) * h * w + i] / 255.0;
  d.labels.assign(lraw.begin(), lraw.end());
  d.image_height = static_cast<int>(h);
  d.image_width = static_cast<int>(w);
  d.provenance = "idx(" + images_path + ")";
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// PGM (P5) images.

struct PgmImage {
  int height = 0, width = 0;
  std::vector<unsigned char> pixels;  // row-major
};

namespace detail {
inline int pgm_token(std::istream& is, const std::string& path) {
  // Skips whitespace and '#' comment lines.
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = is.get();
  }
  if (c == EOF) throw CorruptFileError("truncated PGM header: " + path);
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = is.get();
  }
  return value;
}
}  // namespace detail

inline PgmImage read_pgm(const std::string& path) {
  auto f = detail::open_binary(path);
  char m0 = 0, m1 = 0;
  f.get(m0);
  f.get(m1);
  if (m0 != 'P' || m1 != '5') throw CorruptFileError("not a binary PGM (P5): " + path);
  PgmImage img;
  img.width = detail::pgm_token(f, path);
  img.height = detail::pgm_token(f, path);
  const int maxval = detail::pgm_token(f, path);
  if (maxval != 255) throw CorruptFileError("unsupported PGM maxval (want 255): " + path);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  detail::read_exact(f, reinterpret_cast<char*>(img.pixels.data()), img.pixels.size(), path);
  return img;
}

inline void write_pgm(const std::string& path, const Mat& image) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write file: " + path);
  f << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < image.rows(); ++y)
    for (Eigen::Index x = 0; x < image.cols(); ++x) {
      const double v = std::clamp(image(y, x), 0.0, 1.0);
      f.put(static_cast<char>(std::lround(v * 255.0)));
    }
  if (!f) throw IoError("failed writing: " + path);
}

// Loads every *.pgm in a directory as a side x side grayscale image, scaled
// to [0,1]. Files are taken in lexicographic order for determinism.
inline Dataset load_image_dir(const std::string& dir, int side) {
  namespace fs = std::filesystem;
  require(side >= 1, "load_image_dir: side must be >= 1");
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw IoError("empty dataset: no .pgm files in " + dir);
  Dataset d;
  d.samples.resize(static_cast<long>(paths.size()), static_cast<long>(side) * side);
  for (std::size_t t = 0; t < paths.size(); ++t) {
    PgmImage img = read_pgm(paths[t]);
    if (img.height != side || img.width != side)
      throw InvalidInputError("image size mismatch (" + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + ", want " + std::to_string(side) +
                              "^2): " + paths[t]);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      d.samples(static_cast<long>(t), static_cast<long>(i)) = img.pixels[i] / 255.0;
  }
  d.image_height = side;
  d.image_width = side;
  d.provenance = "image_dir(" + dir + ")";
  return d;
}

// ---------------------------------------------------------------------------
// Mean subtraction. PerSample centers each row on its own mean; PerPixel
// subtracts the training set's per-column mean, which is fitted once and
// re-applied to held-out data.

class MeanSubtract {
 public:
  enum class Scope { PerSample, PerPixel };

  explicit MeanSubtract(Scope scope) : scope_(scope) {}

  void fit(const Dataset& train) {
    if (scope_ == Scope::PerPixel) pixel_mean_ = train.samples.colwise().mean().transpose();
    fitted_ = true;
  }

  Dataset apply(const Dataset& d) const {
    if (!fitted_)
      throw UsageError("mean_subtract: transform applied before fitting on training data");
    Dataset out = d;
    if (scope_ == Scope::PerSample) {
      for (long t = 0; t < out.size(); ++t) out.samples.row(t).array() -= out.samples.row(t).mean();
    } else {
      require(d.dim() == pixel_mean_.size(), "mean_subtract: dimension mismatch");
      out.samples.rowwise() -= pixel_mean_.transpose();
    }
    return out;
  }

  // Reconstructs the original data from transformed samples; PerSample needs
  // the removed row means.
  Dataset invert(const Dataset& d, const Vec* row_means = nullptr) const {
    if (!fitted_) throw UsageError("mean_subtract: invert before fitting");
    Dataset out = d;
    if (scope_ == Scope::PerSample) {
      require(row_means != nullptr && row_means->size() == d.size(),
              "mean_subtract: row means required to invert per-sample scope");
      for (long t = 0; t < out.size(); ++t) out.samples.row(t).array() += (*row_means)[t];
    } else {
      out.samples.rowwise() += pixel_mean_.transpose();
    }
    return out;
  }

  Scope scope() const { return scope_; }
  bool fitted() const { return fitted_; }
  const Vec& pixel_mean() const { return pixel_mean_; }
  void set_pixel_mean(Vec m) {
    pixel_mean_ = std::move(m);
    fitted_ = true;
  }

 private:
  Scope scope_;
  bool fitted_ = false;
  Vec pixel_mean_;
};

}  // namespace hebbnet
