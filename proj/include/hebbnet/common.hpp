#pragma once

// Shared numeric aliases, error taxonomy, deterministic RNG helpers and
// little/big-endian binary IO used across the library.

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hebbnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors. Each class carries a stable process exit code for the CLI.

class Error : public std::runtime_error {
 public:
  Error(const std::string& msg, const char* cls, int exit_code)
      : std::runtime_error(msg), cls_(cls), exit_code_(exit_code) {}
  const char* error_class() const { return cls_; }
  int exit_code() const { return exit_code_; }

 private:
  const char* cls_;
  int exit_code_;
};

struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& m) : Error(m, "invalid_input", 10) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(m, "config", 11) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error(m, "domain", 12) {}
};
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& m) : Error(m, "divergence", 13) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(m, "io", 14) {}
};
struct CorruptFileError : Error {
  explicit CorruptFileError(const std::string& m) : Error(m, "corrupt_file", 15) {}
};
struct UsageError : Error {
  explicit UsageError(const std::string& m) : Error(m, "usage", 16) {}
};
struct StaleStateError : Error {
  explicit StaleStateError(const std::string& m) : Error(m, "stale_state", 17) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

// ---------------------------------------------------------------------------
// Deterministic randomness. All draws route through explicit helpers so runs
// are reproducible across standard library implementations. Independent
// streams are derived from (seed, tag, index) so checkpoint/resume only has
// to persist plain counters.

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t h = seed;
  for (char ch : tag) h = splitmix64(h ^ static_cast<std::uint64_t>(ch));
  return splitmix64(h ^ index);
}

inline Rng make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, tag, index));
}

// Uniform in [0,1) with 53 random bits.
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

// Box-Muller; one value per call keeps the stream position independent of
// call parity.
inline double gaussian(Rng& rng) {
  double u1 = uniform_real(rng);
  double u2 = uniform_real(rng);
  while (u1 <= 0.0) u1 = uniform_real(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// ---------------------------------------------------------------------------
// Finite-value checks.

inline bool all_finite(const Vec& v) { return v.allFinite(); }
inline bool all_finite(const Mat& m) { return m.allFinite(); }

// ---------------------------------------------------------------------------
// Endian-explicit binary IO. Tensor blobs are little-endian 64-bit floats;
// the IDX dataset container is big-endian.

namespace detail {
inline void swap_bytes(unsigned char* p, std::size_t n) {
  for (std::size_t i = 0; i + 1 < n - i; ++i) std::swap(p[i], p[n - 1 - i]);
}
template <typename T>
void write_scalar_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) swap_bytes(buf, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}
template <typename T>
T read_scalar_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw CorruptFileError("unexpected end of file while reading scalar");
  if constexpr (std::endian::native == std::endian::big) swap_bytes(buf, sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}
}  // namespace detail

inline void write_u32_le(std::ostream& os, std::uint32_t v) { detail::write_scalar_le(os, v); }
inline void write_u64_le(std::ostream& os, std::uint64_t v) { detail::write_scalar_le(os, v); }
inline void write_f64_le(std::ostream& os, double v) { detail::write_scalar_le(os, v); }
inline std::uint32_t read_u32_le(std::istream& is) { return detail::read_scalar_le<std::uint32_t>(is); }
inline std::uint64_t read_u64_le(std::istream& is) { return detail::read_scalar_le<std::uint64_t>(is); }
inline double read_f64_le(std::istream& is) { return detail::read_scalar_le<double>(is); }

inline std::uint32_t read_u32_be(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw CorruptFileError("unexpected end of file while reading big-endian u32");
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace hebbnet
