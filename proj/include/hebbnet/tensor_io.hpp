#pragma once

// Minimal named-tensor container sharing the checkpoint conventions:
// magic + version, then per tensor a name, shape and row-major
// little-endian f64 data. Used for feature-matrix and classifier exports.

#include "hebbnet/common.hpp"

#include <fstream>
#include <map>
#include <string>

namespace hebbnet {

inline void write_tensor_file(const std::string& path, const std::map<std::string, Mat>& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write tensor file: " + path);
  f.write("HBNTENS1", 8);
  write_u32_le(f, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    write_u32_le(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64_le(f, static_cast<std::uint64_t>(m.rows()));
    write_u64_le(f, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64_le(f, m(i, j));
  }
  if (!f) throw IoError("failed writing tensor file: " + path);
}

inline std::map<std::string, Mat> read_tensor_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open tensor file: " + path);
  char magic[8] = {};
  f.read(magic, 8);
  if (f.gcount() != 8 || std::memcmp(magic, "HBNTENS1", 8) != 0)
    throw CorruptFileError("not a tensor file: " + path);
  const std::uint32_t count = read_u32_le(f);
  std::map<std::string, Mat> out;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = read_u32_le(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const std::uint64_t rows = read_u64_le(f);
    const std::uint64_t cols = read_u64_le(f);
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = read_f64_le(f);
    if (!f) throw CorruptFileError("truncated tensor file: " + path);
    out.emplace(std::move(name), std::move(m));
  }
  return out;
}

}  // namespace hebbnet
