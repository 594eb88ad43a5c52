#pragma once

// Shared helpers for the test suites: quadrature, tiny dense references,
// temp directories.

#include "hebbnet/hebbnet.hpp"

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

namespace hebbnet::test {

// Composite Simpson quadrature, used as the independent oracle for
// regularizer values.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2 != 0) n++;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  return s * h / 3.0;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("hebbnet_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace hebbnet::test
