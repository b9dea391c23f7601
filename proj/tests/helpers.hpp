#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "chargepred/numerics.hpp"

namespace testing {

using chargepred::Index;
using chargepred::Matrix;
using chargepred::Vector;

inline Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Vector<double> random_probs(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector<double> x(n);
  for (Index i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("chargepred_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testing
