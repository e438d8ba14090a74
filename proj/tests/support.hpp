#pragma once

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "forgenet/error.hpp"
#include "forgenet/random.hpp"
#include "forgenet/tensor.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("forgenet_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& child) const { return path_ / child; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

template <typename T>
forgenet::BasicTensor4<T> random_tensor(forgenet::Rng& rng, const forgenet::Shape4& shape,
                                        double lo = -1.0, double hi = 1.0) {
  forgenet::BasicTensor4<T> t(shape);
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
std::vector<T> random_vector(forgenet::Rng& rng, std::size_t n, double lo = -1.0,
                             double hi = 1.0) {
  std::vector<T> v(n);
  for (T& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return v;
}

// Central difference of f with respect to *slot.
inline double central_difference(double* slot, const std::function<double()>& f,
                                 double step = 1e-4) {
  const double saved = *slot;
  *slot = saved + step;
  const double plus = f();
  *slot = saved - step;
  const double minus = f();
  *slot = saved;
  return (plus - minus) / (2.0 * step);
}

// |a-b| / max(|a|, |b|, floor). The floor keeps near-zero components from
// blowing up the ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

// Asserts that `body` throws forgenet::Error of `kind` whose message
// contains `fragment`.
template <typename F>
void expect_error(forgenet::ErrorKind kind, F&& body, const std::string& fragment = "") {
  try {
    body();
    ADD_FAILURE() << "expected " << forgenet::to_string(kind) << " error";
  } catch (const forgenet::Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
    if (!fragment.empty()) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos)
          << "message '" << e.what() << "' lacks '" << fragment << "'";
    }
  }
}

}  // namespace testsupport
