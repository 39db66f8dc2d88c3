#ifndef PRIORCLEAN_TEST_UTIL_HPP_
#define PRIORCLEAN_TEST_UTIL_HPP_

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "priorclean/inject.hpp"
#include "priorclean/synth.hpp"
#include "priorclean/table.hpp"

namespace testutil {

inline priorclean::Table blobs(size_t rows = 120, size_t numeric = 4, uint64_t seed = 7,
                               double separation = 3.0, size_t classes = 2) {
  priorclean::BlobSpec s;
  s.rows = rows;
  s.numeric = numeric;
  s.seed = seed;
  s.separation = separation;
  s.classes = classes;
  return priorclean::make_blobs(s);
}

inline priorclean::Table mcar(const priorclean::Table& t, double rate = 0.15, uint64_t seed = 42) {
  return priorclean::inject_mcar(t, rate, seed);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pc_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

}  // namespace testutil

#endif  // PRIORCLEAN_TEST_UTIL_HPP_
