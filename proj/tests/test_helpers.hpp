#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>

#include "dnsabuse/timeutil.hpp"

namespace testing {

inline std::filesystem::path fixture(std::string_view name) {
  return std::filesystem::path(DNSABUSE_FIXTURE_DIR) / name;
}

inline dnsabuse::Timestamp ts(std::string_view iso) {
  auto t = dnsabuse::parse_iso8601(iso);
  if (!t) throw std::runtime_error("bad test timestamp " + std::string(iso));
  return *t;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("dnsabuse-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write(std::string_view name, std::string_view content) const {
    auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
