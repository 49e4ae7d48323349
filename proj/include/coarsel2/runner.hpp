#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coarsel2/io.hpp"

namespace coarsel2 {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kScenarioSchema = "coarsel2.scenario/1";
inline constexpr const char* kReportSchema = "coarsel2.report/1";
inline constexpr const char* kCacheEnv = "COARSEL2_CACHE_DIR";

// Content-addressed store of assembled Laplacians keyed by group, window,
// degree and scale. Entries carry a SHA-256 checksum; a corrupt entry is
// rebuilt and reported.
class OperatorCache {
 public:
  explicit OperatorCache(std::filesystem::path dir);

  Laplacian laplacian(const WindowPtr& window, int degree, int scale, std::size_t cap);
  std::string key(const Window& window, int degree, int scale) const;
  std::filesystem::path entry_path(const std::string& key) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t rebuilt() const { return rebuilt_; }
  std::vector<std::string> warnings() const;

 private:
  std::optional<SparseMatrix> load(const std::filesystem::path& path, std::size_t rows,
                                   std::string& problem) const;
  void store(const std::filesystem::path& path, const SparseMatrix& m) const;

  std::filesystem::path dir_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> rebuilt_{0};
  mutable std::mutex mutex_;
  std::vector<std::string> warnings_;
};

struct RunOptions {
  int jobs = 1;
  std::optional<std::filesystem::path> cache_dir;  // falls back to $COARSEL2_CACHE_DIR
  std::optional<std::size_t> tuple_cap;
  std::optional<std::filesystem::path> out;
};

struct RunResult {
  Json report;
  int exit_code = 0;  // 0 all checks pass, 1 a check failed, 2 invalid scenario
  std::string diagnostics;
};

// Runs a parsed scenario; relative paths resolve against base_dir.
RunResult run_scenario(const Json& scenario, const std::filesystem::path& base_dir,
                       const RunOptions& opts = {});
// Reads the scenario, runs it and writes the report (atomically) to
// opts.out, the scenario's "output" field, or nowhere.
RunResult run_file(const std::filesystem::path& scenario_path, const RunOptions& opts = {});

// SHA-256 over the canonical dump of the report without "run_info" and
// "fingerprint".
std::string report_fingerprint(const Json& report);
std::string sha256_hex(const std::string& bytes);

// Write to a sibling temporary file, then rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Evaluates fn(0..count-1) on up to `jobs` threads and returns the results
// in index order. The first exception by index is rethrown.
std::vector<Json> parallel_map(std::size_t count, int jobs,
                               const std::function<Json(std::size_t)>& fn);

}  // namespace coarsel2
