#include <iostream>

#include "CLI11.hpp"

#include "coarsel2/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"coarse l2-cohomology experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", coarsel2::kVersion);

  auto* run = app.add_subcommand("run", "run a scenario file and write its report");
  std::string scenario;
  coarsel2::RunOptions opts;
  std::string cache_dir, out;
  std::size_t cap = 0;
  bool quiet = false;
  run->add_option("scenario", scenario, "scenario JSON file")->required();
  run->add_option("--jobs,-j", opts.jobs, "worker threads")->check(CLI::Range(1, 256));
  run->add_option("--cache-dir", cache_dir,
                  std::string("operator cache directory (default: $") + coarsel2::kCacheEnv + ")");
  run->add_option("--tuple-cap", cap, "maximum tuples per tuple space")->check(CLI::PositiveNumber);
  run->add_option("--out,-o", out, "report path (default: the scenario's \"output\" field)");
  run->add_flag("--quiet,-q", quiet, "do not echo the report to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (!cache_dir.empty()) opts.cache_dir = cache_dir;
  if (cap) opts.tuple_cap = cap;
  if (!out.empty()) opts.out = out;

  coarsel2::RunResult r;
  try {
    r = coarsel2::run_file(scenario, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!quiet) std::cout << r.report.dump(2) << "\n";
  if (!r.diagnostics.empty()) std::cerr << r.diagnostics;
  return r.exit_code;
}
