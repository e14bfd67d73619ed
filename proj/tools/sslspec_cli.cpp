// Command-line driver for the named experiments.
//
//   sslspec --experiment vicreg-spectrum --param N=256 --param K=32 --out results/spectrum
//   sslspec --spec run.json
//   sslspec --list

#include <sslspec/experiments.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

int list_experiments() {
  for (const auto& n : sslspec::registered_experiments()) std::cout << n << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral analysis of self-supervised losses: named experiments"};
  std::string experiment, out, spec_file;
  std::vector<std::string> params;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool list = false;
  app.add_option("--experiment,-e", experiment, "experiment name");
  app.add_option("--param,-p", params, "k=v parameter (repeatable)")->allow_extra_args(false);
  app.add_option("--out,-o", out, "output directory for CSV files and summary.json");
  auto* seed_opt = app.add_option("--seed,-s", seed, "base seed; run i uses seed + i");
  app.add_option("--spec", spec_file, "JSON experiment spec")->check(CLI::ExistingFile);
  app.add_option("--jobs,-j", jobs, "worker threads across sweep points")->check(CLI::PositiveNumber);
  app.add_flag("--list", list, "print registered experiment names");
  CLI11_PARSE(app, argc, argv);

  if (list) return list_experiments();
  sslspec::ExperimentSpec spec;
  try {
    if (!spec_file.empty()) {
      std::ifstream f(spec_file);
      spec = sslspec::spec_from_json(sslspec::json::parse(f));
    }
    if (!experiment.empty()) spec.name = experiment;
    if (spec.name.empty()) {
      std::cerr << "error: --experiment or --spec is required; registered experiments:\n";
      for (const auto& n : sslspec::registered_experiments()) std::cerr << "  " << n << "\n";
      return 2;
    }
    for (const auto& kv : params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        std::cerr << "error: --param expects k=v, got '" << kv << "'\n";
        return 2;
      }
      spec.params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!out.empty()) spec.output_dir = out;
    if (seed_opt->count()) spec.seed = seed;
    if (app.count("--jobs")) spec.jobs = jobs;

    const auto t0 = std::chrono::steady_clock::now();
    const sslspec::ExperimentReport r = sslspec::run(spec);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& c : r.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  measured=" << sslspec::format_number(c.measured)
                << " " << c.relation << " " << sslspec::format_number(c.threshold) << "\n";
    std::cout << r.name << ": " << (r.passed() ? "all checks passed" : "checks failed") << " (" << secs << " s)";
    if (!spec.output_dir.empty()) std::cout << ", wrote " << r.files.size() + 1 << " files to " << spec.output_dir;
    std::cout << "\n";
    return r.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
