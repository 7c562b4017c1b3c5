// displab: run experiment configs and presets, summarize reports.
//
// exit status: 0 all non-skipped checks passed, 1 a check failed,
// 2 bad usage, bad config or a run error.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "displab/displab.hpp"

namespace fs = std::filesystem;
namespace ex = displab::experiment;

namespace {

constexpr const char* kOutputDirEnv = "DISPLAB_OUTPUT_DIR";

fs::path output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::current_path();
}

struct Job {
  std::string source;  // file path or preset:<name>
  ex::ExperimentConfig config;
  std::string prefix;
};

std::mutex& prefix_mutex(const std::string& prefix) {
  static std::mutex guard;
  static std::map<std::string, std::mutex> locks;
  std::lock_guard<std::mutex> lock(guard);
  return locks[prefix];
}

// 0, 1 or 2 as documented above.
int run_jobs(std::vector<Job>& jobs, unsigned workers) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> status{0};
  std::mutex print;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      auto& job = jobs[i];
      try {
        const ex::RunReport rep = ex::run_experiment(job.config);
        std::vector<fs::path> files;
        {
          std::lock_guard<std::mutex> lock(prefix_mutex(job.prefix));
          files = ex::emit_outputs(rep, job.prefix);
        }
        std::lock_guard<std::mutex> lock(print);
        std::cout << ex::summary_text(rep);
        std::cout << "  wrote " << files.front().string() << " (+ monitors, limits, timings)\n";
        if (!rep.all_passed()) {
          int expected = 0;
          status.compare_exchange_strong(expected, 1);
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(print);
        std::cerr << job.source << ": " << e.what() << "\n";
        status = 2;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::max(1u, std::min<unsigned>(workers, jobs.size())); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return status;
}

std::string default_prefix(const ex::ExperimentConfig& cfg) {
  return (output_dir() / (cfg.output.empty() ? cfg.name : cfg.output)).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dispersive decay lab: 1D Schrodinger and NLS experiments"};
  app.require_subcommand(1);
  app.footer(std::string("Outputs go to $") + kOutputDirEnv + " (default: current directory) unless --out is given.");

  auto* run = app.add_subcommand("run", "run one or more experiment configs");
  std::vector<std::string> config_paths;
  unsigned jobs = 1;
  std::string out;
  run->add_option("config", config_paths, "config file(s)")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs,-j", jobs, "experiments run in parallel")->check(CLI::PositiveNumber);
  run->add_option("--out,-o", out, "output prefix (single config only)");

  auto* verify = app.add_subcommand("verify", "run a shipped preset");
  std::string preset_name;
  std::string verify_out;
  verify->add_option("preset", preset_name, "preset name (see list-presets)")->required();
  verify->add_option("--out,-o", verify_out, "output prefix");

  auto* report = app.add_subcommand("report", "summarize a saved report");
  std::string report_path;
  report->add_option("report", report_path, "<prefix>.report.json")->required()->check(CLI::ExistingFile);

  auto* list = app.add_subcommand("list-presets", "list shipped presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& p : ex::kPresets) std::cout << p.name << "\t" << p.summary << "\n";
      return 0;
    }
    if (*report) {
      const auto rep = ex::parse_report(ex::read_text(report_path));
      std::cout << ex::summary_text(rep);
      return rep.all_passed() ? 0 : 1;
    }

    std::vector<Job> batch;
    bool bad = false;
    auto add = [&](const std::string& source, const std::string& text, const std::string& prefix) {
      auto parsed = ex::parse_config(text);
      if (!parsed.ok()) {
        for (const auto& e : parsed.errors) std::cerr << source << ": " << e.str() << "\n";
        bad = true;
        return;
      }
      Job j{source, std::move(*parsed.config), prefix};
      if (j.prefix.empty()) j.prefix = default_prefix(j.config);
      batch.push_back(std::move(j));
    };

    if (*verify) {
      const auto* p = ex::find_preset(preset_name);
      if (p == nullptr) {
        std::cerr << "unknown preset '" << preset_name << "'; try list-presets\n";
        return 2;
      }
      add("preset:" + preset_name, std::string(p->text), verify_out);
    } else {
      if (!out.empty() && config_paths.size() > 1) {
        std::cerr << "--out needs a single config\n";
        return 2;
      }
      for (const auto& path : config_paths) add(path, ex::read_text(path), out);
    }
    if (bad) return 2;
    return run_jobs(batch, jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
