// Command-line harness: run scenario files, validate them, batch directories.
//
// Exit codes: 0 every invariant passed; 1 some invariant failed; 2 the
// scenario failed validation; 3 the report carried no invariants; 4 a
// construction died at runtime (budget exhaustion and friends).

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "eqdensity/scenario.hpp"
#include "eqdensity/types.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  eqd::Nat horizon = 0;  // 0 keeps the scenario's own value
  eqd::Nat budget = 0;
  std::string out;  // overrides everything when set
  std::string format = "json";
  unsigned jobs = 1;
};

std::string resolve_out(const Options& opt, const eqd::Scenario& s) {
  if (!opt.out.empty()) return opt.out;
  if (const char* env = std::getenv("EQDENSITY_OUT"); env && *env) return env;
  if (!s.out.empty()) return s.out;
  return "reports";
}

eqd::ReportFormat parse_format(const std::string& f) {
  if (f == "json") return eqd::ReportFormat::Json;
  if (f == "csv-bundle") return eqd::ReportFormat::CsvBundle;
  throw eqd::ValidationError("unknown format '" + f + "' (json | csv-bundle)");
}

// 0 pass, 1 fail, 2 validation, 3 empty, 4 runtime
int run_one(const std::string& path, const Options& opt, std::ostream& log) {
  eqd::Scenario s;
  try {
    s = eqd::load_scenario(path);
  } catch (const eqd::ValidationError& e) {
    log << path << ": validation: " << e.what() << "\n";
    return 2;
  } catch (const eqd::Error& e) {
    log << path << ": " << e.what() << "\n";
    return 4;
  }
  if (opt.horizon) s.horizon = opt.horizon;
  if (opt.budget) s.budget = opt.budget;

  eqd::Report r;
  try {
    r = eqd::run_scenario(s);
  } catch (const eqd::ValidationError& e) {
    log << s.name << ": validation: " << e.what() << "\n";
    return 2;
  } catch (const eqd::Error& e) {
    log << s.name << ": runtime: " << e.what() << "\n";
    return 4;
  }

  for (const auto& c : r.checks)
    log << (c.pass ? "PASS " : "FAIL ") << s.name << ": " << c.invariant << " ["
        << c.measured << "]\n";
  for (const auto& w : r.warnings) log << "warn " << s.name << ": " << w << "\n";

  auto written = eqd::emit_report(r, resolve_out(opt, s), parse_format(opt.format));
  for (const auto& p : written) log << "wrote " << p << "\n";

  if (r.checks.empty()) {
    log << s.name << ": no invariants, certificates only\n";
    return 3;
  }
  return r.all_pass() ? 0 : 1;
}

int run_batch(const std::string& dir, const Options& opt) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json")
      files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "no scenario files in " << dir << "\n";
    return 2;
  }

  std::mutex io;
  std::atomic<std::size_t> next{0};
  std::vector<int> codes(files.size(), 0);
  const unsigned jobs = std::max(1u, opt.jobs);

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < files.size();
         i = next.fetch_add(1)) {
      std::ostringstream local;
      codes[i] = run_one(files[i], opt, local);
      std::lock_guard<std::mutex> lock(io);
      std::cout << local.str();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int worst = 0;
  std::size_t passed = 0;
  for (int c : codes) {
    worst = std::max(worst, c);
    if (c == 0) ++passed;
  }
  std::cout << passed << " of " << files.size() << " scenarios fully passed\n";
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-horizon experiments on equivalence structures"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--horizon", opt.horizon, "override the scenario horizon");
  app.add_option("--budget", opt.budget, "override the scenario budget");
  app.add_option("--out", opt.out, "output directory (beats EQDENSITY_OUT)");
  app.add_option("--format", opt.format, "report format: json | csv-bundle");
  app.add_option("--jobs", opt.jobs, "concurrent scenarios for batch");

  std::string path;
  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("file", path, "scenario JSON file")->required();

  std::string dir;
  auto* batch = app.add_subcommand("batch", "run every scenario in a directory");
  batch->add_option("dir", dir, "directory of scenario JSON files")->required();

  auto* list = app.add_subcommand("list-constructions", "print known ids");

  std::string vpath;
  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("file", vpath, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& id : eqd::known_constructions()) std::cout << id << "\n";
      return 0;
    }
    if (*validate) {
      eqd::Scenario s;
      try {
        s = eqd::load_scenario(vpath);
      } catch (const eqd::ValidationError& e) {
        std::cout << e.what() << "\n";
        return 2;
      }
      auto problems = eqd::validate_scenario(s);
      if (problems.empty()) {
        std::cout << s.name << ": ok\n";
        return 0;
      }
      for (const auto& p : problems) std::cout << p << "\n";
      return 2;
    }
    if (*run) return run_one(path, opt, std::cout);
    if (*batch) return run_batch(dir, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
