// Command-line front end: run, compare, sweep, check.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "fairledger/harness.hpp"

namespace fs = std::filesystem;
using namespace fairledger;

namespace {

constexpr int kConfigExit = 3;
constexpr int kTraceExit = 4;
constexpr int kInternalExit = 5;

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void print_report(std::ostream& os, const CheckReport& r) {
  for (const auto& v : r.verdicts) {
    os << "  " << std::left << std::setw(20) << v.property << std::setw(22) << to_string(v.status);
    if (!v.detail.empty() && v.status != VerdictStatus::pass) os << v.detail;
    os << '\n';
  }
}

CheckOptions options_from(const std::optional<std::uint64_t>& grace) {
  CheckOptions o;
  o.grace = grace;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blockchain constructions over (fair) repeated consensus: simulator and checker"};
  app.require_subcommand(1);

  std::string config;
  std::string trace_path;
  std::string out_dir = "fairledger-out";
  std::string seeds_text;
  std::optional<std::uint64_t> grace;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "Directory for traces and reports");
    cmd->add_option("--grace", grace, "Decided instances after universal receipt before a pending tx counts as starved")
        ->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Simulate one scenario, write its trace and check it");
  run->add_option("config", config, "Scenario file")->required();
  add_common(run);

  auto* compare = app.add_subcommand("compare", "Run one scenario under bcrc and bcfrc");
  compare->add_option("config", config, "Scenario file without a construction")->required();
  add_common(compare);

  auto* sweep = app.add_subcommand("sweep", "Run one scenario over a range of seeds");
  sweep->add_option("config", config, "Scenario file")->required();
  sweep->add_option("--seeds", seeds_text, "Inclusive range a..b")->required();
  sweep->add_option("--threads", threads, "Concurrent runs")->check(CLI::PositiveNumber);
  add_common(sweep);

  auto* check = app.add_subcommand("check", "Check a recorded trace");
  check->add_option("trace", trace_path, "Trace file (one event per line)")->required();
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const fs::path out(out_dir);
    if (*run) {
      const auto s = load_scenario(config);
      if (!s.construction) throw ConfigError("construction", "missing (use compare to run both)");
      auto r = run_scenario(s, options_from(grace));
      const auto stem = s.name + "." + std::string(to_string(*s.construction));
      write_file(out / (stem + ".trace.jsonl"), trace_to_string(r.trace));
      write_file(out / (stem + ".report.json"), encode(r.report).dump(2) + "\n");
      std::cout << stem << " seed " << s.seed << ": " << r.trace.size() << " events\n";
      print_report(std::cout, r.report);
      return r.report.exit_code();
    }
    if (*compare) {
      const auto s = load_scenario(config);
      auto c = compare_scenario(s, options_from(grace));
      for (const auto* r : {&c.bcrc, &c.bcfrc}) {
        const auto stem = s.name + "." + std::string(to_string(*r->scenario.construction));
        write_file(out / (stem + ".trace.jsonl"), trace_to_string(r->trace));
      }
      write_file(out / (s.name + ".compare.json"), encode(c).dump(2) + "\n");
      std::cout << std::left << std::setw(12) << "tx" << std::setw(24) << "bcrc" << "bcfrc\n";
      auto show = [](const TxFate* f) {
        if (f == nullptr) return std::string("-");
        std::string text(to_string(f->kind));
        if (f->instance) text += " @" + std::to_string(*f->instance);
        return text;
      };
      for (const auto& f : c.bcrc.report.fates) {
        std::cout << std::setw(12) << to_string(f.id) << std::setw(24) << show(&f)
                  << show(c.bcfrc.report.fate(f.id)) << '\n';
      }
      std::cout << "\n" << std::setw(20) << "property" << std::setw(22) << "bcrc" << "bcfrc\n";
      for (const auto& v : c.bcrc.report.verdicts) {
        std::cout << std::setw(20) << v.property << std::setw(22) << to_string(v.status)
                  << to_string(c.bcfrc.report.get(v.property).status) << '\n';
      }
      return c.exit_code();
    }
    if (*sweep) {
      const auto s = load_scenario(config);
      if (!s.construction) throw ConfigError("construction", "missing");
      const auto seeds = parse_seed_range(seeds_text);
      auto result = sweep_scenario(s, seeds, options_from(grace), threads);
      write_file(out / (s.name + ".sweep.json"), encode(result).dump(2) + "\n");
      std::cout << s.name << ": " << seeds.size() << " seeds\n";
      std::cout << std::left << std::setw(20) << "property" << std::setw(8) << "pass" << std::setw(11)
                << "violation" << std::setw(14) << "inconclusive" << "n/a\n";
      for (const char* p : kProperties) {
        std::cout << std::setw(20) << p << std::setw(8) << result.count(p, VerdictStatus::pass)
                  << std::setw(11) << result.count(p, VerdictStatus::violation) << std::setw(14)
                  << result.count(p, VerdictStatus::inconclusive)
                  << result.count(p, VerdictStatus::not_applicable) << '\n';
      }
      return result.exit_code();
    }
    if (*check) {
      const auto trace = read_trace_file(trace_path);
      const auto report = check_trace(trace, options_from(grace));
      write_file(out / (fs::path(trace_path).stem().string() + ".report.json"),
                 encode(report).dump(2) + "\n");
      std::cout << trace_path << ": " << trace.size() << " events\n";
      print_report(std::cout, report);
      return report.exit_code();
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const TraceError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kTraceExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternalExit;
  }
  return kInternalExit;
}
