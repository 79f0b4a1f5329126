#pragma once

// Experiment driver: single runs, BC-RC vs BC-FRC comparisons on an
// identical workload, and seed sweeps.

#include <atomic>
#include <charconv>
#include <thread>

#include "fairledger/checker.hpp"
#include "fairledger/simulation.hpp"

namespace fairledger {

struct RunResult {
  Scenario scenario;
  Trace trace;
  CheckReport report;
};

inline RunResult run_scenario(const Scenario& s, CheckOptions options = {}) {
  RunResult r{s, simulate(s), {}};
  r.report = check_trace(r.trace, options);
  return r;
}

struct Comparison {
  RunResult bcrc;
  RunResult bcfrc;

  int exit_code() const { return std::max(bcrc.report.exit_code(), bcfrc.report.exit_code()); }
};

/// Runs the same scenario under both constructions. The scenario must leave
/// the construction open.
inline Comparison compare_scenario(Scenario s, CheckOptions options = {}) {
  if (s.construction) {
    throw ConfigError("construction", "compare needs a scenario without a construction");
  }
  Comparison c;
  s.construction = Construction::bcrc;
  c.bcrc = run_scenario(s, options);
  s.construction = Construction::bcfrc;
  c.bcfrc = run_scenario(s, options);
  return c;
}

inline Json encode(const Comparison& c) {
  Json j;
  j["name"] = c.bcrc.scenario.name;
  j["seed"] = c.bcrc.scenario.seed;
  Json table = Json::array();
  auto cell = [](const TxFate* f) {
    Json x;
    x["fate"] = f ? std::string(to_string(f->kind)) : "absent";
    x["instance"] = f && f->instance ? Json(*f->instance) : Json();
    return x;
  };
  std::set<TxId> ids;
  for (const auto& f : c.bcrc.report.fates) ids.insert(f.id);
  for (const auto& f : c.bcfrc.report.fates) ids.insert(f.id);
  for (const auto& id : ids) {
    Json row;
    row["tx"] = to_string(id);
    row["bcrc"] = cell(c.bcrc.report.fate(id));
    row["bcfrc"] = cell(c.bcfrc.report.fate(id));
    table.push_back(std::move(row));
  }
  j["fates"] = std::move(table);
  Json props = Json::array();
  for (const auto& v : c.bcrc.report.verdicts) {
    Json row;
    row["property"] = v.property;
    row["bcrc"] = std::string(to_string(v.status));
    row["bcfrc"] = std::string(to_string(c.bcfrc.report.get(v.property).status));
    props.push_back(std::move(row));
  }
  j["properties"] = std::move(props);
  j["bcrc_report"] = encode(c.bcrc.report);
  j["bcfrc_report"] = encode(c.bcfrc.report);
  return j;
}

/// Parses "a..b" (inclusive) or a single seed.
inline std::vector<std::uint64_t> parse_seed_range(std::string_view text) {
  auto number = [&](std::string_view part) {
    std::uint64_t v{};
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ConfigError("--seeds", "expected a..b, got '" + std::string(text) + "'");
    }
    return v;
  };
  const auto dots = text.find("..");
  const std::uint64_t a = number(text.substr(0, dots));
  const std::uint64_t b = dots == std::string_view::npos ? a : number(text.substr(dots + 2));
  if (b < a) throw ConfigError("--seeds", "empty range '" + std::string(text) + "'");
  std::vector<std::uint64_t> seeds;
  for (auto s = a; s <= b; ++s) seeds.push_back(s);
  return seeds;
}

struct SweepResult {
  std::vector<std::uint64_t> seeds;
  std::vector<CheckReport> reports;

  int exit_code() const {
    int code = 0;
    for (const auto& r : reports) {
      const int c = r.exit_code();
      if (c == 1) return 1;
      code = std::max(code, c);
    }
    return code;
  }

  /// Number of seeds whose verdict for `property` is `status`.
  std::size_t count(std::string_view property, VerdictStatus status) const {
    return static_cast<std::size_t>(std::count_if(reports.begin(), reports.end(), [&](const auto& r) {
      return r.get(property).status == status;
    }));
  }
};

/// Runs `base` once per seed. Runs share nothing, so they are spread over
/// `threads` workers; results come back in seed order.
template <class OnRun>
SweepResult sweep_scenario(const Scenario& base, const std::vector<std::uint64_t>& seeds,
                           CheckOptions options, unsigned threads, OnRun on_run) {
  SweepResult out;
  out.seeds = seeds;
  out.reports.resize(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < seeds.size(); k = next++) {
      try {
        Scenario s = base;
        s.seed = seeds[k];
        auto r = run_scenario(s, options);
        on_run(r);
        out.reports[k] = std::move(r.report);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline SweepResult sweep_scenario(const Scenario& base, const std::vector<std::uint64_t>& seeds,
                                  CheckOptions options = {},
                                  unsigned threads = std::thread::hardware_concurrency()) {
  return sweep_scenario(base, seeds, options, threads, [](const RunResult&) {});
}

inline Json encode(const SweepResult& s) {
  Json j;
  j["seeds"] = s.seeds.size();
  Json props = Json::array();
  for (const char* p : kProperties) {
    Json row;
    row["property"] = p;
    for (auto st : {VerdictStatus::pass, VerdictStatus::violation, VerdictStatus::inconclusive,
                    VerdictStatus::not_applicable}) {
      row[std::string(to_string(st))] = s.count(p, st);
    }
    props.push_back(std::move(row));
  }
  j["properties"] = std::move(props);
  Json bad = Json::array();
  for (std::size_t k = 0; k < s.reports.size(); ++k) {
    if (s.reports[k].exit_code() == 1) bad.push_back(s.seeds[k]);
  }
  j["violating_seeds"] = std::move(bad);
  j["exit_code"] = s.exit_code();
  return j;
}

}  // namespace fairledger
