// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include <unistd.h>

#include "oracle/direct_properties.hpp"
#include "oracle/micro_space.hpp"
#include "workloads.hpp"

using namespace fairledger;
namespace fs = std::filesystem;

namespace {

const unsigned kThreads = std::max(1u, std::thread::hardware_concurrency());

/// Calls fn(k) for k in [0, count) on all cores.
template <class Fn>
void parallel_for(std::size_t count, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::min<std::size_t>(kThreads, count); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bool all_passed = true;

void report(int id, bool ok, const std::string& what, double secs, double target = 0) {
  const bool in_time = target <= 0 || secs < target;
  ok = ok && in_time;
  all_passed = all_passed && ok;
  std::ostringstream time;
  time.precision(2);
  time << std::fixed << secs << " s";
  if (target > 0) time << ", target < " << static_cast<int>(target) << " s";
  std::cout << "criterion " << id << "  " << (ok ? "PASS" : "FAIL") << "  " << what << "  (" << time.str()
            << ")" << std::endl;
}

// Log-view verdicts of every BC-FRC run, tallied for criterion 6.
struct LogTally {
  std::mutex mu;
  std::size_t runs = 0;
  std::size_t violations = 0;
  std::size_t inconclusive = 0;

  void add(const CheckReport& r) {
    std::lock_guard lock(mu);
    ++runs;
    for (const char* p : {"log-safety", "log-validity", "log-finality", "log-user-fairness"}) {
      violations += r.get(p).status == VerdictStatus::violation;
      inconclusive += r.get(p).status == VerdictStatus::inconclusive;
    }
  }
};

// Fusion audit of every BC-FRC run, tallied for criterion 3.
struct FusionTally {
  std::mutex mu;
  std::size_t runs = 0;
  std::size_t blocks = 0;
  std::size_t mismatches = 0;
  std::size_t verdict_violations = 0;

  void add(const RunResult& r) {
    std::size_t audited = 0;
    const auto bad = workloads::audit_decided_blocks(r.trace, &audited);
    std::lock_guard lock(mu);
    ++runs;
    blocks += audited;
    mismatches += bad;
    verdict_violations += r.report.get("fusion-validity").status != VerdictStatus::pass;
  }
};

LogTally log_tally;
FusionTally fusion_tally;

void criterion1() {
  Clock clock;
  constexpr std::size_t kSeeds = 100;
  std::atomic<std::size_t> reproduced{0};
  std::atomic<std::size_t> safety_failures{0};
  parallel_for(kSeeds, [&](std::size_t k) {
    const auto r = run_scenario(workloads::censorship(Construction::bcrc, k + 1));
    bool starved_c0 = false;
    bool starved_other = false;
    for (const auto& f : r.report.fates) {
      if (f.kind != FateKind::starved) continue;
      (f.id.client == ClientId{0} ? starved_c0 : starved_other) = true;
    }
    if (r.report.get("user-fairness").status == VerdictStatus::violation && starved_c0 && !starved_other) {
      ++reproduced;
    }
    for (const char* p : {"agreement", "chain-validity", "chain-finality"}) {
      safety_failures += r.report.get(p).status != VerdictStatus::pass;
    }
  });
  report(1, reproduced == kSeeds && safety_failures == 0,
         "censorship under BC-RC: user-fairness violation starving c0 on " + std::to_string(reproduced) + "/" +
             std::to_string(kSeeds) + " seeds, " + std::to_string(safety_failures) + " safety-family failures",
         clock.seconds(), 10);
}

void criterion2() {
  Clock clock;
  constexpr std::size_t kSeeds = 100;
  constexpr Instance kGrace = 3;
  std::atomic<std::size_t> clean{0};
  std::atomic<std::size_t> late{0};
  std::atomic<std::size_t> txs{0};
  parallel_for(kSeeds, [&](std::size_t k) {
    const auto r = run_scenario(workloads::censorship(Construction::bcfrc, k + 1));
    fusion_tally.add(r);
    log_tally.add(r.report);
    bool ok = r.report.get("user-fairness").status == VerdictStatus::pass;
    for (const auto& f : r.report.fates) {
      ++txs;
      const bool in_time = f.kind == FateKind::finalised && f.instance && f.decided_at_receipt &&
                           *f.instance <= *f.decided_at_receipt + kGrace;
      if (!in_time) {
        ++late;
        ok = false;
      }
    }
    clean += ok;
  });
  report(2, clean == kSeeds && late == 0,
         "user fairness under BC-FRC: " + std::to_string(clean) + "/" + std::to_string(kSeeds) +
             " seeds without violation, " + std::to_string(txs - late) + "/" + std::to_string(txs) +
             " txs finalised within 3 instances of universal receipt",
         clock.seconds(), 30);
}

void criterion3() {
  Clock clock;
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes{{4, 1}, {7, 1}, {7, 2}};
  constexpr std::size_t kSeeds = 50;
  parallel_for(shapes.size() * kSeeds, [&](std::size_t k) {
    const auto [n, f] = shapes[k / kSeeds];
    const auto r = run_scenario(workloads::random_frc(n, f, k % kSeeds + 1));
    fusion_tally.add(r);
    log_tally.add(r.report);
  });
  report(3, fusion_tally.mismatches == 0 && fusion_tally.verdict_violations == 0 && fusion_tally.blocks > 0,
         "fusion validity: " + std::to_string(fusion_tally.blocks) + " decided blocks in " +
             std::to_string(fusion_tally.runs) + " BC-FRC runs (criterion 2 plus n/f in {4/1, 7/1, 7/2} x " +
             std::to_string(kSeeds) + " seeds), " + std::to_string(fusion_tally.mismatches) +
             " certificate or fusion mismatches",
         clock.seconds());
}

void criterion4() {
  Clock clock;
  const KeyRing keys(99);
  std::mt19937_64 rng(2024);
  const FusionModel fm;
  std::size_t ok = 0, total = 0, mutated = 0, flagged = 0;
  for (const bool account : {false, true}) {
    const ValidityModel m =
        account ? ValidityModel(AccountModel({{"a", {20, {}}}, {"b", {5, {}}}, {"c", {0, {}}}}))
                : ValidityModel(SetModel{});
    for (int round = 0; round < 1000; ++round) {
      std::vector<Transaction> universe;
      const auto size = 2 + rng() % 10;
      for (std::uint64_t k = 0; k < size; ++k) {
        const auto client = static_cast<std::uint32_t>(rng() % 4);
        const auto seq = 1 + rng() % 5;
        if (account) {
          const std::string names[] = {"a", "b", "c"};
          universe.push_back(make_transaction(
              keys, ClientId{client}, seq,
              Transfer{names[rng() % 3], names[rng() % 3], static_cast<std::int64_t>(1 + rng() % 8), 1 + rng() % 3}));
        } else {
          universe.push_back(make_transaction(keys, ClientId{client}, seq, Note{std::to_string(rng() % 2)}));
        }
      }
      auto state = m.genesis_state();
      for (const auto& tx : universe) {
        if (rng() % 5 == 0) m.try_apply(state, tx);
      }
      std::vector<std::vector<Transaction>> parts(1 + rng() % 4);
      std::vector<Contribution> coll;
      for (std::size_t p = 0; p < parts.size(); ++p) {
        for (const auto& tx : universe) {
          if (rng() % 2) parts[p].push_back(tx);
        }
        std::shuffle(parts[p].begin(), parts[p].end(), rng);
      }
      for (std::size_t p = 0; p < parts.size(); ++p) coll.push_back({ReplicaId{static_cast<std::uint32_t>(rng() % 4)}, parts[p]});
      const auto result = fm.fuse(m, state, coll).txs;
      ++total;
      ok += check_fair_fusion(m, state, coll, result).ok;

      if (account) continue;
      // Delete a transaction valid at every position of the result: its id is
      // new to the prefix and to everything else in the result.
      for (std::size_t k = 0; k < result.size(); ++k) {
        const auto id = result[k].id();
        if (!m.admits(state, result[k])) continue;
        auto rest = result;
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
        if (std::any_of(rest.begin(), rest.end(), [&](const auto& tx) { return tx.id() == id; })) continue;
        ++mutated;
        flagged += !check_fair_fusion(m, state, coll, rest).ok;
        break;
      }
    }
  }
  report(4, ok == total && mutated > 0 && flagged == mutated,
         "fair fusion: check(fuse) ok on " + std::to_string(ok) + "/" + std::to_string(total) +
             " random inputs (1000 per model), deletion mutation flagged on " + std::to_string(flagged) + "/" +
             std::to_string(mutated),
         clock.seconds());
}

void criterion5() {
  Clock clock;
  constexpr std::size_t kSeeds = 50;
  std::atomic<std::size_t> violations{0};
  std::atomic<std::size_t> won_runs{0};
  std::atomic<std::size_t> won_runs_pass{0};
  std::atomic<std::size_t> wins{0};
  parallel_for(kSeeds, [&](std::size_t k) {
    const auto r = run_scenario(workloads::spam_race(k + 1));
    log_tally.add(r.report);
    fusion_tally.add(r);
    const auto st = r.report.get("user-fairness").status;
    violations += st == VerdictStatus::violation;
    std::size_t w = 0;
    for (const auto& f : r.report.fates) w += f.kind == FateKind::invalidated;
    wins += w;
    if (w > 0) {
      ++won_runs;
      won_runs_pass += st == VerdictStatus::pass;
    }
  });
  report(5, violations == 0 && won_runs > 0 && won_runs_pass == won_runs,
         "invalidation branch: spammer won " + std::to_string(wins) + " races in " + std::to_string(won_runs) +
             "/" + std::to_string(kSeeds) + " runs, all of them pass; " + std::to_string(violations) +
             " user-fairness violations",
         clock.seconds());
}

void criterion6() {
  report(6, log_tally.violations == 0 && log_tally.runs > 0,
         "log view: " + std::to_string(log_tally.runs) +
             " BC-FRC runs, log safety / validity / finality / user fairness violations: " +
             std::to_string(log_tally.violations) + " (inconclusive: " + std::to_string(log_tally.inconclusive) +
             ")",
         0);
}

void criterion7() {
  Clock clock;
  const auto configs = oracle::micro_configs();
  const auto plans = oracle::micro_plan_count();
  std::atomic<std::size_t> traces{0};
  std::atomic<std::size_t> mismatches{0};
  std::atomic<std::size_t> violations_seen{0};
  std::mutex mu;
  std::set<std::size_t> distinct;
  std::string first_mismatch;
  auto compare = [&](const Trace& t, const std::string& label) {
    const auto report = check_trace(t);
    const auto direct = oracle::evaluate_directly(t, report.grace);
    ++traces;
    bool any_violation = false;
    for (const char* p : kProperties) {
      any_violation = any_violation || direct.at(p) == VerdictStatus::violation;
      if (report.get(p).status == direct.at(p)) continue;
      ++mismatches;
      std::lock_guard lock(mu);
      if (first_mismatch.empty()) {
        first_mismatch = label + " " + p + ": checker " + std::string(to_string(report.get(p).status)) +
                         ", direct " + std::string(to_string(direct.at(p)));
      }
    }
    violations_seen += any_violation;
  };
  parallel_for(configs.size() * plans, [&](std::size_t k) {
    const auto& cfg = configs[k / plans];
    const auto plan = k % plans;
    const auto t = oracle::run_micro(cfg.scenario, plan);
    const auto label = cfg.name + " plan " + std::to_string(plan);
    // Runs are deterministic, so a repeated trace has nothing new to check.
    const auto key = std::hash<std::string>{}(trace_to_string(t));
    bool fresh = false;
    {
      std::lock_guard lock(mu);
      fresh = distinct.insert(key).second;
    }
    if (fresh) compare(t, label);
    if (plan % 8 == 0) {
      for (const auto& m : oracle::mutations(t)) compare(m, label + " mutated");
    }
  });
  std::string what = "checker vs direct evaluation: " + std::to_string(traces) + " traces checked (" +
                     std::to_string(configs.size()) + " configs x " + std::to_string(plans) + " schedules, " +
                     std::to_string(distinct.size()) + " distinct traces, plus mutants; " +
                     std::to_string(violations_seen) + " with violations), " + std::to_string(mismatches) +
                     " verdict mismatches";
  if (!first_mismatch.empty()) what += "; first: " + first_mismatch;
  report(7, mismatches == 0, what, clock.seconds(), 300);
}

void criterion8() {
  Clock clock;
  const auto dir = fs::temp_directory_path() / ("fairledger-determinism-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::vector<Scenario> picks;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    picks.push_back(workloads::censorship(Construction::bcrc, s * 11));
    picks.push_back(workloads::censorship(Construction::bcfrc, s * 13));
    picks.push_back(workloads::spam_race(s * 17));
    picks.push_back(workloads::random_frc(s % 2 ? 7 : 4, s % 2 ? 2 : 1, s * 19));
  }
  std::size_t identical = 0;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    std::string bytes[2];
    for (int run = 0; run < 2; ++run) {
      const auto path = dir / (std::to_string(k) + "." + std::to_string(run) + ".jsonl");
      {
        std::ofstream out(path, std::ios::binary);
        write_trace(out, simulate(picks[k]));
      }
      std::ifstream in(path, std::ios::binary);
      bytes[run].assign(std::istreambuf_iterator<char>(in), {});
    }
    identical += !bytes[0].empty() && bytes[0] == bytes[1];
  }
  fs::remove_all(dir);
  report(8, identical == picks.size(),
         "determinism: " + std::to_string(identical) + "/" + std::to_string(picks.size()) +
             " (scenario, seed) pairs wrote byte-identical trace files twice",
         clock.seconds());
}

}  // namespace

int main() {
  try {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (all_passed ? "all criteria pass" : "some criteria FAIL") << std::endl;
  return all_passed ? 0 : 1;
}
