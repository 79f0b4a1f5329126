// One Byzantine replica censors client 0 while the consensus service always
// picks the Byzantine proposal. Same workload, same seed, both constructions.
//
//   censorship_demo [seed]

#include <iomanip>
#include <iostream>

#include "fairledger/harness.hpp"

using namespace fairledger;

int main(int argc, char** argv) {
  Scenario s;
  s.name = "censorship-demo";
  s.seed = argc > 1 ? std::stoull(argv[1]) : 1;
  s.horizon_instances = 30;
  s.grace = 3;
  s.adversary.corrupt_replicas = {ReplicaId{3}};
  s.adversary.replica_strategy = ReplicaBehaviour::censor;
  s.adversary.censor_targets = {ClientId{0}};
  s.adversary.rc_policy = SelectionKind::byzantine_favouring;
  for (Tick t = 0; t <= 40; t += 10) {
    s.workload.push_back({t, ClientId{0}, Note{"from c0 at " + std::to_string(t)}, false});
    s.workload.push_back({t, ClientId{1}, Note{"from c1 at " + std::to_string(t)}, false});
  }

  const auto c = compare_scenario(s);
  auto cell = [](const TxFate* f) {
    if (f == nullptr) return std::string("-");
    std::string text(to_string(f->kind));
    if (f->instance) text += " in block " + std::to_string(*f->instance);
    return text;
  };
  std::cout << std::left << std::setw(8) << "tx" << std::setw(24) << "bcrc" << "bcfrc\n";
  for (const auto& f : c.bcrc.report.fates) {
    std::cout << std::setw(8) << to_string(f.id) << std::setw(24) << cell(&f) << cell(c.bcfrc.report.fate(f.id))
              << '\n';
  }
  std::cout << '\n';
  for (const auto* run : {&c.bcrc, &c.bcfrc}) {
    const auto& v = run->report.get("user-fairness");
    std::cout << to_string(*run->scenario.construction) << ": user-fairness " << to_string(v.status);
    if (!v.detail.empty()) std::cout << " (" << v.detail << ")";
    std::cout << '\n';
  }
  // Expected: c0's requests starve under bcrc and are finalised under bcfrc.
  const bool shown = c.bcrc.report.get("user-fairness").status == VerdictStatus::violation &&
                     c.bcfrc.report.get("user-fairness").status == VerdictStatus::pass;
  return shown ? 0 : 1;
}
