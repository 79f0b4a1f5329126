// Cuts a violating trace down to its witness and checks the cut again.
//
//   replay_witness <trace.jsonl> <property> [out.jsonl]

#include <fstream>
#include <iostream>

#include "fairledger/checker.hpp"

using namespace fairledger;

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: replay_witness <trace.jsonl> <property> [out.jsonl]\n";
    return 3;
  }
  try {
    const auto trace = read_trace_file(argv[1]);
    const auto report = check_trace(trace);
    const auto& v = report.get(argv[2]);
    if (v.status != VerdictStatus::violation) {
      std::cout << argv[2] << ": " << to_string(v.status) << ", nothing to replay\n";
      return 0;
    }
    const auto witness = witness_trace(trace, v);
    std::cout << argv[2] << ": " << v.detail << "\n"
              << "witness keeps " << witness.size() << " of " << trace.size() << " events\n";
    if (argc > 3) {
      std::ofstream out(argv[3], std::ios::binary);
      write_trace(out, witness);
    }
    const auto again = check_trace(witness).get(argv[2]);
    std::cout << "replayed verdict: " << to_string(again.status) << '\n';
    return again.status == VerdictStatus::violation ? 0 : 1;
  } catch (const std::out_of_range&) {
    std::cerr << "unknown property " << argv[2] << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 4;
  }
}
