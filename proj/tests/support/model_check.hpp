#pragma once

// Exhaustive small-scope checkers for the voting rules. Honest parties are
// interchangeable, so states are counts; Byzantine parties may send any
// subset of values to each honest party independently.

#include <cstddef>
#include <string>

#include "algosim/params.hpp"

namespace algosim::check {

struct BbaReport {
  std::size_t states = 0;
  bool agreement = true;
  bool validity = true;
  double worst_non_termination = 0.0;  // fair coin, revealed after the adversary moves
  std::string counterexample;
};

/// All parties sit on every committee; decided parties keep sending their
/// bit. The coin is adversarial for safety and fair for termination.
BbaReport check_bba(std::size_t honest, std::size_t byzantine, Step max_step);

struct GcReport {
  std::size_t instances = 0;
  bool graded_consistency = true;  // no {0,2} grades, no grade 2 on two values
  bool strong_consistency = true;  // grade 2 on x => every honest grade >= 1 on x
  bool validity = true;            // unanimous honest input x => everyone (x, 2)
  std::string counterexample;
};

GcReport check_gc(std::size_t honest, std::size_t byzantine);

struct VoteReport {
  std::size_t instances = 0;
  std::size_t counterexamples = 0;
  std::string first;
};

/// Honest votes over three digests, every Byzantine vote pattern per
/// observer; flags any two observers finalizing different digests and any
/// view where two digests clear the threshold.
VoteReport check_simple_vote(std::size_t honest, std::size_t byzantine);

}  // namespace algosim::check
