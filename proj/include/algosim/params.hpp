#pragma once

#include <cstddef>
#include <cstdint>

#include "algosim/crypto.hpp"

namespace algosim {

inline constexpr Step kProposalStep = 1;
inline constexpr Step kSoftVoteStep = 2;
inline constexpr Step kRelayStep = 3;
inline constexpr Step kGradeStep = 4;
inline constexpr Step kFirstBbaStep = 5;

struct ProtocolParams {
  double p = 0.05;        // leader selection threshold
  double p_prime = 0.2;   // verifier selection threshold
  Round k = 3;            // eligibility lookback
  Step m = 180;           // GC + BBA step budget (steps 3 .. m+3)
  std::size_t t_H = 14;   // certificate threshold
  Round horizon = 0;      // last round with provisioned ephemeral keys

  /// Highest step number a round may use.
  Step max_step() const { return m + 3; }

  /// Round whose user set decides eligibility in round r. Rounds before k
  /// look back to genesis.
  Round lookback(Round r) const { return r >= k ? r - k : 0; }

  /// Throws Error(config_invalid) when an invariant does not hold.
  void validate() const;

  /// floor(2 * expected / 3) + 1
  static std::size_t default_threshold(double expected_committee);
};

}  // namespace algosim
