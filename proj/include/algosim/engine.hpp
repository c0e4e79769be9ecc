#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "algosim/adversary.hpp"
#include "algosim/consensus.hpp"
#include "algosim/ledger.hpp"
#include "algosim/netsim.hpp"

namespace algosim {

enum class ConsensusMode { ba, simple, both };

std::string_view to_string(ConsensusMode m);
std::optional<ConsensusMode> parse_mode(std::string_view text);

struct WorkloadConfig {
  std::size_t payments_per_round = 5;
  std::size_t new_users_per_round = 0;  // fresh users funded each round
  Round growth_start_round = 1;         // first round that creates users
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::size_t num_genesis_users = 10;
  Amount initial_balance = 1'000'000;
  Round rounds = 10;
  ProtocolParams params;
  ConsensusMode mode = ConsensusMode::both;
  AdversaryConfig adversary;
  WorkloadConfig workload;
  bool keep_delivery_log = false;

  /// Throws config_invalid.
  void validate() const;
};

struct StepSize {
  Step step = 0;
  std::size_t size = 0;

  friend bool operator==(const StepSize&, const StepSize&) = default;
};

struct RoundMetrics {
  Round round = 0;
  std::optional<UserId> leader;
  std::vector<StepSize> committee_sizes;
  Step steps_to_decision = 0;
  std::optional<Digest> ba_digest;
  std::optional<Digest> simple_digest;
  bool equivalent = true;
  bool empty_block = false;
  std::size_t message_count = 0;
  std::size_t payments = 0;
  bool no_termination = false;
  bool inconsistent = false;
};

enum class ForkKind { genesis_fork, bribery_fork, protocol_violation };
std::string_view to_string(ForkKind k);

struct ForkReport {
  Round round = 0;
  Digest first;
  Digest second;
  std::vector<CertMessage> first_cert;
  std::vector<CertMessage> second_cert;
  ForkKind classification = ForkKind::protocol_violation;

  std::string describe() const;
};

struct RunSummary {
  std::size_t forks_detected = 0;
  std::vector<std::string> fork_descriptions;
  std::size_t total_messages = 0;
  std::size_t validation_failures = 0;
  std::size_t audit_violations = 0;
  std::size_t equivalence_mismatches = 0;
  std::optional<std::string> attack_failure;
  double wall_time = 0.0;  // seconds; not part of serialized metrics
};

struct RunMetrics {
  std::vector<RoundMetrics> rounds;
  RunSummary summary;
};

/// Step-2 votes of one round as seen by the engine, with the BA result.
struct RoundTranscript {
  Round round = 0;
  std::vector<SoftVote> soft_votes;
  std::size_t committee_size_2 = 0;
  std::optional<Digest> ba_digest;
};

struct ScenarioResult {
  std::vector<Chain> chains;  // [0] is the honest chain
  RunMetrics metrics;
  std::vector<ForkReport> forks;
  std::vector<RoundTranscript> transcripts;
  std::shared_ptr<KeyRegistry> keys;
  std::vector<DeliveryRecord> delivery_log;
};

/// Fills p, p_prime and t_H for an expected leader count and committee size
/// over `users` genesis users.
ProtocolParams desk_params(std::size_t users, double expected_leaders = 5.0,
                           double expected_committee = 20.0);

Digest genesis_seed(std::uint64_t seed);

ScenarioResult run_scenario(const ScenarioConfig& config);

/// One report per pair of chains that diverge at a round where both blocks
/// validate against the shared prefix.
std::vector<ForkReport> detect_fork(std::span<const Chain> chains, const ProtocolParams& params,
                                    const KeyRegistry& keys,
                                    ForkKind kind = ForkKind::protocol_violation);

struct EquivalenceVerdict {
  Round round = 0;
  bool equivalent = true;
  std::optional<Digest> ba_digest;
  std::optional<Digest> simple_digest;
  std::vector<SoftVote> counterexample;  // the vote multiset when not equivalent
};

std::vector<EquivalenceVerdict> compare_consensus(std::span<const RoundTranscript> transcript);

}  // namespace algosim
