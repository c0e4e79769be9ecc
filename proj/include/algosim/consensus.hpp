#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "algosim/ledger.hpp"
#include "algosim/params.hpp"
#include "algosim/sortition.hpp"
#include "algosim/types.hpp"

namespace algosim {

/// Step-1 message: the candidate block, signed with the leader's (r, 1) key.
struct ProposalMessage {
  Block block;
  UniqueSignature block_sig;
  Credential credential;

  friend bool operator==(const ProposalMessage&, const ProposalMessage&) = default;
};

struct SoftVote {
  UserId voter;
  Round round = 0;
  Digest value;
  UniqueSignature sig;
  Credential credential;

  friend bool operator==(const SoftVote&, const SoftVote&) = default;
};

/// Step-3 message. A committee member that saw no qualifying value still
/// sends a relay with an empty value so the committee size stays observable.
struct GCRelay {
  UserId voter;
  Round round = 0;
  Step step = kRelayStep;
  std::optional<Digest> value;
  UniqueSignature sig;
  Credential credential;

  friend bool operator==(const GCRelay&, const GCRelay&) = default;
};

/// Step >= 4 message carrying the sender's current bit and the value it
/// would output on bit 0.
struct BbaMessage {
  UserId voter;
  Round round = 0;
  Step step = 0;
  std::uint8_t bit = 0;
  std::optional<Digest> value;
  UniqueSignature sig;
  Credential credential;

  friend bool operator==(const BbaMessage&, const BbaMessage&) = default;
};

struct GradedValue {
  std::optional<Digest> value;
  int grade = 0;

  friend bool operator==(const GradedValue&, const GradedValue&) = default;
};

/// Bytes signed by the ephemeral key for relays and BBA messages.
Bytes vote_payload(Step s, std::uint8_t bit, const std::optional<Digest>& value);

/// Greedy selection: walks `pending` in order and keeps every payment that
/// verifies and still applies on top of the ones already kept.
std::vector<Payment> select_payset(std::span<const Payment> pending, const Status& status,
                                   const KeyRegistry& keys);

/// Builds and signs the leader's block, then applies `policy` to the (r, 1) key.
ProposalMessage propose(const Signer& signer, KeyPolicy policy, const Credential& credential,
                        std::span<const Payment> pending, const Chain& chain,
                        const ProtocolParams& params);

bool verify_proposal(const ProposalMessage& m, const Chain& chain, const ProtocolParams& params,
                     const KeyRegistry& keys);

/// Digest of the empty block that would follow chain's tip.
Digest empty_block_digest(const Chain& chain);

/// block_hash of the valid proposal with the smallest credential unit, or the
/// empty-block digest when no proposal is valid.
Digest soft_vote_value(std::span<const ProposalMessage> proposals, const Chain& chain,
                       const ProtocolParams& params, const KeyRegistry& keys);

SoftVote soft_vote(const Signer& signer, KeyPolicy policy, const Credential& credential,
                   std::span<const ProposalMessage> proposals, const Chain& chain,
                   const ProtocolParams& params);
/// Signs a vote for an already chosen value.
SoftVote make_soft_vote(const Signer& signer, KeyPolicy policy, const Credential& credential,
                        const Digest& value);

/// Distinct-voter count for the value with the most voters (ties go to the
/// smaller digest).
struct Tally {
  std::optional<Digest> value;
  std::size_t count = 0;
};
Tally top_value(std::span<const SoftVote> votes);

/// x if more than 2/3 of committee_size_2 distinct voters voted for x.
std::optional<Digest> gc_relay(std::span<const SoftVote> votes, std::size_t committee_size_2);

GCRelay make_relay(const Signer& signer, KeyPolicy policy, const Credential& credential,
                   const std::optional<Digest>& value);

GradedValue gc_grade(std::span<const GCRelay> relays, std::size_t committee_size_3);

/// 0 when the grade is 2, otherwise 1.
std::uint8_t bba_input(const GradedValue& g);

/// For the two message makers below, a nullopt policy leaves the (r, s) key
/// untouched so the same step can sign a second message.
BbaMessage make_bba_message(const Signer& signer, std::optional<KeyPolicy> policy, const Credential& credential,
                            std::uint8_t bit, const std::optional<Digest>& value);

enum class BbaStepKind { fixed_to_zero, fixed_to_one, coin_flip };

/// Kind of BBA step s (s >= 5), cycling in groups of three.
BbaStepKind bba_step_kind(Step s);
/// Coin iteration of step s.
std::uint64_t bba_iteration(Step s);

/// hash_to_unit(hash(prev_seed || iteration)) > 0.5
std::uint8_t bba_coin(const Digest& prev_seed, std::uint64_t iteration);

struct BbaState {
  std::uint8_t bit = 0;
  bool decided = false;
  Step decided_at = 0;

  friend bool operator==(const BbaState&, const BbaState&) = default;
};

/// Updates a party's state from the previous step's tally. `committee` is the
/// number of distinct senders seen in that step. Decided states never change.
BbaState bba_step_rule(BbaState state, Step s, std::size_t zeros, std::size_t ones,
                       std::size_t committee, std::uint8_t coin);

struct BbaResult {
  std::optional<std::uint8_t> bit;  // nullopt: no decision within max_step
  Step decided_at = 0;
};

/// Honest-only synchronous run. initial_bits are the step-4 inputs of each
/// party; committees[i] is SV^{r, 4 + i}. Runs until every party has decided
/// or the committees (at most max_step - 3 of them) are exhausted.
BbaResult bba(const std::map<UserId, std::uint8_t>& initial_bits,
              std::span<const std::vector<UserId>> committees, const Digest& prev_seed,
              const ProtocolParams& params);

struct BaOutput {
  std::optional<Digest> value;  // nullopt selects the empty block
  bool inconsistent = false;    // bit 0 with no value
};
BaOutput ba_output(const GradedValue& g, std::uint8_t bba_result);

/// x if more than 2/3 of committee_size_2 distinct voters voted for x.
std::optional<Digest> simple_vote_finalize(std::span<const SoftVote> votes,
                                           std::size_t committee_size_2);

CertMessage make_cert_message(const Signer& signer, std::optional<KeyPolicy> policy, const Credential& credential,
                              const Digest& block_digest, bool is_empty);

/// Signature and credential checks for messages of the round after chain's tip.
bool verify_soft_vote(const SoftVote& v, const Chain& chain, const ProtocolParams& params,
                      const KeyRegistry& keys);
bool verify_relay(const GCRelay& m, const Chain& chain, const ProtocolParams& params,
                  const KeyRegistry& keys);
bool verify_bba_message(const BbaMessage& m, const Chain& chain, const ProtocolParams& params,
                        const KeyRegistry& keys);
/// Checks a cert message against the digest and bit it carries.
bool verify_cert_message(const CertMessage& m, const Chain& chain, const ProtocolParams& params,
                         const KeyRegistry& keys);

/// Valid, distinct-voter messages for block_digest (one per voter, sorted by
/// voter), or nullopt when fewer than t_H remain.
std::optional<std::vector<CertMessage>> assemble_cert(std::span<const CertMessage> msgs,
                                                      const Digest& block_digest, bool is_empty,
                                                      const Chain& chain,
                                                      const ProtocolParams& params,
                                                      const KeyRegistry& keys);

}  // namespace algosim
