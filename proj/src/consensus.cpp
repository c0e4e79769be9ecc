#include "algosim/consensus.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "algosim/error.hpp"

namespace algosim {

namespace {

bool above_two_thirds(std::size_t count, std::size_t committee) { return 3 * count > 2 * committee; }
bool above_one_third(std::size_t count, std::size_t committee) { return 3 * count > committee; }

void release(const Signer& signer, const Credential& c, std::optional<KeyPolicy> policy) {
  if (policy) signer.destroy_ephemeral(c.user, c.round, c.step, *policy);
}

template <typename Msg, typename ValueOf>
Tally tally(std::span<const Msg> msgs, ValueOf value_of) {
  std::map<Digest, std::set<UserId>> voters;
  for (const auto& m : msgs) {
    if (auto v = value_of(m)) voters[*v].insert(m.voter);
  }
  Tally best;
  for (const auto& [value, who] : voters) {
    if (who.size() > best.count) best = {value, who.size()};
  }
  return best;
}

}  // namespace

Bytes vote_payload(Step s, std::uint8_t bit, const std::optional<Digest>& value) {
  Encoder e;
  e.u64(s).u64(bit);
  if (value) {
    e.field(*value);
  } else {
    e.field(ByteView{});
  }
  return e.bytes();
}

std::vector<Payment> select_payset(std::span<const Payment> pending, const Status& status,
                                   const KeyRegistry& keys) {
  std::vector<Payment> kept;
  Status running = status;
  for (const auto& p : pending) {
    if (!verify_payment(p, status.round, keys)) continue;
    auto it = running.balances.find(p.payer);
    if (p.amount == 0 || it == running.balances.end() || it->second < p.amount) continue;
    it->second -= p.amount;
    if (it->second == 0) running.balances.erase(it);
    running.balances[p.payee] += p.amount;
    kept.push_back(p);
  }
  return kept;
}

ProposalMessage propose(const Signer& signer, KeyPolicy policy, const Credential& credential,
                        std::span<const Payment> pending, const Chain& chain,
                        const ProtocolParams& params) {
  Round r = chain.tip_round() + 1;
  if (credential.round != r || credential.step != kProposalStep) {
    throw Error(Errc::precondition_violated, "proposal needs a step-1 credential for round " + std::to_string(r));
  }
  (void)params;
  const UserId leader = credential.user;
  const Digest& prev_seed = chain.tip().seed;
  auto payset = select_payset(pending, chain.tip_status(), signer.registry());

  Block b = empty_block_after(chain.tip(), chain.tip_hash());
  if (!payset.empty()) {
    b.payset = std::move(payset);
    b.seed = hash(signer.unique_sign(leader, prev_seed.view()).view());
  }
  ProposalMessage m{std::move(b), {}, credential};
  m.block_sig = signer.ephemeral_sign(leader, r, kProposalStep, block_hash(m.block).view());
  signer.destroy_ephemeral(leader, r, kProposalStep, policy);
  return m;
}

bool verify_proposal(const ProposalMessage& m, const Chain& chain, const ProtocolParams& params,
                     const KeyRegistry& keys) {
  Round r = chain.tip_round() + 1;
  const Credential& c = m.credential;
  const Block& b = m.block;
  if (c.round != r || c.step != kProposalStep || b.round != r || !b.cert.empty()) return false;
  if (b.prev_hash != chain.tip_hash()) return false;
  const Digest& prev_seed = chain.tip().seed;
  if (!verify_credential(c, prev_seed, chain, params, keys)) return false;
  Digest digest = block_hash(b);
  if (!keys.verify_ephemeral(c.user, r, kProposalStep, digest.view(), m.block_sig)) return false;
  if (b.empty()) {
    if (b.seed != hash_seed_round(prev_seed, r)) return false;
  } else {
    UserId leader = c.user;
    if (!keys.identify_signer(std::span(&leader, 1), prev_seed.view(), b.seed)) return false;
  }
  try {
    (void)apply_payset(chain.tip_status(), b.payset, keys);
  } catch (const Error&) {
    return false;
  }
  return true;
}

Digest empty_block_digest(const Chain& chain) {
  return block_hash(empty_block_after(chain.tip(), chain.tip_hash()));
}

Digest soft_vote_value(std::span<const ProposalMessage> proposals, const Chain& chain,
                       const ProtocolParams& params, const KeyRegistry& keys) {
  const ProposalMessage* best = nullptr;
  Digest best_digest;
  for (const auto& m : proposals) {
    if (!verify_proposal(m, chain, params, keys)) continue;
    Digest d = block_hash(m.block);
    auto key = std::tie(m.credential.unit, m.credential.user, d);
    if (!best || key < std::tie(best->credential.unit, best->credential.user, best_digest)) {
      best = &m;
      best_digest = d;
    }
  }
  return best ? best_digest : empty_block_digest(chain);
}

SoftVote make_soft_vote(const Signer& signer, KeyPolicy policy, const Credential& credential,
                        const Digest& value) {
  if (credential.step != kSoftVoteStep) throw Error(Errc::precondition_violated, "soft vote needs a step-2 credential");
  SoftVote v{credential.user, credential.round, value, {}, credential};
  v.sig = signer.ephemeral_sign(credential.user, credential.round, kSoftVoteStep,
                                vote_payload(kSoftVoteStep, 0, value));
  release(signer, credential, policy);
  return v;
}

SoftVote soft_vote(const Signer& signer, KeyPolicy policy, const Credential& credential,
                   std::span<const ProposalMessage> proposals, const Chain& chain,
                   const ProtocolParams& params) {
  return make_soft_vote(signer, policy, credential,
                        soft_vote_value(proposals, chain, params, signer.registry()));
}

Tally top_value(std::span<const SoftVote> votes) {
  return tally(votes, [](const SoftVote& v) { return std::optional<Digest>(v.value); });
}

std::optional<Digest> gc_relay(std::span<const SoftVote> votes, std::size_t committee_size_2) {
  auto t = top_value(votes);
  if (t.value && above_two_thirds(t.count, committee_size_2)) return t.value;
  return std::nullopt;
}

GCRelay make_relay(const Signer& signer, KeyPolicy policy, const Credential& credential,
                   const std::optional<Digest>& value) {
  if (credential.step != kRelayStep) throw Error(Errc::precondition_violated, "relay needs a step-3 credential");
  GCRelay m{credential.user, credential.round, kRelayStep, value, {}, credential};
  m.sig = signer.ephemeral_sign(credential.user, credential.round, kRelayStep,
                                vote_payload(kRelayStep, 0, value));
  release(signer, credential, policy);
  return m;
}

GradedValue gc_grade(std::span<const GCRelay> relays, std::size_t committee_size_3) {
  auto t = tally(relays, [](const GCRelay& m) { return m.value; });
  if (t.value && above_two_thirds(t.count, committee_size_3)) return {t.value, 2};
  if (t.value && above_one_third(t.count, committee_size_3)) return {t.value, 1};
  return {std::nullopt, 0};
}

std::uint8_t bba_input(const GradedValue& g) { return g.grade == 2 ? 0 : 1; }

BbaMessage make_bba_message(const Signer& signer, std::optional<KeyPolicy> policy,
                            const Credential& credential, std::uint8_t bit,
                            const std::optional<Digest>& value) {
  if (credential.step < kGradeStep) throw Error(Errc::precondition_violated, "BBA messages start at step 4");
  BbaMessage m{credential.user, credential.round, credential.step, bit, value, {}, credential};
  m.sig = signer.ephemeral_sign(credential.user, credential.round, credential.step,
                                vote_payload(credential.step, bit, value));
  release(signer, credential, policy);
  return m;
}

BbaStepKind bba_step_kind(Step s) {
  if (s < kFirstBbaStep) throw Error(Errc::precondition_violated, "BBA steps start at 5");
  switch ((s - kFirstBbaStep) % 3) {
    case 0: return BbaStepKind::fixed_to_zero;
    case 1: return BbaStepKind::fixed_to_one;
    default: return BbaStepKind::coin_flip;
  }
}

std::uint64_t bba_iteration(Step s) { return (s - kFirstBbaStep) / 3; }

std::uint8_t bba_coin(const Digest& prev_seed, std::uint64_t iteration) {
  return hash_to_unit(hash_seed_round(prev_seed, iteration)) > 0.5 ? 1 : 0;
}

BbaState bba_step_rule(BbaState state, Step s, std::size_t zeros, std::size_t ones,
                       std::size_t committee, std::uint8_t coin) {
  if (state.decided) return state;
  const bool z = above_two_thirds(zeros, committee);
  const bool o = above_two_thirds(ones, committee);
  auto decide = [&](std::uint8_t b) { return BbaState{b, true, s}; };
  switch (bba_step_kind(s)) {
    case BbaStepKind::fixed_to_zero:
      if (z) return decide(0);
      state.bit = o ? 1 : 0;
      break;
    case BbaStepKind::fixed_to_one:
      if (o) return decide(1);
      state.bit = z ? 0 : 1;
      break;
    case BbaStepKind::coin_flip:
      state.bit = z ? 0 : o ? 1 : coin;
      break;
  }
  return state;
}

BbaResult bba(const std::map<UserId, std::uint8_t>& initial_bits,
              std::span<const std::vector<UserId>> committees, const Digest& prev_seed,
              const ProtocolParams& params) {
  std::map<UserId, BbaState> state;
  for (const auto& [u, b] : initial_bits) state[u] = BbaState{b, false, 0};
  if (state.empty() || committees.empty()) return {};

  auto senders = [&](std::size_t i) {
    std::size_t zeros = 0, ones = 0;
    for (auto u : committees[i]) {
      auto it = state.find(u);
      if (it == state.end()) continue;
      (it->second.bit ? ones : zeros)++;
    }
    return std::pair{zeros, ones};
  };

  auto [zeros, ones] = senders(0);
  for (Step s = kFirstBbaStep; s <= params.max_step(); ++s) {
    std::uint8_t coin = bba_coin(prev_seed, bba_iteration(s));
    bool all = true;
    for (auto& [u, st] : state) {
      st = bba_step_rule(st, s, zeros, ones, zeros + ones, coin);
      all = all && st.decided;
    }
    if (all) {
      Step at = 0;
      for (const auto& [u, st] : state) at = std::max(at, st.decided_at);
      return {state.begin()->second.bit, at};
    }
    if (s - kGradeStep >= committees.size()) break;
    std::tie(zeros, ones) = senders(s - kGradeStep);
  }
  return {};
}

BaOutput ba_output(const GradedValue& g, std::uint8_t bba_result) {
  if (bba_result != 0) return {std::nullopt, false};
  if (!g.value) return {std::nullopt, true};
  return {g.value, false};
}

std::optional<Digest> simple_vote_finalize(std::span<const SoftVote> votes,
                                           std::size_t committee_size_2) {
  return gc_relay(votes, committee_size_2);
}

CertMessage make_cert_message(const Signer& signer, std::optional<KeyPolicy> policy,
                              const Credential& credential, const Digest& block_digest,
                              bool is_empty) {
  if (credential.step < kSoftVoteStep) throw Error(Errc::precondition_violated, "certificates start at step 2");
  std::uint8_t bit = is_empty ? 1 : 0;
  CertMessage m{credential.user, credential.round, credential.step, bit, block_digest, {}, credential};
  m.sig = signer.ephemeral_sign(credential.user, credential.round, credential.step,
                                cert_payload(bit, block_digest));
  release(signer, credential, policy);
  return m;
}

std::optional<std::vector<CertMessage>> assemble_cert(std::span<const CertMessage> msgs,
                                                      const Digest& block_digest, bool is_empty,
                                                      const Chain& chain,
                                                      const ProtocolParams& params,
                                                      const KeyRegistry& keys) {
  std::map<UserId, const CertMessage*> by_voter;
  for (const auto& m : msgs) {
    if (by_voter.contains(m.voter)) continue;
    if (check_cert_message(m, block_digest, is_empty, chain, params, keys) == CertCheck::ok) {
      by_voter[m.voter] = &m;
    }
  }
  if (by_voter.size() < params.t_H) return std::nullopt;
  std::vector<CertMessage> out;
  out.reserve(by_voter.size());
  for (const auto& [u, m] : by_voter) out.push_back(*m);
  return out;
}

namespace {

bool check_signed(UserId voter, Round round, Step step, const Credential& c, ByteView payload,
                  const UniqueSignature& sig, const Chain& chain, const ProtocolParams& params,
                  const KeyRegistry& keys) {
  Round r = chain.tip_round() + 1;
  if (round != r || c.user != voter || c.round != r || c.step != step) return false;
  if (!verify_credential(c, chain.tip().seed, chain, params, keys)) return false;
  return keys.verify_ephemeral(voter, r, step, payload, sig);
}

}  // namespace

bool verify_soft_vote(const SoftVote& v, const Chain& chain, const ProtocolParams& params,
                      const KeyRegistry& keys) {
  return check_signed(v.voter, v.round, kSoftVoteStep, v.credential, vote_payload(kSoftVoteStep, 0, v.value),
                      v.sig, chain, params, keys);
}

bool verify_relay(const GCRelay& m, const Chain& chain, const ProtocolParams& params,
                  const KeyRegistry& keys) {
  if (m.step != kRelayStep) return false;
  return check_signed(m.voter, m.round, kRelayStep, m.credential, vote_payload(kRelayStep, 0, m.value), m.sig,
                      chain, params, keys);
}

bool verify_bba_message(const BbaMessage& m, const Chain& chain, const ProtocolParams& params,
                        const KeyRegistry& keys) {
  if (m.step < kGradeStep || m.bit > 1) return false;
  return check_signed(m.voter, m.round, m.step, m.credential, vote_payload(m.step, m.bit, m.value), m.sig,
                      chain, params, keys);
}

bool verify_cert_message(const CertMessage& m, const Chain& chain, const ProtocolParams& params,
                         const KeyRegistry& keys) {
  if (m.bit > 1) return false;
  return check_cert_message(m, m.block_digest, m.bit == 1, chain, params, keys) == CertCheck::ok;
}

}  // namespace algosim
