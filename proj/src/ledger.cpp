#include "algosim/ledger.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "algosim/error.hpp"
#include "algosim/sortition.hpp"

namespace algosim {

Amount Status::balance(UserId u) const {
  auto it = balances.find(u);
  return it == balances.end() ? 0 : it->second;
}

Amount Status::total() const {
  return std::accumulate(balances.begin(), balances.end(), Amount{0},
                         [](Amount acc, const auto& kv) { return acc + kv.second; });
}

Bytes payment_message(UserId payer, UserId payee, Amount amount, Round round) {
  return Encoder().raw(tag::payment).user(payer).user(payee).u64(amount).u64(round).bytes();
}

Payment make_payment(const Signer& signer, UserId payer, UserId payee, Amount amount, Round round) {
  Payment p{payer, payee, amount, {}};
  p.sig = signer.unique_sign(payer, payment_message(payer, payee, amount, round));
  return p;
}

bool verify_payment(const Payment& p, Round round, const KeyRegistry& keys) {
  if (!keys.is_registered(p.payer)) return false;
  return keys.verify_unique(p.payer, payment_message(p.payer, p.payee, p.amount, round), p.sig);
}

Status apply_payset(const Status& status, std::span<const Payment> payset, const KeyRegistry& keys) {
  Status next = status;
  next.round = status.round + 1;
  for (std::size_t i = 0; i < payset.size(); ++i) {
    const auto& p = payset[i];
    if (!verify_payment(p, status.round, keys)) {
      throw Error(Errc::invalid_signature, "payment " + std::to_string(i), i);
    }
    auto it = next.balances.find(p.payer);
    if (p.amount == 0 || it == next.balances.end() || it->second < p.amount) {
      throw Error(Errc::insufficient_funds, "payment " + std::to_string(i), i);
    }
    it->second -= p.amount;
    if (it->second == 0) next.balances.erase(it);
    next.balances[p.payee] += p.amount;
  }
  return next;
}

Bytes cert_payload(std::uint8_t bit, const Digest& block_digest) {
  return Encoder().u64(bit).field(block_digest).bytes();
}

Encoder encode_payment(const Payment& p) {
  Encoder e;
  e.user(p.payer).user(p.payee).u64(p.amount).field(p.sig);
  return e;
}

Digest block_hash(const Block& b) {
  Encoder e;
  e.raw(tag::block).u64(b.round).u64(b.payset.size());
  for (const auto& p : b.payset) e.nested(encode_payment(p));
  e.field(b.seed).field(b.prev_hash);
  return hash(e);
}

Block genesis_block(const Digest& genesis_seed) {
  Block b;
  b.round = 0;
  b.seed = genesis_seed;
  return b;
}

Block empty_block_after(const Block& prev, const Digest& prev_digest) {
  Block b;
  b.round = prev.round + 1;
  b.seed = hash_seed_round(prev.seed, b.round);
  b.prev_hash = prev_digest;
  return b;
}

Chain::Chain(Status genesis_status, Block genesis) : genesis_status_(std::move(genesis_status)) {
  if (genesis.round != 0 || !genesis.payset.empty()) {
    throw Error(Errc::precondition_violated, "genesis block must be round 0 with an empty payset");
  }
  genesis_status_.round = 0;
  Status after = genesis_status_;
  after.round = 1;
  hashes_.push_back(block_hash(genesis));
  blocks_.push_back(std::move(genesis));
  statuses_.push_back(std::move(after));
}

const Block& Chain::block(Round r) const {
  if (r >= blocks_.size()) throw Error(Errc::round_out_of_range, "round " + std::to_string(r));
  return blocks_[r];
}

const Digest& Chain::hash_at(Round r) const {
  if (r >= hashes_.size()) throw Error(Errc::round_out_of_range, "round " + std::to_string(r));
  return hashes_[r];
}

const Status& Chain::status_after(Round r) const {
  if (r >= statuses_.size()) throw Error(Errc::round_out_of_range, "round " + std::to_string(r));
  return statuses_[r];
}

void Chain::append(Block b, const KeyRegistry& keys) {
  if (b.round != tip_round() + 1) {
    throw Error(Errc::precondition_violated, "block round " + std::to_string(b.round) +
                                                 " does not extend tip " + std::to_string(tip_round()));
  }
  Status next = apply_payset(statuses_.back(), b.payset, keys);
  hashes_.push_back(block_hash(b));
  blocks_.push_back(std::move(b));
  statuses_.push_back(std::move(next));
}

Chain Chain::prefix(Round r) const {
  if (r > tip_round()) throw Error(Errc::round_out_of_range, "round " + std::to_string(r));
  Chain out = *this;
  out.blocks_.resize(r + 1);
  out.hashes_.resize(r + 1);
  out.statuses_.resize(r + 1);
  return out;
}

Chain make_genesis_chain(const Status& genesis_status, const Digest& genesis_seed) {
  return Chain(genesis_status, genesis_block(genesis_seed));
}

std::vector<UserId> users_at(const Chain& chain, Round r) {
  const auto& st = chain.status_after(r);
  std::vector<UserId> out;
  out.reserve(st.balances.size());
  for (const auto& [u, amount] : st.balances) {
    if (amount > 0) out.push_back(u);
  }
  return out;
}

bool is_user_at(const Chain& chain, Round r, UserId u) { return chain.status_after(r).balance(u) > 0; }

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::round_mismatch: return "round mismatch";
    case ViolationKind::prev_hash_mismatch: return "previous hash mismatch";
    case ViolationKind::insufficient_certificates: return "insufficient certificates";
    case ViolationKind::invalid_payset: return "invalid payset";
    case ViolationKind::seed_mismatch: return "seed mismatch";
  }
  return "unknown";
}

CertCheck check_cert_message(const CertMessage& msg, const Digest& digest, bool empty,
                             const Chain& chain, const ProtocolParams& params,
                             const KeyRegistry& keys) {
  Round r = chain.tip_round() + 1;
  if (msg.round != r) return CertCheck::wrong_round;
  if (msg.step < kSoftVoteStep || msg.step > params.max_step()) return CertCheck::bad_step;
  if (msg.block_digest != digest) return CertCheck::wrong_digest;
  if (msg.bit != (empty ? 1 : 0)) return CertCheck::wrong_bit;
  const auto& c = msg.credential;
  if (c.user != msg.voter || c.round != r || c.step != msg.step) return CertCheck::bad_credential;
  if (!verify_credential(c, chain.tip().seed, chain, params, keys)) return CertCheck::bad_credential;
  if (!keys.verify_ephemeral(msg.voter, r, msg.step, cert_payload(msg.bit, msg.block_digest), msg.sig)) {
    return CertCheck::bad_signature;
  }
  return CertCheck::ok;
}

std::size_t count_valid_certifiers(std::span<const CertMessage> cert, const Digest& digest,
                                   bool empty, const Chain& chain, const ProtocolParams& params,
                                   const KeyRegistry& keys) {
  std::set<UserId> voters;
  for (const auto& msg : cert) {
    if (voters.contains(msg.voter)) continue;
    if (check_cert_message(msg, digest, empty, chain, params, keys) == CertCheck::ok) {
      voters.insert(msg.voter);
    }
  }
  return voters.size();
}

std::vector<Violation> validate_block(const Chain& chain, const Block& b,
                                      const ProtocolParams& params, const KeyRegistry& keys) {
  std::vector<Violation> out;
  Round r = chain.tip_round() + 1;
  if (b.round != r) {
    out.push_back({ViolationKind::round_mismatch,
                   "expected round " + std::to_string(r) + ", got " + std::to_string(b.round)});
  }
  if (b.prev_hash != chain.tip_hash()) {
    out.push_back({ViolationKind::prev_hash_mismatch, "prev_hash does not match the predecessor"});
  }
  if (b.round != r) return out;

  Digest digest = block_hash(b);
  std::size_t certifiers = count_valid_certifiers(b.cert, digest, b.empty(), chain, params, keys);
  if (certifiers < params.t_H) {
    out.push_back({ViolationKind::insufficient_certificates,
                   "insufficient certificates: have " + std::to_string(certifiers) + ", need " +
                       std::to_string(params.t_H)});
  }

  try {
    (void)apply_payset(chain.tip_status(), b.payset, keys);
  } catch (const Error& e) {
    out.push_back({ViolationKind::invalid_payset, e.what()});
  }

  const Digest& prev_seed = chain.tip().seed;
  if (b.empty()) {
    if (b.seed != hash_seed_round(prev_seed, r)) {
      out.push_back({ViolationKind::seed_mismatch, "empty block seed must be H(prev_seed || round)"});
    }
  } else {
    auto eligible = users_at(chain, params.lookback(r));
    auto proposer = keys.identify_signer(eligible, prev_seed.view(), b.seed);
    // The proposer must also be a potential leader of round r.
    bool ok = proposer && keys.signature_unit(*proposer, sortition_message(r, kProposalStep, prev_seed)) <= params.p;
    if (!ok) {
      out.push_back({ViolationKind::seed_mismatch, "seed is not a potential leader's signature over the previous seed"});
    }
  }
  return out;
}

std::vector<ChainViolation> validate_blocks(const Status& genesis_status,
                                            std::span<const Block> blocks,
                                            const ProtocolParams& params, KeyRegistry& keys) {
  std::vector<ChainViolation> out;
  if (blocks.empty() || blocks[0].round != 0 || !blocks[0].payset.empty()) {
    out.push_back({0, {ViolationKind::round_mismatch, "chain must start with an empty round-0 genesis block"}});
    return out;
  }
  for (const auto& [u, amount] : genesis_status.balances) keys.register_user(u);
  Chain replay(genesis_status, blocks[0]);
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    auto found = validate_block(replay, b, params, keys);
    bool payset_ok = true;
    for (auto& v : found) {
      if (v.kind == ViolationKind::invalid_payset || v.kind == ViolationKind::round_mismatch) payset_ok = false;
      out.push_back({b.round, std::move(v)});
    }
    if (!payset_ok) break;
    replay.append(b, keys);
    for (const auto& p : b.payset) keys.register_user(p.payee);
  }
  return out;
}

std::vector<ChainViolation> validate_chain(const Chain& chain, const ProtocolParams& params,
                                           KeyRegistry& keys) {
  return validate_blocks(chain.genesis_status(), chain.blocks(), params, keys);
}

Preference chain_compare(const Chain& a, const Chain& b) {
  if (a.hash_at(0) != b.hash_at(0) || a.genesis_status().balances != b.genesis_status().balances) {
    throw Error(Errc::incompatible_genesis, "chains do not share a genesis block");
  }
  if (a.length() != b.length()) return a.length() > b.length() ? Preference::first : Preference::second;
  if (a.tip_hash() == b.tip_hash()) return Preference::equal;
  return a.tip_hash() < b.tip_hash() ? Preference::first : Preference::second;
}

}  // namespace algosim
