#include "algosim/adversary.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include "algosim/error.hpp"

namespace algosim {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::honest: return "honest";
    case Strategy::genesis_fork: return "genesis_fork";
    case Strategy::bribery: return "bribery";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "honest") return Strategy::honest;
  if (text == "genesis_fork" || text == "genesis-fork") return Strategy::genesis_fork;
  if (text == "bribery") return Strategy::bribery;
  return std::nullopt;
}

void check_genesis_fork_budget(const Chain& chain, Round r1) {
  if (r1 > chain.tip_round()) {
    throw Error(Errc::precondition_violated, "fork round " + std::to_string(r1) + " is past the tip");
  }
  auto early = users_at(chain, r1).size();
  auto now = users_at(chain, chain.tip_round()).size();
  if (3 * early >= now) {
    throw Error(Errc::precondition_violated, "need 3*|PK^r1| < |PK^tip|, have 3*" + std::to_string(early) +
                                                 " >= " + std::to_string(now));
  }
}

namespace {

bool has_potential_leader(const Chain& chain, std::span<const UserId> candidates,
                          const ProtocolParams& params, const KeyRegistry& keys) {
  Round r = chain.tip_round() + 1;
  auto msg = sortition_message(r, kProposalStep, chain.tip().seed);
  for (UserId u : candidates) {
    if (is_eligible(chain, u, r, params) && keys.signature_unit(u, msg) <= params.p) return true;
  }
  return false;
}

/// Cert messages from corrupted verifiers over steps 2.., skipping keys that
/// were destroyed, until t_H distinct voters are found.
std::vector<CertMessage> forge_cert(const Signer& signer, const Chain& chain, std::span<const UserId> corrupted,
                                    const Block& b, const ProtocolParams& params, const KeyRegistry& keys) {
  Round r = b.round;
  Digest digest = block_hash(b);
  std::set<UserId> done;
  std::vector<CertMessage> cert;
  for (Step s = kSoftVoteStep; s <= params.max_step() && cert.size() < params.t_H; ++s) {
    for (UserId u : corrupted) {
      if (cert.size() >= params.t_H) break;
      if (done.contains(u) || !is_eligible(chain, u, r, params)) continue;
      if (keys.key_state(u, r, s) == KeyState::destroyed) continue;
      auto cred = verifier_credential(signer, u, r, s, chain.tip().seed, chain, params);
      if (!cred) continue;
      cert.push_back(make_cert_message(signer, std::nullopt, *cred, digest, b.empty()));
      done.insert(u);
    }
  }
  return cert;
}

}  // namespace

Chain fork_from(const Chain& chain, Round r1, const ProtocolParams& params, KeyRegistry& keys,
                ForkOptions options) {
  if (r1 > chain.tip_round()) {
    throw Error(Errc::precondition_violated, "fork round " + std::to_string(r1) + " is past the tip");
  }
  if (options.enforce_budget) check_genesis_fork_budget(chain, r1);

  const Round tip = chain.tip_round();
  auto corrupted = users_at(chain, r1);
  if (corrupted.empty()) throw Error(Errc::precondition_violated, "PK^r1 is empty");
  auto set = std::make_shared<std::set<UserId>>(corrupted.begin(), corrupted.end());
  Signer signer = keys.signer(Principal::adversary(set));

  std::vector<UserId> recipients;
  for (UserId u : users_at(chain, tip)) {
    if (!set->contains(u)) recipients.push_back(u);
  }
  const UserId a = corrupted[0];
  const UserId b = corrupted.size() > 1 ? corrupted[1] : corrupted[0];

  Chain fork = chain.prefix(r1);
  try {
    for (Round q = r1 + 1; q <= tip + 1; ++q) {
      const bool last = q == tip + 1;
      std::vector<Payment> payset;
      if (last && !recipients.empty()) {
        for (std::size_t i = 0; i < recipients.size(); ++i) {
          payset.push_back(make_payment(signer, corrupted[i % corrupted.size()], recipients[i], 1, q));
        }
      } else {
        payset.push_back(make_payment(signer, a, b, 1, q));
        payset.push_back(make_payment(signer, b, a, 1, q));
      }

      // Candidate blocks: one per corrupted potential leader by credential
      // order, then the empty block.
      std::vector<Credential> leaders;
      for (UserId u : corrupted) {
        if (!is_eligible(fork, u, q, params)) continue;
        if (auto c = leader_credential(signer, u, q, fork.tip().seed, fork, params)) leaders.push_back(*c);
      }
      std::sort(leaders.begin(), leaders.end(), [](const Credential& x, const Credential& y) {
        return std::tie(x.unit, x.user) < std::tie(y.unit, y.user);
      });
      std::vector<Block> candidates;
      for (const auto& c : leaders) {
        Block blk = empty_block_after(fork.tip(), fork.tip_hash());
        blk.payset = payset;
        blk.seed = hash(signer.unique_sign(c.user, fork.tip().seed.view()).view());
        candidates.push_back(std::move(blk));
      }
      if (!last) candidates.push_back(empty_block_after(fork.tip(), fork.tip_hash()));
      if (candidates.empty()) {
        throw Error(Errc::fork_infeasible, "no corrupted potential leader in round " + std::to_string(q));
      }

      // Pick a block whose seed leaves the next round with a potential leader.
      std::size_t pick = 0;
      if (!last) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          Chain next = fork;
          next.append(candidates[i], keys);
          if (has_potential_leader(next, corrupted, params, keys)) {
            pick = i;
            break;
          }
        }
      }
      Block chosen = std::move(candidates[pick]);
      chosen.cert = forge_cert(signer, fork, corrupted, chosen, params, keys);
      if (chosen.cert.size() < params.t_H) {
        throw Error(Errc::fork_infeasible, "round " + std::to_string(q) + ": " +
                                               std::to_string(chosen.cert.size()) + " corrupted certifiers, need " +
                                               std::to_string(params.t_H));
      }
      fork.append(std::move(chosen), keys);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::key_missing) throw Error(Errc::fork_infeasible, e.what());
    throw;
  }
  return fork;
}

std::vector<Credential> announce_roles(const Signer& signer, KeyPolicy policy, UserId node, Round r,
                                       const Chain& chain, const ProtocolParams& params) {
  if (policy != KeyPolicy::retain) {
    throw Error(Errc::precondition_violated, "node " + std::to_string(node.value) + " is not bribable");
  }
  if (chain.tip_round() + 1 != r) throw Error(Errc::precondition_violated, "chain tip must precede round r");
  std::vector<Credential> out;
  if (!is_eligible(chain, node, r, params)) return out;
  const Digest& q = chain.tip().seed;
  if (auto c = leader_credential(signer, node, r, q, chain, params)) out.push_back(*c);
  for (Step s = kSoftVoteStep; s <= params.max_step(); ++s) {
    if (auto c = verifier_credential(signer, node, r, s, q, chain, params)) out.push_back(*c);
  }
  return out;
}

std::variant<Block, AttackFailed> bribe_and_recertify(const Chain& chain, Round r,
                                                      std::span<const EphemeralKeyRecord> retained,
                                                      const ProtocolParams& params,
                                                      KeyRegistry& keys) {
  if (r < 1 || r >= chain.tip_round()) {
    throw Error(Errc::precondition_violated, "target round must be in [1, tip)");
  }
  const Chain prefix = chain.prefix(r - 1);
  const Digest& q = prefix.tip().seed;

  // First usable verifier step per bribed owner.
  std::map<UserId, Step> verifiers;
  std::set<UserId> bribed;
  for (const auto& rec : retained) {
    if (rec.round != r || rec.state != KeyState::retained) continue;
    if (keys.key_state(rec.owner, r, rec.step) != KeyState::retained) continue;
    bribed.insert(rec.owner);
    if (rec.step < kSoftVoteStep || rec.step > params.max_step() || verifiers.contains(rec.owner)) continue;
    if (!is_eligible(prefix, rec.owner, r, params)) continue;
    if (keys.signature_unit(rec.owner, sortition_message(r, rec.step, q)) > params.p_prime) continue;
    verifiers[rec.owner] = rec.step;
  }
  if (verifiers.size() < params.t_H) {
    return AttackFailed{verifiers.size(), params.t_H, "not enough retained verifier keys"};
  }

  auto set = std::make_shared<std::set<UserId>>(bribed);
  Signer signer = keys.signer(Principal::adversary(set));

  const Block& original = chain.block(r);
  Block alt = empty_block_after(prefix.tip(), prefix.tip_hash());
  if (original.empty()) {
    std::optional<Credential> best;
    for (UserId u : bribed) {
      if (!is_eligible(prefix, u, r, params)) continue;
      auto c = leader_credential(signer, u, r, q, prefix, params);
      if (c && (!best || std::tie(c->unit, c->user) < std::tie(best->unit, best->user))) best = c;
    }
    if (!best) return AttackFailed{verifiers.size(), params.t_H, "no bribed potential leader for a non-empty block"};
    alt.payset.push_back(make_payment(signer, best->user, best->user, 1, r));
    alt.seed = hash(signer.unique_sign(best->user, q.view()).view());
  }

  Digest digest = block_hash(alt);
  for (const auto& [u, s] : verifiers) {
    auto cred = verifier_credential(signer, u, r, s, q, prefix, params);
    alt.cert.push_back(make_cert_message(signer, std::nullopt, *cred, digest, alt.empty()));
  }
  return alt;
}

}  // namespace algosim
