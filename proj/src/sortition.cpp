#include "algosim/sortition.hpp"

#include <algorithm>

#include "algosim/error.hpp"

namespace algosim {

Bytes sortition_message(Round r, Step s, const Digest& prev_seed) {
  return Encoder()
      .raw(s == kProposalStep ? tag::leader : tag::verifier)
      .u64(r)
      .u64(s)
      .field(prev_seed)
      .bytes();
}

double credential_unit(const UniqueSignature& sig) { return hash_to_unit(hash(sig.view())); }

bool is_eligible(const Chain& chain, UserId u, Round r, const ProtocolParams& params) {
  Round back = params.lookback(r);
  if (back > chain.tip_round()) return false;
  return is_user_at(chain, back, u);
}

namespace {

std::optional<Credential> draw(const Signer& signer, UserId user, Round r, Step s,
                               const Digest& prev_seed, const Chain& chain,
                               const ProtocolParams& params, double threshold) {
  if (!is_eligible(chain, user, r, params)) {
    throw Error(Errc::not_eligible, "user " + std::to_string(user.value) + " cannot serve in round " +
                                        std::to_string(r));
  }
  Credential c{user, r, s, signer.unique_sign(user, sortition_message(r, s, prev_seed)), 0.0};
  c.unit = credential_unit(c.sig);
  if (c.unit > threshold) return std::nullopt;
  return c;
}

}  // namespace

std::optional<Credential> leader_credential(const Signer& signer, UserId user, Round r,
                                            const Digest& prev_seed, const Chain& chain,
                                            const ProtocolParams& params) {
  return draw(signer, user, r, kProposalStep, prev_seed, chain, params, params.p);
}

std::optional<Credential> verifier_credential(const Signer& signer, UserId user, Round r, Step s,
                                              const Digest& prev_seed, const Chain& chain,
                                              const ProtocolParams& params) {
  if (s < kSoftVoteStep) throw Error(Errc::precondition_violated, "verifier steps start at 2");
  return draw(signer, user, r, s, prev_seed, chain, params, params.p_prime);
}

UserId select_leader(std::span<const Credential> credentials) {
  if (credentials.empty()) throw Error(Errc::empty_input, "no credentials");
  auto best = std::min_element(credentials.begin(), credentials.end(), [](const auto& a, const auto& b) {
    return a.unit != b.unit ? a.unit < b.unit : a.user < b.user;
  });
  return best->user;
}

std::string_view to_string(CredentialReason r) {
  switch (r) {
    case CredentialReason::ok: return "ok";
    case CredentialReason::unknown_user: return "unknown-user";
    case CredentialReason::bad_step: return "bad-step";
    case CredentialReason::bad_signature: return "bad-signature";
    case CredentialReason::unit_mismatch: return "unit-mismatch";
    case CredentialReason::not_eligible: return "not-eligible";
    case CredentialReason::above_threshold: return "above-threshold";
  }
  return "unknown";
}

CredentialCheck verify_credential(const Credential& c, const Digest& prev_seed, const Chain& chain,
                                  const ProtocolParams& params, const KeyRegistry& keys) {
  auto fail = [](CredentialReason why) { return CredentialCheck{false, why}; };
  if (!keys.is_registered(c.user)) return fail(CredentialReason::unknown_user);
  if (c.step < kProposalStep || c.step > params.max_step()) return fail(CredentialReason::bad_step);
  if (!keys.verify_unique(c.user, sortition_message(c.round, c.step, prev_seed), c.sig)) {
    return fail(CredentialReason::bad_signature);
  }
  double unit = credential_unit(c.sig);
  if (unit != c.unit) return fail(CredentialReason::unit_mismatch);
  if (!is_eligible(chain, c.user, c.round, params)) return fail(CredentialReason::not_eligible);
  double threshold = c.step == kProposalStep ? params.p : params.p_prime;
  if (unit > threshold) return fail(CredentialReason::above_threshold);
  return {true, CredentialReason::ok};
}

}  // namespace algosim
