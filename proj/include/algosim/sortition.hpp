#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "algosim/ledger.hpp"
#include "algosim/params.hpp"
#include "algosim/types.hpp"

namespace algosim {

/// Bytes signed to obtain a credential: "LEAD" for step 1, "VERF" otherwise,
/// followed by round, step and the previous seed.
Bytes sortition_message(Round r, Step s, const Digest& prev_seed);

double credential_unit(const UniqueSignature& sig);

/// Whether u may serve in round r (u in PK^{lookback(r)}). `chain` must reach
/// at least the lookback round.
bool is_eligible(const Chain& chain, UserId u, Round r, const ProtocolParams& params);

/// Step-1 sortition. Returns nullopt when u is eligible but not selected and
/// throws not_eligible when u is outside PK^{r-k}.
std::optional<Credential> leader_credential(const Signer& signer, UserId user, Round r,
                                            const Digest& prev_seed, const Chain& chain,
                                            const ProtocolParams& params);

/// Step-s sortition (s >= 2) against p_prime.
std::optional<Credential> verifier_credential(const Signer& signer, UserId user, Round r, Step s,
                                              const Digest& prev_seed, const Chain& chain,
                                              const ProtocolParams& params);

/// Minimal unit wins; ties go to the smaller user id.
UserId select_leader(std::span<const Credential> credentials);

enum class CredentialReason { ok, unknown_user, bad_step, bad_signature, unit_mismatch, not_eligible, above_threshold };

struct CredentialCheck {
  bool ok = false;
  CredentialReason reason = CredentialReason::ok;
  explicit operator bool() const { return ok; }
};

std::string_view to_string(CredentialReason r);

CredentialCheck verify_credential(const Credential& c, const Digest& prev_seed, const Chain& chain,
                                  const ProtocolParams& params, const KeyRegistry& keys);

}  // namespace algosim
