#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "algosim/consensus.hpp"

namespace algosim {

enum class Strategy { honest, genesis_fork, bribery };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view text);

struct AdversaryConfig {
  Strategy strategy = Strategy::honest;
  Round fork_round = 0;             // genesis_fork: r1
  double retention_fraction = 0.0;  // bribery: share of nodes that keep their keys
  Round target_round = 0;           // bribery: round to re-certify
};

/// Throws precondition_violated unless 3 * |PK^{r1}| < |PK^{tip}|.
void check_genesis_fork_budget(const Chain& chain, Round r1);

struct ForkOptions {
  bool enforce_budget = true;
};

/// Rebuilds the chain from B^{r1} with every user of PK^{r1} corrupted and
/// returns B^0..B^{r1}, B'^{r1+1}..B'^{tip+1}. Throws fork_infeasible when a
/// forged round cannot be certified or the last round has no leader.
Chain fork_from(const Chain& chain, Round r1, const ProtocolParams& params, KeyRegistry& keys,
                ForkOptions options = {});

/// The node's credentials for every step of round r it is selected for.
/// Requires a retaining node; chain's tip must be round r - 1.
std::vector<Credential> announce_roles(const Signer& signer, KeyPolicy policy, UserId node, Round r,
                                       const Chain& chain, const ProtocolParams& params);

struct AttackFailed {
  std::size_t have = 0;
  std::size_t need = 0;
  std::string reason;
};

/// Builds an alternative block for round r (r < tip) and certifies it with
/// the retained keys of genuine verifiers of that round.
std::variant<Block, AttackFailed> bribe_and_recertify(const Chain& chain, Round r,
                                                      std::span<const EphemeralKeyRecord> retained,
                                                      const ProtocolParams& params,
                                                      KeyRegistry& keys);

}  // namespace algosim
