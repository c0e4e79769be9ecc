#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "algosim/crypto.hpp"
#include "algosim/params.hpp"
#include "algosim/types.hpp"

namespace algosim {

/// Balances before the payset of `round` is applied. Users with a zero
/// balance are not stored.
struct Status {
  Round round = 0;
  std::map<UserId, Amount> balances;

  Amount balance(UserId u) const;
  Amount total() const;
  bool has_user(UserId u) const { return balances.contains(u); }

  friend bool operator==(const Status&, const Status&) = default;
};

Bytes payment_message(UserId payer, UserId payee, Amount amount, Round round);
Payment make_payment(const Signer& signer, UserId payer, UserId payee, Amount amount, Round round);
bool verify_payment(const Payment& p, Round round, const KeyRegistry& keys);

/// S^r -> S^{r+1}. Payments apply sequentially in list order; payees that do
/// not exist yet are created. Throws invalid_signature or insufficient_funds
/// with the index of the offending payment.
Status apply_payset(const Status& status, std::span<const Payment> payset, const KeyRegistry& keys);

/// Bytes covered by a certificate message signature.
Bytes cert_payload(std::uint8_t bit, const Digest& block_digest);

Encoder encode_payment(const Payment& p);
/// Digest over (round, payset, seed, prev_hash). The certificate is excluded.
Digest block_hash(const Block& b);

Block genesis_block(const Digest& genesis_seed);
/// The empty block for round prev.round + 1 on top of `prev`.
Block empty_block_after(const Block& prev, const Digest& prev_digest);

class Chain {
 public:
  Chain(Status genesis_status, Block genesis);

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(Round r) const;
  const Block& tip() const { return blocks_.back(); }
  Round tip_round() const { return blocks_.back().round; }
  std::size_t length() const { return blocks_.size(); }
  const Digest& hash_at(Round r) const;
  const Digest& tip_hash() const { return hashes_.back(); }

  const Status& genesis_status() const { return genesis_status_; }
  /// Balances after the payset of round r has been applied (S^{r+1}).
  const Status& status_after(Round r) const;
  const Status& tip_status() const { return statuses_.back(); }

  /// Appends b without checking its certificate; the payset must apply.
  void append(Block b, const KeyRegistry& keys);
  /// B^0 .. B^r
  Chain prefix(Round r) const;

 private:
  Status genesis_status_;
  std::vector<Block> blocks_;
  std::vector<Digest> hashes_;
  std::vector<Status> statuses_;
};

Chain make_genesis_chain(const Status& genesis_status, const Digest& genesis_seed);

/// PK^r: users with positive balance after the payset of round r.
std::vector<UserId> users_at(const Chain& chain, Round r);
bool is_user_at(const Chain& chain, Round r, UserId u);

enum class ViolationKind {
  round_mismatch,
  prev_hash_mismatch,
  insufficient_certificates,
  invalid_payset,
  seed_mismatch,
};

struct Violation {
  ViolationKind kind;
  std::string detail;
};

std::string_view to_string(ViolationKind k);

/// Reasons a single certificate message is rejected.
enum class CertCheck { ok, wrong_round, bad_step, wrong_digest, wrong_bit, bad_credential, bad_signature };

/// Checks one certificate message against the chain whose tip precedes the
/// certified block.
CertCheck check_cert_message(const CertMessage& msg, const Digest& digest, bool empty,
                             const Chain& chain, const ProtocolParams& params,
                             const KeyRegistry& keys);

/// Number of distinct voters among the valid messages of `cert`.
std::size_t count_valid_certifiers(std::span<const CertMessage> cert, const Digest& digest,
                                   bool empty, const Chain& chain, const ProtocolParams& params,
                                   const KeyRegistry& keys);

/// Checks b as the successor of chain's tip. Returns every violation found.
std::vector<Violation> validate_block(const Chain& chain, const Block& b,
                                      const ProtocolParams& params, const KeyRegistry& keys);

struct ChainViolation {
  Round round;
  Violation violation;
};

/// Replays the chain from genesis, validating each block against its prefix
/// and registering payees in `keys` as they appear.
std::vector<ChainViolation> validate_chain(const Chain& chain, const ProtocolParams& params,
                                           KeyRegistry& keys);

/// Same as validate_chain for blocks that may not even form a Chain (e.g. a
/// payset that does not apply). Stops at the first block whose payset fails.
std::vector<ChainViolation> validate_blocks(const Status& genesis_status,
                                            std::span<const Block> blocks,
                                            const ProtocolParams& params, KeyRegistry& keys);

enum class Preference { first, second, equal };

/// Longer chain wins; equal lengths break ties on the smaller tip hash.
Preference chain_compare(const Chain& a, const Chain& b);

}  // namespace algosim
