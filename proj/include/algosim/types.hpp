#pragma once

// Plain data shared by the ledger, sortition and consensus layers.

#include <cstdint>
#include <optional>
#include <vector>

#include "algosim/crypto.hpp"

namespace algosim {

/// SIG_payer("PAY ", payer, payee, amount, round). Only valid inside the block
/// of the round it was signed for.
struct Payment {
  UserId payer;
  UserId payee;
  Amount amount = 0;
  UniqueSignature sig;

  friend bool operator==(const Payment&, const Payment&) = default;
};

/// Sortition proof for (user, round, step). `unit` is derived from `sig` and
/// is never trusted on input; verifiers recompute it.
struct Credential {
  UserId user;
  Round round = 0;
  Step step = 0;
  UniqueSignature sig;
  double unit = 0.0;

  friend bool operator==(const Credential&, const Credential&) = default;
};

/// Certificate-format message: bit is 1 iff the certified block is empty.
struct CertMessage {
  UserId voter;
  Round round = 0;
  Step step = 0;
  std::uint8_t bit = 0;
  Digest block_digest;
  UniqueSignature sig;
  Credential credential;

  friend bool operator==(const CertMessage&, const CertMessage&) = default;
};

struct Block {
  Round round = 0;
  std::vector<Payment> payset;
  Digest seed;
  Digest prev_hash;
  std::vector<CertMessage> cert;

  bool empty() const { return payset.empty(); }
  friend bool operator==(const Block&, const Block&) = default;
};

}  // namespace algosim
