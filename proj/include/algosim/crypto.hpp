#pragma once

// Simulated cryptographic primitives. The digest is real SHA-256; signatures
// are keyed digests checked by a trusted per-run registry, which makes the
// uniqueness property hold by construction.

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace algosim {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Round = std::uint64_t;
using Step = std::uint32_t;
using Amount = std::uint64_t;

struct UserId {
  std::uint64_t value = 0;
  friend auto operator<=>(const UserId&, const UserId&) = default;
};

/// Fixed-width 32-byte value used for digests and signatures alike.
template <typename Tag>
struct Bytes32 {
  std::array<std::uint8_t, 32> bytes{};

  ByteView view() const { return {bytes.data(), bytes.size()}; }
  std::string hex() const;
  static Bytes32 from_hex(std::string_view hex);

  friend auto operator<=>(const Bytes32&, const Bytes32&) = default;
};

struct DigestTag {};
struct SignatureTag {};
using Digest = Bytes32<DigestTag>;
using UniqueSignature = Bytes32<SignatureTag>;

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

/// Domain-separation prefixes, each exactly four ASCII bytes.
namespace tag {
inline constexpr std::string_view leader = "LEAD";
inline constexpr std::string_view verifier = "VERF";
inline constexpr std::string_view block = "BLK ";
inline constexpr std::string_view payment = "PAY ";
inline constexpr std::string_view ephemeral = "EPH ";
inline constexpr std::string_view public_key = "PUBK";
inline constexpr std::string_view key_seed = "KEYS";
inline constexpr std::string_view genesis = "GENS";
}  // namespace tag

/// Canonical serialization: every field is a 4-byte big-endian length followed
/// by its payload; integers are 8-byte big-endian payloads; lists are a count
/// field followed by one length-prefixed field per element.
class Encoder {
 public:
  Encoder& raw(std::string_view ascii);
  Encoder& raw(ByteView bytes);
  Encoder& u64(std::uint64_t v);
  Encoder& user(UserId u) { return u64(u.value); }
  Encoder& field(ByteView bytes);
  template <typename T>
  Encoder& field(const Bytes32<T>& b) { return field(b.view()); }
  Encoder& nested(const Encoder& inner) { return field(inner.view()); }

  ByteView view() const { return {buf_.data(), buf_.size()}; }
  const Bytes& bytes() const { return buf_; }

 private:
  Bytes buf_;
};

void append_be64(Bytes& out, std::uint64_t v);

Digest hash(ByteView data);
inline Digest hash(const Encoder& e) { return hash(e.view()); }
Digest hash(std::string_view text);

/// First eight bytes big-endian, divided by 2^64. Realizes the 0.H(.) notation.
double hash_to_unit(const Digest& d);

/// hash(Q || r) with r as 8 big-endian bytes.
Digest hash_seed_round(const Digest& seed, std::uint64_t r);

enum class KeyState { available, destroyed, retained };
enum class KeyPolicy { honest, retain };

std::string_view to_string(KeyState s);

struct LongTermKey {
  UserId owner;
  Digest secret_seed;
  Digest public_handle;
};

struct EphemeralKeyRecord {
  UserId owner;
  Round round = 0;
  Step step = 0;
  KeyState state = KeyState::available;
  Digest secret_seed;

  friend bool operator<(const EphemeralKeyRecord& a, const EphemeralKeyRecord& b) {
    return std::tie(a.owner, a.round, a.step) < std::tie(b.owner, b.round, b.step);
  }
};

/// Who is asking the registry to sign. A node may sign only for itself; the
/// adversary only for the users it has corrupted.
class Principal {
 public:
  enum class Kind { node, adversary };

  static Principal node(UserId self) { return Principal(Kind::node, self, nullptr); }
  static Principal adversary(std::shared_ptr<const std::set<UserId>> corrupted) {
    return Principal(Kind::adversary, UserId{}, std::move(corrupted));
  }

  Kind kind() const { return kind_; }
  bool controls(UserId u) const;

 private:
  Principal(Kind k, UserId self, std::shared_ptr<const std::set<UserId>> corrupted)
      : kind_(k), self_(self), corrupted_(std::move(corrupted)) {}

  Kind kind_;
  UserId self_;
  std::shared_ptr<const std::set<UserId>> corrupted_;
};

struct SignAuditEntry {
  Principal::Kind principal;
  UserId user;
  bool ephemeral = false;
  Round round = 0;
  Step step = 0;
  KeyState state_at_sign = KeyState::available;
};

class Signer;

/// Per-run trusted key store. Long-term keys are derived from the run's key
/// seed; ephemeral keys are provisioned for every (user, round <= horizon,
/// step <= max_step) at registration and materialized on first touch.
class KeyRegistry {
 public:
  KeyRegistry(std::uint64_t key_seed, Round horizon, Step max_step);

  void register_user(UserId u);
  bool is_registered(UserId u) const { return users_.contains(u.value); }
  std::uint64_t key_seed() const { return key_seed_; }
  Round horizon() const { return horizon_; }
  Step max_step() const { return max_step_; }

  const LongTermKey& long_term_key(UserId u) const;
  Digest public_handle(UserId u) const;

  bool verify_unique(UserId owner, ByteView message, const UniqueSignature& sig) const;
  bool verify_ephemeral(UserId owner, Round r, Step s, ByteView message,
                        const UniqueSignature& sig) const;

  /// The candidate whose unique signature on `message` hashes to `sig_digest`,
  /// if any. Lets validators check seeds without exposing signatures.
  std::optional<UserId> identify_signer(std::span<const UserId> candidates, ByteView message,
                                        const Digest& sig_digest) const;

  /// hash_to_unit(hash(sig)) for u's unique signature on `message`, i.e. the
  /// sortition value a published credential would carry.
  double signature_unit(UserId u, ByteView message) const;

  EphemeralKeyRecord ephemeral_record(UserId owner, Round r, Step s) const;
  KeyState key_state(UserId owner, Round r, Step s) const;
  std::vector<EphemeralKeyRecord> retained_records(Round r) const;

  Signer signer(Principal who);
  Signer node_signer(UserId self);

  const std::vector<SignAuditEntry>& audit_log() const { return audit_; }

 private:
  friend class Signer;

  struct KeyId {
    std::uint64_t user;
    Round round;
    Step step;
    friend bool operator==(const KeyId&, const KeyId&) = default;
  };
  struct KeyIdHash {
    std::size_t operator()(const KeyId& k) const noexcept;
  };

  void check_provisioned(UserId owner, Round r, Step s) const;
  Digest ephemeral_secret(UserId owner, Round r, Step s) const;
  UniqueSignature compute_unique(UserId owner, ByteView message) const;
  UniqueSignature compute_ephemeral(UserId owner, Round r, Step s, ByteView message) const;

  std::uint64_t key_seed_;
  Round horizon_;
  Step max_step_;
  std::unordered_map<std::uint64_t, LongTermKey> users_;
  std::unordered_map<KeyId, KeyState, KeyIdHash> states_;
  std::vector<SignAuditEntry> audit_;
};

/// Signing capability bound to a principal. Every call is checked against the
/// principal and recorded in the registry's audit log.
class Signer {
 public:
  UniqueSignature unique_sign(UserId user, ByteView message) const;
  UniqueSignature ephemeral_sign(UserId user, Round r, Step s, ByteView message) const;
  KeyState destroy_ephemeral(UserId user, Round r, Step s, KeyPolicy policy) const;

  const Principal& principal() const { return principal_; }
  const KeyRegistry& registry() const { return *registry_; }

 private:
  friend class KeyRegistry;
  Signer(KeyRegistry& reg, Principal who) : registry_(&reg), principal_(std::move(who)) {}
  void authorize(UserId user) const;

  KeyRegistry* registry_;
  Principal principal_;
};

}  // namespace algosim

template <>
struct std::hash<algosim::UserId> {
  std::size_t operator()(const algosim::UserId& u) const noexcept {
    return std::hash<std::uint64_t>{}(u.value);
  }
};

template <typename T>
struct std::hash<algosim::Bytes32<T>> {
  std::size_t operator()(const algosim::Bytes32<T>& d) const noexcept {
    std::size_t h = 0;
    for (int i = 0; i < 8; ++i) h = (h << 8) | d.bytes[i];
    return h;
  }
};
