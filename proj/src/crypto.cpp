#include "algosim/crypto.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cstring>

#include "algosim/error.hpp"

namespace algosim {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::unauthorized_signer: return "unauthorized-signer";
    case Errc::unknown_user: return "unknown-user";
    case Errc::key_destroyed: return "key-destroyed";
    case Errc::key_missing: return "key-missing";
    case Errc::invalid_transition: return "invalid-transition";
    case Errc::invalid_signature: return "invalid-signature";
    case Errc::insufficient_funds: return "insufficient-funds";
    case Errc::round_out_of_range: return "round-out-of-range";
    case Errc::incompatible_genesis: return "incompatible-genesis";
    case Errc::not_eligible: return "not-eligible";
    case Errc::empty_input: return "empty-input";
    case Errc::precondition_violated: return "precondition-violated";
    case Errc::fork_infeasible: return "fork-infeasible";
    case Errc::config_invalid: return "config-invalid";
    case Errc::parse_error: return "parse-error";
  }
  return "unknown";
}

std::string_view to_string(KeyState s) {
  switch (s) {
    case KeyState::available: return "available";
    case KeyState::destroyed: return "destroyed";
    case KeyState::retained: return "retained";
  }
  return "unknown";
}

std::string to_hex(ByteView bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::parse_error, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(hex[2 * i]);
    int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::parse_error, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

template <typename Tag>
std::string Bytes32<Tag>::hex() const {
  return to_hex(view());
}

template <typename Tag>
Bytes32<Tag> Bytes32<Tag>::from_hex(std::string_view hex) {
  auto raw = algosim::from_hex(hex);
  if (raw.size() != 32) throw Error(Errc::parse_error, "expected 32 bytes of hex");
  Bytes32 out;
  std::copy(raw.begin(), raw.end(), out.bytes.begin());
  return out;
}

template struct Bytes32<DigestTag>;
template struct Bytes32<SignatureTag>;

void append_be64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

Encoder& Encoder::raw(std::string_view ascii) {
  buf_.insert(buf_.end(), ascii.begin(), ascii.end());
  return *this;
}

Encoder& Encoder::raw(ByteView bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  return *this;
}

Encoder& Encoder::field(ByteView bytes) {
  auto n = static_cast<std::uint32_t>(bytes.size());
  for (int shift = 24; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(n >> shift));
  return raw(bytes);
}

Encoder& Encoder::u64(std::uint64_t v) {
  std::uint8_t be[8];
  for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
  return field(ByteView{be, 8});
}

Digest hash(ByteView data) {
  Digest d;
  SHA256(data.data(), data.size(), d.bytes.data());
  return d;
}

Digest hash(std::string_view text) {
  return hash(ByteView{reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

double hash_to_unit(const Digest& d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d.bytes[i];
  return static_cast<double>(v) * 0x1p-64;
}

Digest hash_seed_round(const Digest& seed, std::uint64_t r) {
  Bytes buf(seed.bytes.begin(), seed.bytes.end());
  append_be64(buf, r);
  return hash(buf);
}

bool Principal::controls(UserId u) const {
  if (kind_ == Kind::node) return u == self_;
  return corrupted_ && corrupted_->contains(u);
}

std::size_t KeyRegistry::KeyIdHash::operator()(const KeyId& k) const noexcept {
  std::size_t h = k.user * 0x9E3779B97F4A7C15ULL;
  h ^= (k.round + 0x7F4A7C15ULL) * 0xBF58476D1CE4E5B9ULL;
  h ^= (static_cast<std::size_t>(k.step) + 0x94D049BBULL) * 0x94D049BB133111EBULL;
  return h;
}

KeyRegistry::KeyRegistry(std::uint64_t key_seed, Round horizon, Step max_step)
    : key_seed_(key_seed), horizon_(horizon), max_step_(max_step) {}

void KeyRegistry::register_user(UserId u) {
  if (users_.contains(u.value)) return;
  LongTermKey key;
  key.owner = u;
  key.secret_seed = hash(Encoder().raw(tag::key_seed).u64(key_seed_).user(u));
  key.public_handle = hash(Encoder().raw(tag::public_key).user(u));
  users_.emplace(u.value, key);
}

const LongTermKey& KeyRegistry::long_term_key(UserId u) const {
  auto it = users_.find(u.value);
  if (it == users_.end()) throw Error(Errc::unknown_user, "user " + std::to_string(u.value));
  return it->second;
}

Digest KeyRegistry::public_handle(UserId u) const { return long_term_key(u).public_handle; }

UniqueSignature KeyRegistry::compute_unique(UserId owner, ByteView message) const {
  const auto& key = long_term_key(owner);
  Bytes buf;
  buf.reserve(32 + message.size());
  buf.insert(buf.end(), key.secret_seed.bytes.begin(), key.secret_seed.bytes.end());
  buf.insert(buf.end(), message.begin(), message.end());
  UniqueSignature sig;
  sig.bytes = hash(buf).bytes;
  return sig;
}

void KeyRegistry::check_provisioned(UserId owner, Round r, Step s) const {
  if (!is_registered(owner) || r < 1 || r > horizon_ || s < 1 || s > max_step_) {
    throw Error(Errc::key_missing, "no ephemeral key for user " + std::to_string(owner.value) +
                                       " round " + std::to_string(r) + " step " + std::to_string(s));
  }
}

Digest KeyRegistry::ephemeral_secret(UserId owner, Round r, Step s) const {
  const auto& key = long_term_key(owner);
  return hash(Encoder().raw(tag::ephemeral).field(key.secret_seed).u64(r).u64(s));
}

UniqueSignature KeyRegistry::compute_ephemeral(UserId owner, Round r, Step s,
                                               ByteView message) const {
  auto secret = ephemeral_secret(owner, r, s);
  Bytes buf;
  buf.reserve(32 + message.size());
  buf.insert(buf.end(), secret.bytes.begin(), secret.bytes.end());
  buf.insert(buf.end(), message.begin(), message.end());
  UniqueSignature sig;
  sig.bytes = hash(buf).bytes;
  return sig;
}

bool KeyRegistry::verify_unique(UserId owner, ByteView message, const UniqueSignature& sig) const {
  return compute_unique(owner, message) == sig;
}

bool KeyRegistry::verify_ephemeral(UserId owner, Round r, Step s, ByteView message,
                                   const UniqueSignature& sig) const {
  if (!is_registered(owner) || r < 1 || r > horizon_ || s < 1 || s > max_step_) return false;
  return compute_ephemeral(owner, r, s, message) == sig;
}

std::optional<UserId> KeyRegistry::identify_signer(std::span<const UserId> candidates,
                                                   ByteView message, const Digest& sig_digest) const {
  for (auto u : candidates) {
    if (!is_registered(u)) continue;
    if (hash(compute_unique(u, message).view()) == sig_digest) return u;
  }
  return std::nullopt;
}

double KeyRegistry::signature_unit(UserId u, ByteView message) const {
  return hash_to_unit(hash(compute_unique(u, message).view()));
}

KeyState KeyRegistry::key_state(UserId owner, Round r, Step s) const {
  check_provisioned(owner, r, s);
  auto it = states_.find(KeyId{owner.value, r, s});
  return it == states_.end() ? KeyState::available : it->second;
}

EphemeralKeyRecord KeyRegistry::ephemeral_record(UserId owner, Round r, Step s) const {
  EphemeralKeyRecord rec;
  rec.owner = owner;
  rec.round = r;
  rec.step = s;
  rec.state = key_state(owner, r, s);
  rec.secret_seed = ephemeral_secret(owner, r, s);
  return rec;
}

std::vector<EphemeralKeyRecord> KeyRegistry::retained_records(Round r) const {
  std::vector<EphemeralKeyRecord> out;
  for (const auto& [id, state] : states_) {
    if (id.round == r && state == KeyState::retained) {
      out.push_back(ephemeral_record(UserId{id.user}, id.round, id.step));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Signer KeyRegistry::signer(Principal who) { return Signer(*this, std::move(who)); }

Signer KeyRegistry::node_signer(UserId self) { return Signer(*this, Principal::node(self)); }

void Signer::authorize(UserId user) const {
  if (!principal_.controls(user)) {
    throw Error(Errc::unauthorized_signer, "principal does not control user " + std::to_string(user.value));
  }
}

UniqueSignature Signer::unique_sign(UserId user, ByteView message) const {
  authorize(user);
  auto sig = registry_->compute_unique(user, message);
  registry_->audit_.push_back({principal_.kind(), user, false, 0, 0, KeyState::available});
  return sig;
}

UniqueSignature Signer::ephemeral_sign(UserId user, Round r, Step s, ByteView message) const {
  authorize(user);
  auto state = registry_->key_state(user, r, s);
  if (state == KeyState::destroyed) {
    throw Error(Errc::key_destroyed, "ephemeral key of user " + std::to_string(user.value) +
                                         " round " + std::to_string(r) + " step " + std::to_string(s));
  }
  auto sig = registry_->compute_ephemeral(user, r, s, message);
  registry_->audit_.push_back({principal_.kind(), user, true, r, s, state});
  return sig;
}

KeyState Signer::destroy_ephemeral(UserId user, Round r, Step s, KeyPolicy policy) const {
  authorize(user);
  auto current = registry_->key_state(user, r, s);
  KeyState next = current;
  switch (current) {
    case KeyState::available:
      next = policy == KeyPolicy::honest ? KeyState::destroyed : KeyState::retained;
      break;
    case KeyState::destroyed:
      if (policy == KeyPolicy::retain) throw Error(Errc::invalid_transition, "destroyed key cannot be retained");
      break;
    case KeyState::retained:
      if (policy == KeyPolicy::honest) throw Error(Errc::invalid_transition, "retained key cannot be destroyed");
      break;
  }
  if (next != current) registry_->states_[KeyRegistry::KeyId{user.value, r, s}] = next;
  return next;
}

}  // namespace algosim
