#pragma once

// Synchronous in-process network. Everything queued during a step is in the
// recipients' inboxes after the next call to step().

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <variant>
#include <vector>

#include "algosim/consensus.hpp"

namespace algosim {

using Payload = std::variant<std::shared_ptr<const ProposalMessage>, std::shared_ptr<const SoftVote>,
                             std::shared_ptr<const GCRelay>, std::shared_ptr<const BbaMessage>,
                             std::shared_ptr<const CertMessage>>;

enum class MessageKind { proposal, soft_vote, relay, bba, cert };

std::string_view to_string(MessageKind k);
MessageKind kind_of(const Payload& p);
/// Step 1 carries proposals, step 2 soft votes, step 3 relays, steps >= 4
/// BBA messages. Certificates may travel at any step >= 2.
bool kind_allowed(Step s, MessageKind k);

template <typename T>
Payload make_payload(T msg) {
  return std::make_shared<const T>(std::move(msg));
}

struct Envelope {
  UserId sender;
  Round round = 0;
  Step step = 0;
  Payload payload;
  std::uint64_t delivery_step = 0;
  std::uint64_t seq = 0;  // enqueue order, unique per network
};

struct DeliveryRecord {
  std::uint64_t delivery_step;
  std::uint64_t seq;
  UserId sender;
  UserId recipient;
  Round round;
  Step step;
  MessageKind kind;

  friend bool operator==(const DeliveryRecord&, const DeliveryRecord&) = default;
};

class Network {
 public:
  explicit Network(bool keep_log = false) : keep_log_(keep_log) {}

  void add_node(UserId u) { nodes_.insert(u); }
  bool has_node(UserId u) const { return nodes_.contains(u); }
  std::size_t node_count() const { return nodes_.size(); }

  /// Queues `payload` for every node. Throws precondition_violated when the
  /// sender is unknown or the payload kind does not belong to `step`.
  void broadcast(UserId sender, Round round, Step step, Payload payload);

  /// Equivocation hook: queues `payload` for the listed recipients only.
  void send_to(UserId sender, Round round, Step step, Payload payload,
               const std::vector<UserId>& recipients);

  /// Delivers everything queued and returns the number of (envelope,
  /// recipient) deliveries.
  std::size_t step();

  std::uint64_t current_step() const { return clock_; }

  /// Envelopes delivered to `node` by the last step(), ordered by (sender, seq).
  std::vector<const Envelope*> inbox(UserId node) const;
  /// Broadcast envelopes of the last step(), ordered by (sender, seq).
  const std::vector<Envelope>& delivered_broadcasts() const { return delivered_; }

  const std::vector<DeliveryRecord>& delivery_log() const { return log_; }
  void write_log(std::ostream& out) const;

 private:
  struct Targeted {
    Envelope env;
    std::vector<UserId> recipients;
  };

  Envelope make_envelope(UserId sender, Round round, Step step, Payload payload);

  bool keep_log_;
  std::set<UserId> nodes_;
  std::uint64_t clock_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<Envelope> queued_;
  std::vector<Targeted> queued_targeted_;
  std::vector<Envelope> delivered_;
  std::vector<Targeted> delivered_targeted_;
  std::vector<DeliveryRecord> log_;
};

}  // namespace algosim
