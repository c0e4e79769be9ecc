#include "algosim/netsim.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "algosim/error.hpp"

namespace algosim {

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::proposal: return "proposal";
    case MessageKind::soft_vote: return "soft_vote";
    case MessageKind::relay: return "relay";
    case MessageKind::bba: return "bba";
    case MessageKind::cert: return "cert";
  }
  return "unknown";
}

MessageKind kind_of(const Payload& p) { return static_cast<MessageKind>(p.index()); }

bool kind_allowed(Step s, MessageKind k) {
  if (k == MessageKind::cert) return s >= kSoftVoteStep;
  switch (s) {
    case kProposalStep: return k == MessageKind::proposal;
    case kSoftVoteStep: return k == MessageKind::soft_vote;
    case kRelayStep: return k == MessageKind::relay;
    default: return s >= kGradeStep && k == MessageKind::bba;
  }
}

Envelope Network::make_envelope(UserId sender, Round round, Step step, Payload payload) {
  if (!nodes_.contains(sender)) {
    throw Error(Errc::precondition_violated, "unknown sender " + std::to_string(sender.value));
  }
  MessageKind k = kind_of(payload);
  if (!kind_allowed(step, k)) {
    throw Error(Errc::precondition_violated,
                std::string(to_string(k)) + " message not allowed at step " + std::to_string(step));
  }
  return Envelope{sender, round, step, std::move(payload), clock_ + 1, next_seq_++};
}

void Network::broadcast(UserId sender, Round round, Step step, Payload payload) {
  queued_.push_back(make_envelope(sender, round, step, std::move(payload)));
}

void Network::send_to(UserId sender, Round round, Step step, Payload payload,
                      const std::vector<UserId>& recipients) {
  Targeted t{make_envelope(sender, round, step, std::move(payload)), {}};
  for (UserId u : recipients) {
    if (nodes_.contains(u)) t.recipients.push_back(u);
  }
  std::sort(t.recipients.begin(), t.recipients.end());
  t.recipients.erase(std::unique(t.recipients.begin(), t.recipients.end()), t.recipients.end());
  queued_targeted_.push_back(std::move(t));
}

namespace {
bool by_sender_seq(const Envelope& a, const Envelope& b) {
  return std::tie(a.sender, a.seq) < std::tie(b.sender, b.seq);
}
}  // namespace

std::size_t Network::step() {
  ++clock_;
  delivered_ = std::move(queued_);
  delivered_targeted_ = std::move(queued_targeted_);
  queued_.clear();
  queued_targeted_.clear();
  std::sort(delivered_.begin(), delivered_.end(), by_sender_seq);
  std::sort(delivered_targeted_.begin(), delivered_targeted_.end(),
            [](const Targeted& a, const Targeted& b) { return by_sender_seq(a.env, b.env); });

  std::size_t count = delivered_.size() * nodes_.size();
  for (const auto& t : delivered_targeted_) count += t.recipients.size();

  if (keep_log_) {
    for (UserId node : nodes_) {
      for (const Envelope* e : inbox(node)) {
        log_.push_back({clock_, e->seq, e->sender, node, e->round, e->step, kind_of(e->payload)});
      }
    }
  }
  return count;
}

std::vector<const Envelope*> Network::inbox(UserId node) const {
  std::vector<const Envelope*> out;
  out.reserve(delivered_.size());
  for (const auto& e : delivered_) out.push_back(&e);
  bool targeted = false;
  for (const auto& t : delivered_targeted_) {
    if (std::binary_search(t.recipients.begin(), t.recipients.end(), node)) {
      out.push_back(&t.env);
      targeted = true;
    }
  }
  if (targeted) {
    std::sort(out.begin(), out.end(), [](const Envelope* a, const Envelope* b) { return by_sender_seq(*a, *b); });
  }
  return out;
}

void Network::write_log(std::ostream& out) const {
  for (const auto& r : log_) {
    nlohmann::ordered_json j;
    j["delivery_step"] = r.delivery_step;
    j["seq"] = r.seq;
    j["sender"] = r.sender.value;
    j["recipient"] = r.recipient.value;
    j["round"] = r.round;
    j["step"] = r.step;
    j["kind"] = to_string(r.kind);
    out << j.dump() << '\n';
  }
}

}  // namespace algosim
