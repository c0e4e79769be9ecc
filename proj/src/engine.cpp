#include "algosim/engine.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "algosim/error.hpp"
#include "algosim/log.hpp"

namespace algosim {

std::string_view to_string(ConsensusMode m) {
  switch (m) {
    case ConsensusMode::ba: return "ba";
    case ConsensusMode::simple: return "simple";
    case ConsensusMode::both: return "both";
  }
  return "unknown";
}

std::optional<ConsensusMode> parse_mode(std::string_view text) {
  if (text == "ba") return ConsensusMode::ba;
  if (text == "simple") return ConsensusMode::simple;
  if (text == "both") return ConsensusMode::both;
  return std::nullopt;
}

std::string_view to_string(ForkKind k) {
  switch (k) {
    case ForkKind::genesis_fork: return "genesis-fork";
    case ForkKind::bribery_fork: return "bribery-fork";
    case ForkKind::protocol_violation: return "protocol-violation";
  }
  return "unknown";
}

std::string ForkReport::describe() const {
  return std::string(to_string(classification)) + " at round " + std::to_string(round) + ": " +
         first.hex().substr(0, 16) + " (" + std::to_string(first_cert.size()) + " certs) vs " +
         second.hex().substr(0, 16) + " (" + std::to_string(second_cert.size()) + " certs)";
}

void ScenarioConfig::validate() const {
  params.validate();
  if (rounds < 1) throw Error(Errc::config_invalid, "rounds must be at least 1");
  if (num_genesis_users < 2) throw Error(Errc::config_invalid, "need at least 2 genesis users");
  if (initial_balance < 1) throw Error(Errc::config_invalid, "initial_balance must be positive");
  if (params.horizon != 0 && params.horizon < rounds) {
    throw Error(Errc::config_invalid, "horizon must cover every simulated round");
  }
  const auto& a = adversary;
  if (!(a.retention_fraction >= 0.0 && a.retention_fraction <= 1.0)) {
    throw Error(Errc::config_invalid, "retention_fraction must be in [0, 1]");
  }
  if (a.strategy == Strategy::genesis_fork && a.fork_round >= rounds) {
    throw Error(Errc::config_invalid, "fork_round must precede the last round");
  }
  if (a.strategy == Strategy::bribery && (a.target_round < 1 || a.target_round >= rounds)) {
    throw Error(Errc::config_invalid, "target_round must be in [1, rounds)");
  }
}

ProtocolParams desk_params(std::size_t users, double expected_leaders, double expected_committee) {
  ProtocolParams p;
  double n = static_cast<double>(users);
  p.p = std::min(1.0, expected_leaders / n);
  p.p_prime = std::min(1.0, expected_committee / n);
  p.t_H = ProtocolParams::default_threshold(p.p_prime * n);
  return p;
}

Digest genesis_seed(std::uint64_t seed) { return hash(Encoder().raw(tag::genesis).u64(seed)); }

namespace {

struct NodeState {
  GradedValue graded;
  BbaState bba;
  std::optional<Digest> value;
  std::optional<Digest> output;  // BA output: the agreed value, or none for the empty block
  std::optional<Digest> final;   // digest this node commits to once decided
};

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg)
      : cfg_(cfg),
        params_(cfg.params),
        keys_(std::make_shared<KeyRegistry>(cfg.seed, cfg.params.horizon ? cfg.params.horizon : cfg.rounds + 1,
                                            cfg.params.max_step())),
        chain_(make_genesis(cfg)),
        net_(cfg.keep_delivery_log),
        rng_(cfg.seed),
        policy_rng_(cfg.seed ^ 0x9e3779b97f4a7c15ULL) {
    params_.horizon = keys_->horizon();
    for (const auto& [u, amount] : chain_.genesis_status().balances) create_user(u);
    next_id_ = cfg.num_genesis_users + 1;
  }

  ScenarioResult run();

 private:
  static Chain make_genesis(const ScenarioConfig& cfg) {
    Status s;
    for (std::uint64_t i = 1; i <= cfg.num_genesis_users; ++i) s.balances[UserId{i}] = cfg.initial_balance;
    return make_genesis_chain(s, genesis_seed(cfg.seed));
  }

  std::uint64_t below(std::uint64_t n) { return rng_() % n; }

  void create_user(UserId u) {
    keys_->register_user(u);
    net_.add_node(u);
    nodes_.push_back(u);
    double draw = static_cast<double>(policy_rng_() >> 11) * 0x1p-53;
    policy_[u] = draw < cfg_.adversary.retention_fraction ? KeyPolicy::retain : KeyPolicy::honest;
  }

  std::vector<Payment> make_payments(Round r);
  void run_round(Round r);
  void launch_attack();
  void audit();

  bool valid(const Envelope& e);
  std::optional<Credential> credential(UserId u, Round r, Step s);
  template <typename T>
  std::vector<const T*> received(UserId node, Step step);
  template <typename T>
  std::vector<const T*> broadcast_of(Step step);

  const ScenarioConfig& cfg_;
  ProtocolParams params_;
  std::shared_ptr<KeyRegistry> keys_;
  Chain chain_;
  Network net_;
  std::mt19937_64 rng_;
  std::mt19937_64 policy_rng_;
  std::map<UserId, KeyPolicy> policy_;
  std::vector<UserId> nodes_;
  std::vector<UserId> unfunded_;
  std::uint64_t next_id_ = 1;
  std::unordered_map<std::uint64_t, bool> valid_;
  ScenarioResult result_;
};

bool Simulation::valid(const Envelope& e) {
  auto it = valid_.find(e.seq);
  if (it != valid_.end()) return it->second;
  bool ok = std::visit(
      [&](const auto& ptr) {
        using T = std::decay_t<decltype(*ptr)>;
        if constexpr (std::is_same_v<T, ProposalMessage>) {
          return ptr->credential.user == e.sender && verify_proposal(*ptr, chain_, params_, *keys_);
        } else if constexpr (std::is_same_v<T, SoftVote>) {
          return ptr->voter == e.sender && verify_soft_vote(*ptr, chain_, params_, *keys_);
        } else if constexpr (std::is_same_v<T, GCRelay>) {
          return ptr->voter == e.sender && verify_relay(*ptr, chain_, params_, *keys_);
        } else if constexpr (std::is_same_v<T, BbaMessage>) {
          return ptr->voter == e.sender && ptr->step == e.step && verify_bba_message(*ptr, chain_, params_, *keys_);
        } else {
          return ptr->voter == e.sender && ptr->step == e.step && verify_cert_message(*ptr, chain_, params_, *keys_);
        }
      },
      e.payload);
  valid_.emplace(e.seq, ok);
  return ok;
}

std::optional<Credential> Simulation::credential(UserId u, Round r, Step s) {
  Signer signer = keys_->node_signer(u);
  const Digest& q = chain_.tip().seed;
  return s == kProposalStep ? leader_credential(signer, u, r, q, chain_, params_)
                            : verifier_credential(signer, u, r, s, q, chain_, params_);
}

template <typename T>
std::vector<const T*> Simulation::received(UserId node, Step step) {
  std::vector<const T*> out;
  for (const Envelope* e : net_.inbox(node)) {
    const auto* ptr = std::get_if<std::shared_ptr<const T>>(&e->payload);
    if (ptr && e->step == step && valid(*e)) out.push_back(ptr->get());
  }
  return out;
}

template <typename T>
std::vector<const T*> Simulation::broadcast_of(Step step) {
  std::vector<const T*> out;
  for (const Envelope& e : net_.delivered_broadcasts()) {
    const auto* ptr = std::get_if<std::shared_ptr<const T>>(&e.payload);
    if (ptr && e.step == step && valid(e)) out.push_back(ptr->get());
  }
  return out;
}

template <typename T>
std::vector<T> values(const std::vector<const T*>& ptrs) {
  std::vector<T> out;
  out.reserve(ptrs.size());
  for (const T* p : ptrs) out.push_back(*p);
  return out;
}

template <typename T>
std::size_t distinct_voters(const std::vector<const T*>& msgs) {
  std::set<UserId> who;
  for (const T* m : msgs) who.insert(m->voter);
  return who.size();
}

std::vector<Payment> Simulation::make_payments(Round r) {
  const Status& st = chain_.tip_status();
  std::erase_if(unfunded_, [&](UserId u) { return st.has_user(u); });
  const auto& w = cfg_.workload;
  if (r >= w.growth_start_round) {
    for (std::size_t i = 0; i < w.new_users_per_round; ++i) {
      UserId u{next_id_++};
      create_user(u);
      unfunded_.push_back(u);
    }
  }

  std::map<UserId, Amount> projected = st.balances;
  std::vector<UserId> live;
  for (const auto& [u, a] : projected) live.push_back(u);

  auto pick_payer = [&]() -> std::optional<UserId> {
    std::vector<UserId> rich;
    for (const auto& [u, a] : projected) {
      if (a >= 10) rich.push_back(u);
    }
    if (rich.empty()) return std::nullopt;
    return rich[below(rich.size())];
  };
  std::vector<Payment> out;
  auto pay = [&](UserId payer, UserId payee) {
    Amount amount = 1 + below(projected[payer] / 10);
    projected[payer] -= amount;
    out.push_back(make_payment(keys_->node_signer(payer), payer, payee, amount, r));
  };

  for (UserId u : unfunded_) {
    auto payer = pick_payer();
    if (!payer) break;
    pay(*payer, u);
  }
  if (live.size() >= 2) {
    for (std::size_t i = 0; i < w.payments_per_round; ++i) {
      auto payer = pick_payer();
      if (!payer) break;
      std::size_t j = below(live.size());
      if (live[j] == *payer) j = (j + 1) % live.size();
      pay(*payer, live[j]);
    }
  }
  return out;
}

void Simulation::run_round(Round r) {
  valid_.clear();
  RoundMetrics rm;
  rm.round = r;
  const Digest prev_seed = chain_.tip().seed;
  const auto eligible = users_at(chain_, params_.lookback(r));
  const auto pending = make_payments(r);
  const Block empty = empty_block_after(chain_.tip(), chain_.tip_hash());
  const Digest empty_digest = block_hash(empty);
  const bool run_ba = cfg_.mode != ConsensusMode::simple;
  std::size_t sent = 0;

  auto send = [&](UserId u, Step s, Payload p) {
    net_.broadcast(u, r, s, std::move(p));
    ++sent;
  };
  auto members = [&](Step s) {
    std::vector<std::pair<UserId, Credential>> out;
    for (UserId u : eligible) {
      if (auto c = credential(u, r, s)) out.emplace_back(u, *c);
    }
    return out;
  };

  // Step 1: potential leaders propose.
  for (auto& [u, c] : members(kProposalStep)) {
    send(u, kProposalStep, make_payload(propose(keys_->node_signer(u), policy_[u], c, pending, chain_, params_)));
  }
  net_.step();
  std::map<Digest, Block> blocks{{empty_digest, empty}};
  {
    auto proposals = broadcast_of<ProposalMessage>(kProposalStep);
    std::vector<Credential> creds;
    for (const auto* m : proposals) {
      blocks.emplace(block_hash(m->block), m->block);
      creds.push_back(m->credential);
    }
    rm.committee_sizes.push_back({kProposalStep, creds.size()});
    if (!creds.empty()) rm.leader = select_leader(creds);
  }

  // Step 2: soft vote for the best proposal seen.
  for (auto& [u, c] : members(kSoftVoteStep)) {
    const ProposalMessage* best = nullptr;
    for (const auto* m : received<ProposalMessage>(u, kProposalStep)) {
      if (!best || std::tie(m->credential.unit, m->credential.user) <
                       std::tie(best->credential.unit, best->credential.user)) {
        best = m;
      }
    }
    Digest value = best ? block_hash(best->block) : empty_digest;
    send(u, kSoftVoteStep, make_payload(make_soft_vote(keys_->node_signer(u), policy_[u], c, value)));
  }
  net_.step();

  RoundTranscript tr;
  tr.round = r;
  {
    auto votes = broadcast_of<SoftVote>(kSoftVoteStep);
    tr.soft_votes = values(votes);
    tr.committee_size_2 = distinct_voters(votes);
    rm.committee_sizes.push_back({kSoftVoteStep, tr.committee_size_2});
  }
  if (cfg_.mode != ConsensusMode::ba) {
    rm.simple_digest = simple_vote_finalize(tr.soft_votes, tr.committee_size_2);
  }

  std::map<UserId, NodeState> state;
  auto settle = [&](NodeState& ns, std::optional<Digest> out) {
    if (out && !blocks.contains(*out)) {
      rm.inconsistent = true;
      out.reset();
    }
    ns.final = out ? *out : empty_digest;
  };

  Step s = kRelayStep;
  if (!run_ba) {
    for (UserId u : nodes_) {
      auto votes = received<SoftVote>(u, kSoftVoteStep);
      settle(state[u], simple_vote_finalize(values(votes), distinct_voters(votes)));
      state[u].bba.decided = true;
      state[u].bba.decided_at = kSoftVoteStep;
    }
  } else {
    // Step 3: relay any value with a two-thirds soft-vote majority.
    for (auto& [u, c] : members(kRelayStep)) {
      auto votes = received<SoftVote>(u, kSoftVoteStep);
      auto x = gc_relay(values(votes), distinct_voters(votes));
      send(u, kRelayStep, make_payload(make_relay(keys_->node_signer(u), policy_[u], c, x)));
    }
    net_.step();
    rm.committee_sizes.push_back({kRelayStep, distinct_voters(broadcast_of<GCRelay>(kRelayStep))});

    // Step 4: grade, then announce the BBA input.
    for (UserId u : nodes_) {
      auto relays = received<GCRelay>(u, kRelayStep);
      NodeState& ns = state[u];
      ns.graded = gc_grade(values(relays), distinct_voters(relays));
      ns.value = ns.graded.value;
      ns.bba.bit = bba_input(ns.graded);
    }
    for (auto& [u, c] : members(kGradeStep)) {
      const NodeState& ns = state[u];
      send(u, kGradeStep, make_payload(make_bba_message(keys_->node_signer(u), policy_[u], c, ns.bba.bit, ns.value)));
    }
    net_.step();
    rm.committee_sizes.push_back({kGradeStep, distinct_voters(broadcast_of<BbaMessage>(kGradeStep))});
    s = kFirstBbaStep;
  }

  // BBA steps and certification. A decided committee member certifies its
  // block; the loop runs until every node has decided and t_H distinct
  // certifiers agree, or the step budget is spent.
  std::map<Digest, std::map<UserId, CertMessage>> certs;
  bool all_decided = !run_ba;
  Digest final_digest = empty_digest;
  for (; s <= params_.max_step(); ++s) {
    if (run_ba && !all_decided) {
      std::uint8_t coin = bba_coin(prev_seed, bba_iteration(s));
      all_decided = true;
      for (UserId u : nodes_) {
        NodeState& ns = state[u];
        if (!ns.bba.decided) {
          auto msgs = received<BbaMessage>(u, s - 1);
          std::set<UserId> zeros, ones, senders;
          std::map<Digest, std::set<UserId>> carried;
          for (const auto* m : msgs) {
            (m->bit ? ones : zeros).insert(m->voter);
            senders.insert(m->voter);
            if (m->value) carried[*m->value].insert(m->voter);
          }
          if (!ns.value) {
            std::size_t best = 0;
            for (const auto& [d, who] : carried) {
              if (who.size() > best) {
                best = who.size();
                ns.value = d;
              }
            }
          }
          ns.bba = bba_step_rule(ns.bba, s, zeros.size(), ones.size(), senders.size(), coin);
          if (ns.bba.decided) {
            auto out = ba_output(ns.graded, ns.bba.bit);
            if (out.inconsistent) {
              rm.inconsistent = true;
              out.value = ns.value;
            }
            ns.output = out.value;
            settle(ns, out.value);
          }
        }
        all_decided = all_decided && ns.bba.decided;
      }
    }

    for (auto& [u, c] : members(s)) {
      const NodeState& ns = state[u];
      Signer signer = keys_->node_signer(u);
      if (run_ba && s >= kGradeStep) {
        std::optional<KeyPolicy> policy;
        if (!ns.bba.decided) policy = policy_[u];
        send(u, s, make_payload(make_bba_message(signer, policy, c, ns.bba.bit, ns.value)));
      }
      if (ns.bba.decided) {
        send(u, s, make_payload(make_cert_message(signer, policy_[u], c, *ns.final, blocks.at(*ns.final).empty())));
      }
    }
    net_.step();
    rm.committee_sizes.push_back({s, distinct_voters(broadcast_of<BbaMessage>(s)) +
                                         (run_ba ? 0 : distinct_voters(broadcast_of<CertMessage>(s)))});
    for (const auto* m : broadcast_of<CertMessage>(s)) certs[m->block_digest].emplace(m->voter, *m);

    if (all_decided) {
      final_digest = *state.at(nodes_.front()).final;
      if (certs[final_digest].size() >= params_.t_H) break;
    }
  }

  if (all_decided) {
    Step last = 0;
    for (const auto& [u, ns] : state) {
      last = std::max(last, ns.bba.decided_at);
      if (ns.final != state.at(nodes_.front()).final) rm.inconsistent = true;
    }
    rm.steps_to_decision = last;
  }
  Block block = all_decided ? blocks.at(final_digest) : empty;
  final_digest = block_hash(block);
  for (const auto& [u, m] : certs[final_digest]) {
    if (m.bit == (block.empty() ? 1 : 0)) block.cert.push_back(m);
  }
  if (!all_decided || block.cert.size() < params_.t_H) rm.no_termination = true;

  if (run_ba) {
    if (all_decided) rm.ba_digest = state.at(nodes_.front()).output;
    tr.ba_digest = rm.ba_digest;
  }
  if (cfg_.mode == ConsensusMode::both) {
    rm.equivalent = rm.ba_digest == rm.simple_digest;
    if (!rm.equivalent) ++result_.metrics.summary.equivalence_mismatches;
  }

  auto violations = validate_block(chain_, block, params_, *keys_);
  if (!violations.empty()) {
    ++result_.metrics.summary.validation_failures;
    for (const auto& v : violations) logger().warn("round {}: {}", r, v.detail);
  }

  // A second digest with its own quorum of certifiers is a fork.
  for (const auto& [d, who] : certs) {
    if (d == final_digest || who.size() < params_.t_H) continue;
    ForkReport f;
    f.round = r;
    f.first = final_digest;
    f.second = d;
    f.first_cert = block.cert;
    for (const auto& [u, m] : who) f.second_cert.push_back(m);
    f.classification = ForkKind::protocol_violation;
    result_.forks.push_back(std::move(f));
  }

  rm.empty_block = block.empty();
  rm.payments = block.payset.size();
  rm.message_count = sent;
  result_.metrics.summary.total_messages += sent;
  logger().info("round {} leader {} block {} {} payments, decided at step {}, {} messages", r,
                rm.leader ? std::to_string(rm.leader->value) : "-", final_digest.hex().substr(0, 12),
                rm.payments, rm.steps_to_decision, sent);

  chain_.append(std::move(block), *keys_);
  result_.metrics.rounds.push_back(std::move(rm));
  result_.transcripts.push_back(std::move(tr));
}

void Simulation::launch_attack() {
  const auto& a = cfg_.adversary;
  auto& summary = result_.metrics.summary;
  try {
    if (a.strategy == Strategy::genesis_fork) {
      Chain fork = fork_from(chain_, a.fork_round, params_, *keys_);
      result_.chains.push_back(std::move(fork));
      auto found = detect_fork(result_.chains, params_, *keys_, ForkKind::genesis_fork);
      result_.forks.insert(result_.forks.end(), found.begin(), found.end());
    } else if (a.strategy == Strategy::bribery) {
      auto retained = keys_->retained_records(a.target_round);
      auto outcome = bribe_and_recertify(chain_, a.target_round, retained, params_, *keys_);
      if (auto* failed = std::get_if<AttackFailed>(&outcome)) {
        summary.attack_failure = "attack failed: have " + std::to_string(failed->have) + ", need " +
                                 std::to_string(failed->need) + " (" + failed->reason + ")";
        return;
      }
      Chain alt = chain_.prefix(a.target_round - 1);
      alt.append(std::get<Block>(std::move(outcome)), *keys_);
      result_.chains.push_back(std::move(alt));
      auto found = detect_fork(result_.chains, params_, *keys_, ForkKind::bribery_fork);
      result_.forks.insert(result_.forks.end(), found.begin(), found.end());
    }
  } catch (const Error& e) {
    summary.attack_failure = std::string(to_string(e.code())) + ": " + e.what();
  }
}

void Simulation::audit() {
  std::size_t bad = 0;
  for (const auto& entry : keys_->audit_log()) {
    if (entry.ephemeral && entry.state_at_sign == KeyState::destroyed) ++bad;
    // Bribed signatures may only come from keys their owners kept.
    if (cfg_.adversary.strategy == Strategy::bribery && entry.principal == Principal::Kind::adversary &&
        entry.ephemeral && entry.state_at_sign != KeyState::retained) {
      ++bad;
    }
  }
  result_.metrics.summary.audit_violations = bad;
}

ScenarioResult Simulation::run() {
  auto start = std::chrono::steady_clock::now();
  auto corrupt_fork_set = [&](Round r) {
    if (cfg_.adversary.strategy == Strategy::genesis_fork && r == cfg_.adversary.fork_round) {
      for (UserId u : users_at(chain_, r)) policy_[u] = KeyPolicy::retain;
    }
  };
  corrupt_fork_set(0);
  for (Round r = 1; r <= cfg_.rounds; ++r) {
    run_round(r);
    corrupt_fork_set(r);
  }
  result_.chains.insert(result_.chains.begin(), chain_);
  launch_attack();
  audit();

  auto& summary = result_.metrics.summary;
  summary.forks_detected = result_.forks.size();
  for (const auto& f : result_.forks) summary.fork_descriptions.push_back(f.describe());
  summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result_.keys = keys_;
  result_.delivery_log = net_.delivery_log();
  return std::move(result_);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  Simulation sim(config);
  return sim.run();
}

std::vector<ForkReport> detect_fork(std::span<const Chain> chains, const ProtocolParams& params,
                                    const KeyRegistry& keys, ForkKind kind) {
  std::vector<ForkReport> out;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    for (std::size_t j = i + 1; j < chains.size(); ++j) {
      const Chain& a = chains[i];
      const Chain& b = chains[j];
      if (a.hash_at(0) != b.hash_at(0) || a.genesis_status() != b.genesis_status()) {
        throw Error(Errc::incompatible_genesis, "chains do not share a genesis block");
      }
      std::size_t n = std::min(a.length(), b.length());
      Round d = 1;
      while (d < n && a.hash_at(d) == b.hash_at(d)) ++d;
      if (d >= n) continue;
      Chain prefix = a.prefix(d - 1);
      if (!validate_block(prefix, a.block(d), params, keys).empty()) continue;
      if (!validate_block(prefix, b.block(d), params, keys).empty()) continue;
      out.push_back({d, a.hash_at(d), b.hash_at(d), a.block(d).cert, b.block(d).cert, kind});
    }
  }
  return out;
}

std::vector<EquivalenceVerdict> compare_consensus(std::span<const RoundTranscript> transcript) {
  std::vector<EquivalenceVerdict> out;
  out.reserve(transcript.size());
  for (const auto& t : transcript) {
    EquivalenceVerdict v;
    v.round = t.round;
    v.ba_digest = t.ba_digest;
    v.simple_digest = simple_vote_finalize(t.soft_votes, t.committee_size_2);
    v.equivalent = v.ba_digest == v.simple_digest;
    if (!v.equivalent) v.counterexample = t.soft_votes;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace algosim
