#include <gtest/gtest.h>

#include <sstream>

#include "algosim/engine.hpp"
#include "algosim/io.hpp"
#include "fixtures.hpp"

using namespace algosim;
using fixture::code_of;

namespace {

std::string serialize(const ScenarioConfig& cfg, const ScenarioResult& r) {
  std::ostringstream out;
  write_metrics(out, cfg, r);
  for (const auto& c : r.chains) write_chain(out, c, cfg.seed);
  return out.str();
}

SoftVote vote(std::uint64_t voter, int value) {
  SoftVote v;
  v.voter = UserId{voter};
  v.value.bytes[0] = static_cast<std::uint8_t>(value);
  return v;
}

}  // namespace

TEST(Params, DeskDefaults) {
  auto p = desk_params(100);
  EXPECT_DOUBLE_EQ(p.p, 0.05);
  EXPECT_DOUBLE_EQ(p.p_prime, 0.2);
  EXPECT_EQ(p.t_H, 14u);
  EXPECT_EQ(ProtocolParams::default_threshold(9), 7u);
  EXPECT_EQ(p.max_step(), 183u);
  EXPECT_EQ(p.lookback(2), 0u);
  EXPECT_EQ(p.lookback(10), 7u);
}

TEST(Params, ValidationRejectsNonsense) {
  auto bad = [](auto mutate) {
    auto cfg = fixture::honest_config();
    mutate(cfg);
    return code_of([&] { cfg.validate(); });
  };
  EXPECT_EQ(bad([](ScenarioConfig& c) { c.rounds = 0; }), Errc::config_invalid);
  EXPECT_EQ(bad([](ScenarioConfig& c) { c.num_genesis_users = 1; }), Errc::config_invalid);
  EXPECT_EQ(bad([](ScenarioConfig& c) { c.params.p = 1.5; }), Errc::config_invalid);
  EXPECT_EQ(bad([](ScenarioConfig& c) { c.params.t_H = 0; }), Errc::config_invalid);
  EXPECT_EQ(bad([](ScenarioConfig& c) { c.params.horizon = 2; }), Errc::config_invalid);
  EXPECT_EQ(bad([](ScenarioConfig& c) { c.adversary.retention_fraction = -0.1; }), Errc::config_invalid);
  EXPECT_EQ(bad([](ScenarioConfig& c) {
              c.adversary.strategy = Strategy::bribery;
              c.adversary.target_round = 6;
            }),
            Errc::config_invalid);
  EXPECT_EQ(code_of([] { run_scenario([] {
              auto c = fixture::honest_config();
              c.rounds = 0;
              return c;
            }()); }),
            Errc::config_invalid);
}

TEST(Scenario, HonestRunIsClean) {
  const auto& run = fixture::honest_run();
  const auto& s = run.metrics.summary;
  EXPECT_EQ(s.forks_detected, 0u);
  EXPECT_EQ(s.validation_failures, 0u);
  EXPECT_EQ(s.audit_violations, 0u);
  EXPECT_EQ(s.equivalence_mismatches, 0u);
  EXPECT_FALSE(s.attack_failure);
  ASSERT_EQ(run.metrics.rounds.size(), 6u);
  EXPECT_EQ(run.chains.size(), 1u);
  EXPECT_EQ(run.chains[0].length(), 7u);
  std::size_t total = 0;
  for (const auto& m : run.metrics.rounds) {
    EXPECT_TRUE(m.equivalent);
    EXPECT_FALSE(m.no_termination);
    EXPECT_FALSE(m.inconsistent);
    EXPECT_TRUE(m.leader.has_value());
    EXPECT_GE(m.steps_to_decision, 5u);
    EXPECT_EQ(m.empty_block, m.payments == 0);
    EXPECT_EQ(m.empty_block, run.chains[0].block(m.round).empty());
    total += m.message_count;
  }
  EXPECT_EQ(total, s.total_messages);
  EXPECT_GT(fixture::first_nonempty(run.chains[0]), 0u);
}

TEST(Scenario, DeterministicForSameSeed) {
  auto cfg = fixture::honest_config(21, 25, 4);
  auto a = run_scenario(cfg);
  auto b = run_scenario(cfg);
  EXPECT_EQ(serialize(cfg, a), serialize(cfg, b));
  cfg.seed = 22;
  auto c = run_scenario(cfg);
  EXPECT_NE(serialize(cfg, a), serialize(cfg, c));
}

TEST(Scenario, EveryModeCommitsValidChains) {
  for (auto mode : {ConsensusMode::ba, ConsensusMode::simple, ConsensusMode::both}) {
    auto cfg = fixture::honest_config(5, 30, 4);
    cfg.mode = mode;
    auto run = run_scenario(cfg);
    SCOPED_TRACE(std::string(to_string(mode)));
    EXPECT_EQ(run.metrics.summary.validation_failures, 0u);
    EXPECT_EQ(run.chains[0].length(), 5u);
    KeyRegistry replay(cfg.seed, run.keys->horizon(), cfg.params.max_step());
    auto params = cfg.params;
    params.horizon = run.keys->horizon();
    EXPECT_TRUE(validate_chain(run.chains[0], params, replay).empty());
    for (const auto& m : run.metrics.rounds) {
      if (mode == ConsensusMode::simple) EXPECT_FALSE(m.ba_digest);
      if (mode == ConsensusMode::ba) EXPECT_FALSE(m.simple_digest);
    }
  }
  EXPECT_EQ(parse_mode("both"), ConsensusMode::both);
  EXPECT_FALSE(parse_mode("fast"));
}

TEST(Scenario, PopulationGrowth) {
  auto cfg = fixture::honest_config(9, 10, 5);
  cfg.params = desk_params(10, 5, 10);
  cfg.workload.new_users_per_round = 2;
  cfg.workload.growth_start_round = 2;
  auto run = run_scenario(cfg);
  EXPECT_EQ(users_at(run.chains[0], 1).size(), 10u);
  EXPECT_EQ(users_at(run.chains[0], 5).size(), 18u);
  EXPECT_EQ(run.metrics.summary.validation_failures, 0u);
}

TEST(DetectFork, Cases) {
  const auto& run = fixture::honest_run();
  auto params = fixture::honest_config().params;
  params.horizon = run.keys->horizon();
  const Chain& c = run.chains[0];

  std::vector<Chain> same = {c, c};
  EXPECT_TRUE(detect_fork(same, params, *run.keys).empty());
  std::vector<Chain> extension = {c.prefix(3), c};
  EXPECT_TRUE(detect_fork(extension, params, *run.keys).empty());

  // An uncertified alternative is not a fork.
  Chain alt = c.prefix(3);
  alt.append(empty_block_after(alt.tip(), alt.tip_hash()), *run.keys);
  if (alt.tip_hash() != c.hash_at(4)) {
    std::vector<Chain> pair = {c, alt};
    EXPECT_TRUE(detect_fork(pair, params, *run.keys).empty());
  }

  Chain foreign = make_genesis_chain(c.genesis_status(), genesis_seed(12345));
  std::vector<Chain> bad = {c, foreign};
  EXPECT_EQ(code_of([&] { detect_fork(bad, params, *run.keys); }), Errc::incompatible_genesis);
}

TEST(DetectFork, DescribesTheReport) {
  ForkReport f;
  f.round = 3;
  f.classification = ForkKind::genesis_fork;
  auto text = f.describe();
  EXPECT_NE(text.find("genesis-fork"), std::string::npos);
  EXPECT_NE(text.find("3"), std::string::npos);
}

TEST(CompareConsensus, HonestTranscriptsAgree) {
  const auto& run = fixture::honest_run();
  auto verdicts = compare_consensus(run.transcripts);
  ASSERT_EQ(verdicts.size(), run.metrics.rounds.size());
  for (const auto& v : verdicts) {
    EXPECT_TRUE(v.equivalent);
    EXPECT_TRUE(v.counterexample.empty());
  }
}

TEST(CompareConsensus, SyntheticBoundaries) {
  RoundTranscript split;
  split.round = 1;
  split.committee_size_2 = 9;
  for (std::uint64_t u = 1; u <= 6; ++u) split.soft_votes.push_back(vote(u, 1));
  for (std::uint64_t u = 7; u <= 9; ++u) split.soft_votes.push_back(vote(u, 2));
  split.ba_digest = std::nullopt;  // BA selects the empty block: no 2/3 majority

  RoundTranscript strong = split;
  strong.round = 2;
  strong.soft_votes[6] = vote(7, 1);
  strong.ba_digest = strong.soft_votes[0].value;

  RoundTranscript wrong = strong;
  wrong.round = 3;
  wrong.ba_digest = std::nullopt;

  std::vector<RoundTranscript> t = {split, strong, wrong};
  auto v = compare_consensus(t);
  EXPECT_TRUE(v[0].equivalent);
  EXPECT_FALSE(v[0].simple_digest);
  EXPECT_TRUE(v[1].equivalent);
  EXPECT_FALSE(v[2].equivalent);
  EXPECT_EQ(v[2].counterexample.size(), 9u);
}
