#include <gtest/gtest.h>

#include "algosim/consensus.hpp"
#include "fixtures.hpp"

using namespace algosim;
using fixture::code_of;

namespace {

Digest dig(int i) {
  Digest d;
  d.bytes[0] = static_cast<std::uint8_t>(i);
  return d;
}

std::vector<SoftVote> votes(std::initializer_list<std::pair<int, std::size_t>> counts) {
  std::vector<SoftVote> out;
  std::uint64_t id = 1;
  for (auto [value, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) out.push_back({UserId{id++}, 1, dig(value), {}, {}});
  }
  return out;
}

std::vector<GCRelay> relays(std::size_t for_x, std::size_t others) {
  std::vector<GCRelay> out;
  std::uint64_t id = 1;
  for (std::size_t i = 0; i < for_x + others; ++i) {
    GCRelay m;
    m.voter = UserId{id++};
    if (i < for_x) m.value = dig(1);
    out.push_back(m);
  }
  return out;
}

// Ten funded users, all of them leaders and verifiers.
struct Round1 : ::testing::Test {
  KeyRegistry keys{5, 3, 20};
  ProtocolParams params;
  std::optional<Chain> chain;
  std::vector<Payment> pending;

  void SetUp() override {
    Status g;
    for (std::uint64_t u = 1; u <= 10; ++u) {
      keys.register_user(UserId{u});
      g.balances[UserId{u}] = 100;
    }
    params.p = 1.0;
    params.p_prime = 1.0;
    params.t_H = 7;
    params.m = 17;
    chain.emplace(make_genesis_chain(g, genesis_seed(5)));
    pending.push_back(make_payment(keys.node_signer(UserId{1}), UserId{1}, UserId{2}, 30, 1));
    pending.push_back(make_payment(keys.node_signer(UserId{2}), UserId{2}, UserId{3}, 500, 1));
  }

  Credential cred(std::uint64_t u, Step s) {
    auto signer = keys.node_signer(UserId{u});
    auto c = s == 1 ? leader_credential(signer, UserId{u}, 1, chain->tip().seed, *chain, params)
                    : verifier_credential(signer, UserId{u}, 1, s, chain->tip().seed, *chain, params);
    return *c;
  }
};

}  // namespace

TEST(GradedConsensus, RelayThreshold) {
  EXPECT_EQ(gc_relay(votes({{1, 14}, {2, 6}}), 20), dig(1));
  EXPECT_EQ(gc_relay(votes({{1, 13}, {2, 7}}), 20), std::nullopt);
  EXPECT_EQ(gc_relay(votes({{1, 10}}), 10), dig(1));
}

TEST(GradedConsensus, GradeTable) {
  EXPECT_EQ(gc_grade(relays(7, 2), 9), (GradedValue{dig(1), 2}));
  EXPECT_EQ(gc_grade(relays(6, 3), 9), (GradedValue{dig(1), 1}));
  EXPECT_EQ(gc_grade(relays(4, 5), 9), (GradedValue{dig(1), 1}));
  EXPECT_EQ(gc_grade(relays(3, 6), 9), (GradedValue{std::nullopt, 0}));
  EXPECT_EQ(gc_grade(relays(2, 7), 9), (GradedValue{std::nullopt, 0}));
  EXPECT_EQ(gc_grade(relays(0, 9), 9), (GradedValue{std::nullopt, 0}));
}

TEST(GradedConsensus, DistinctVotersAndTies) {
  auto v = votes({{1, 2}, {2, 2}});
  v.push_back(v[0]);
  v.push_back(v[0]);
  auto t = top_value(v);
  EXPECT_EQ(t.value, dig(1));
  EXPECT_EQ(t.count, 2u);
  auto w = votes({{3, 2}, {2, 2}});
  EXPECT_EQ(top_value(w).value, dig(2));
  EXPECT_FALSE(top_value({}).value);
}

TEST(SimpleVote, StrictTwoThirds) {
  EXPECT_EQ(simple_vote_finalize(votes({{1, 14}, {2, 6}}), 20), dig(1));
  EXPECT_EQ(simple_vote_finalize(votes({{1, 13}, {2, 7}}), 20), std::nullopt);
  EXPECT_EQ(simple_vote_finalize(votes({{1, 10}}), 10), dig(1));
  // ceil(2n/3) is not enough when 3 divides 2n.
  EXPECT_EQ(simple_vote_finalize(votes({{1, 6}, {2, 3}}), 9), std::nullopt);
}

TEST(Bba, OutputMapping) {
  EXPECT_EQ(ba_output({dig(1), 2}, 0).value, dig(1));
  EXPECT_EQ(ba_output({dig(1), 1}, 0).value, dig(1));
  EXPECT_FALSE(ba_output({dig(1), 1}, 1).value);
  auto odd = ba_output({std::nullopt, 0}, 0);
  EXPECT_FALSE(odd.value);
  EXPECT_TRUE(odd.inconsistent);
  EXPECT_EQ(bba_input({dig(1), 2}), 0);
  EXPECT_EQ(bba_input({dig(1), 1}), 1);
  EXPECT_EQ(bba_input({std::nullopt, 0}), 1);
}

TEST(Bba, StepKindsCycle) {
  EXPECT_EQ(bba_step_kind(5), BbaStepKind::fixed_to_zero);
  EXPECT_EQ(bba_step_kind(6), BbaStepKind::fixed_to_one);
  EXPECT_EQ(bba_step_kind(7), BbaStepKind::coin_flip);
  EXPECT_EQ(bba_step_kind(8), BbaStepKind::fixed_to_zero);
  EXPECT_EQ(bba_iteration(7), 0u);
  EXPECT_EQ(bba_iteration(8), 1u);
  EXPECT_EQ(code_of([] { bba_step_kind(4); }), Errc::precondition_violated);
}

TEST(Bba, StepRule) {
  BbaState s;
  EXPECT_EQ(bba_step_rule(s, 5, 7, 2, 9, 0), (BbaState{0, true, 5}));
  EXPECT_EQ(bba_step_rule(s, 5, 2, 7, 9, 0), (BbaState{1, false, 0}));
  EXPECT_EQ(bba_step_rule(s, 5, 6, 3, 9, 0), (BbaState{0, false, 0}));
  EXPECT_EQ(bba_step_rule(s, 6, 2, 7, 9, 0), (BbaState{1, true, 6}));
  EXPECT_EQ(bba_step_rule(s, 6, 7, 2, 9, 0), (BbaState{0, false, 0}));
  EXPECT_EQ(bba_step_rule(s, 6, 3, 6, 9, 0), (BbaState{1, false, 0}));
  EXPECT_EQ(bba_step_rule(s, 7, 3, 6, 9, 0).bit, 0);
  EXPECT_EQ(bba_step_rule(s, 7, 3, 6, 9, 1).bit, 1);
  EXPECT_EQ(bba_step_rule(s, 7, 7, 2, 9, 1).bit, 0);
  BbaState done{1, true, 6};
  EXPECT_EQ(bba_step_rule(done, 8, 9, 0, 9, 0), done);
}

TEST(Bba, HonestValidity) {
  ProtocolParams params;
  std::map<UserId, std::uint8_t> zeros, ones, mixed;
  std::vector<UserId> all;
  for (std::uint64_t u = 1; u <= 9; ++u) {
    zeros[UserId{u}] = 0;
    ones[UserId{u}] = 1;
    mixed[UserId{u}] = u <= 5 ? 0 : 1;
    all.push_back(UserId{u});
  }
  std::vector<std::vector<UserId>> committees(params.max_step() - 3, all);
  auto q = genesis_seed(2);
  auto r0 = bba(zeros, committees, q, params);
  EXPECT_EQ(r0.bit, 0);
  EXPECT_EQ(r0.decided_at, 5u);
  auto r1 = bba(ones, committees, q, params);
  EXPECT_EQ(r1.bit, 1);
  EXPECT_EQ(r1.decided_at, 6u);
  auto rm = bba(mixed, committees, q, params);
  ASSERT_TRUE(rm.bit.has_value());
  EXPECT_LE(rm.decided_at, params.max_step());
  // One committee is not enough to reach step 6.
  EXPECT_FALSE(bba(ones, std::span(committees).first(1), q, params).bit);
}

// With honest voters only, BA and simple voting pick the same block for every
// vote multiset over three values and committees of 1..12.
TEST(Equivalence, ExhaustiveHonestMultisets) {
  ProtocolParams params;
  auto q = genesis_seed(9);
  std::size_t cases = 0;
  for (std::size_t n = 1; n <= 12; ++n) {
    for (std::size_t a = 0; a <= n; ++a) {
      for (std::size_t b = 0; a + b <= n; ++b) {
        auto v = votes({{1, a}, {2, b}, {3, n - a - b}});
        auto simple = simple_vote_finalize(v, n);
        std::vector<GCRelay> rs;
        std::map<UserId, std::uint8_t> bits;
        std::vector<UserId> members;
        auto relayed = gc_relay(v, n);
        for (std::uint64_t u = 1; u <= n; ++u) {
          GCRelay m;
          m.voter = UserId{u};
          m.value = relayed;
          rs.push_back(m);
          members.push_back(UserId{u});
        }
        auto g = gc_grade(rs, n);
        for (auto u : members) bits[u] = bba_input(g);
        std::vector<std::vector<UserId>> committees(params.max_step() - 3, members);
        auto res = bba(bits, committees, q, params);
        ASSERT_TRUE(res.bit.has_value());
        auto out = ba_output(g, *res.bit);
        EXPECT_FALSE(out.inconsistent);
        EXPECT_EQ(out.value, simple) << "n=" << n << " a=" << a << " b=" << b;
        ++cases;
      }
    }
  }
  EXPECT_EQ(cases, 454u);
}

TEST_F(Round1, ProposeSignsAndDestroys) {
  auto c = cred(3, 1);
  auto m = propose(keys.node_signer(UserId{3}), KeyPolicy::honest, c, pending, *chain, params);
  ASSERT_EQ(m.block.payset.size(), 1u);  // the overspend is dropped
  EXPECT_EQ(m.block.payset[0], pending[0]);
  EXPECT_TRUE(verify_proposal(m, *chain, params, keys));
  EXPECT_EQ(keys.key_state(UserId{3}, 1, 1), KeyState::destroyed);
  EXPECT_NE(m.block.seed, hash_seed_round(chain->tip().seed, 1));

  auto tampered = m;
  tampered.block.payset.clear();
  EXPECT_FALSE(verify_proposal(tampered, *chain, params, keys));
  tampered = m;
  tampered.credential = cred(4, 1);
  EXPECT_FALSE(verify_proposal(tampered, *chain, params, keys));

  auto r = propose(keys.node_signer(UserId{4}), KeyPolicy::retain, cred(4, 1), {}, *chain, params);
  EXPECT_TRUE(r.block.empty());
  EXPECT_EQ(r.block.seed, hash_seed_round(chain->tip().seed, 1));
  EXPECT_TRUE(verify_proposal(r, *chain, params, keys));
  EXPECT_EQ(keys.key_state(UserId{4}, 1, 1), KeyState::retained);

  EXPECT_EQ(code_of([&] { propose(keys.node_signer(UserId{5}), KeyPolicy::honest, cred(5, 2), pending, *chain, params); }),
            Errc::precondition_violated);
}

TEST_F(Round1, SoftVoteFollowsSmallestCredential) {
  std::vector<ProposalMessage> props;
  for (std::uint64_t u = 1; u <= 4; ++u) {
    props.push_back(propose(keys.node_signer(UserId{u}), KeyPolicy::honest, cred(u, 1), pending, *chain, params));
  }
  std::vector<Credential> cs;
  for (const auto& p : props) cs.push_back(p.credential);
  UserId leader = select_leader(cs);
  Digest want;
  for (const auto& p : props) {
    if (p.credential.user == leader) want = block_hash(p.block);
  }
  EXPECT_EQ(soft_vote_value(props, *chain, params, keys), want);

  // An invalid winner is skipped.
  for (auto& p : props) {
    if (p.credential.user == leader) p.block_sig.bytes[0] ^= 1;
  }
  EXPECT_NE(soft_vote_value(props, *chain, params, keys), want);
  EXPECT_EQ(soft_vote_value({}, *chain, params, keys), empty_block_digest(*chain));

  auto v = soft_vote(keys.node_signer(UserId{9}), KeyPolicy::honest, cred(9, 2), props, *chain, params);
  EXPECT_TRUE(verify_soft_vote(v, *chain, params, keys));
  EXPECT_EQ(keys.key_state(UserId{9}, 1, 2), KeyState::destroyed);
  v.value.bytes[0] ^= 1;
  EXPECT_FALSE(verify_soft_vote(v, *chain, params, keys));
}

TEST_F(Round1, RelayAndBbaMessagesVerify) {
  auto r = make_relay(keys.node_signer(UserId{2}), KeyPolicy::honest, cred(2, 3), std::nullopt);
  EXPECT_TRUE(verify_relay(r, *chain, params, keys));
  r.value = dig(1);
  EXPECT_FALSE(verify_relay(r, *chain, params, keys));

  auto b = make_bba_message(keys.node_signer(UserId{2}), std::nullopt, cred(2, 5), 1, dig(4));
  EXPECT_TRUE(verify_bba_message(b, *chain, params, keys));
  EXPECT_EQ(keys.key_state(UserId{2}, 1, 5), KeyState::available);
  b.bit = 0;
  EXPECT_FALSE(verify_bba_message(b, *chain, params, keys));
}

TEST_F(Round1, AssembleCertBoundary) {
  Block blk = empty_block_after(chain->tip(), chain->tip_hash());
  Digest d = block_hash(blk);
  std::vector<CertMessage> msgs;
  for (std::uint64_t u = 1; u <= 6; ++u) {
    msgs.push_back(make_cert_message(keys.node_signer(UserId{u}), KeyPolicy::honest, cred(u, 4), d, true));
  }
  msgs.push_back(msgs[0]);
  EXPECT_FALSE(assemble_cert(msgs, d, true, *chain, params, keys));
  auto wrong_bit = make_cert_message(keys.node_signer(UserId{7}), std::nullopt, cred(7, 4), d, false);
  msgs.push_back(wrong_bit);
  EXPECT_FALSE(assemble_cert(msgs, d, true, *chain, params, keys));
  msgs.push_back(make_cert_message(keys.node_signer(UserId{8}), KeyPolicy::honest, cred(8, 6), d, true));
  auto cert = assemble_cert(msgs, d, true, *chain, params, keys);
  ASSERT_TRUE(cert);
  EXPECT_EQ(cert->size(), 7u);
  EXPECT_TRUE(std::is_sorted(cert->begin(), cert->end(),
                             [](const auto& a, const auto& b) { return a.voter < b.voter; }));
  blk.cert = *cert;
  EXPECT_TRUE(validate_block(*chain, blk, params, keys).empty());
}
