#include <gtest/gtest.h>

#include <random>

#include "algosim/ledger.hpp"
#include "fixtures.hpp"

using namespace algosim;
using fixture::code_of;

namespace {

struct Payments : ::testing::Test {
  KeyRegistry keys{11, 4, 8};
  std::shared_ptr<std::set<UserId>> all = std::make_shared<std::set<UserId>>();
  Signer sys = keys.signer(Principal::adversary(all));
  Status st;

  void SetUp() override {
    for (std::uint64_t u = 1; u <= 6; ++u) {
      keys.register_user(UserId{u});
      all->insert(UserId{u});
    }
    st.round = 2;
    st.balances = {{UserId{1}, 100}, {UserId{2}, 50}};
  }
  Payment pay(std::uint64_t a, std::uint64_t b, Amount x, Round r = 2) {
    return make_payment(sys, UserId{a}, UserId{b}, x, r);
  }
};

ProtocolParams params_of(const ScenarioResult& r) {
  ProtocolParams p = fixture::honest_config().params;
  p.horizon = r.keys->horizon();
  return p;
}

}  // namespace

TEST_F(Payments, SequentialApplication) {
  std::vector<Payment> ps = {pay(1, 3, 60), pay(3, 4, 60), pay(2, 1, 50)};
  auto next = apply_payset(st, ps, keys);
  EXPECT_EQ(next.round, 3u);
  EXPECT_EQ(next.balances, (std::map<UserId, Amount>{{UserId{1}, 90}, {UserId{4}, 60}}));
  EXPECT_EQ(next.total(), st.total());
}

TEST_F(Payments, OverspendReportsIndex) {
  std::vector<Payment> ps = {pay(1, 2, 10), pay(2, 3, 61)};
  try {
    apply_payset(st, ps, keys);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_funds);
    EXPECT_EQ(e.index(), 1u);
  }
  std::vector<Payment> zero = {pay(1, 2, 0)};
  EXPECT_EQ(code_of([&] { apply_payset(st, zero, keys); }), Errc::insufficient_funds);
  std::vector<Payment> ghost = {pay(5, 2, 1)};
  EXPECT_EQ(code_of([&] { apply_payset(st, ghost, keys); }), Errc::insufficient_funds);
}

TEST_F(Payments, SignatureBindsRoundAndFields) {
  std::vector<Payment> stale = {pay(1, 2, 5, 1)};
  EXPECT_EQ(code_of([&] { apply_payset(st, stale, keys); }), Errc::invalid_signature);
  Payment p = pay(1, 2, 5);
  p.amount = 6;
  std::vector<Payment> altered = {p};
  try {
    apply_payset(st, altered, keys);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_signature);
    EXPECT_EQ(e.index(), 0u);
  }
}

TEST_F(Payments, RandomPaysetsConserveMoney) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    Status s = st;
    std::vector<Payment> ps;
    for (int i = 0; i < 8; ++i) {
      std::uint64_t a = rng() % 6 + 1, b = rng() % 6 + 1;
      ps.push_back(pay(a, b, rng() % 40 + 1));
    }
    try {
      auto next = apply_payset(s, ps, keys);
      EXPECT_EQ(next.total(), s.total());
      for (const auto& [u, x] : next.balances) EXPECT_GT(x, 0u);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::insufficient_funds);
      ASSERT_TRUE(e.index().has_value());
      // The prefix before the failing payment still applies.
      std::span<const Payment> prefix(ps.data(), *e.index());
      EXPECT_EQ(apply_payset(s, prefix, keys).total(), s.total());
    }
  }
}

TEST(Block, HashExcludesCertificate) {
  const auto& run = fixture::honest_run();
  const Chain& c = run.chains[0];
  Block b = c.block(c.tip_round());
  Digest before = block_hash(b);
  b.cert.clear();
  EXPECT_EQ(block_hash(b), before);
  b.seed.bytes[0] ^= 1;
  EXPECT_NE(block_hash(b), before);
}

TEST(Block, CertificateBoundary) {
  const auto& run = fixture::honest_run();
  const Chain& c = run.chains[0];
  auto params = params_of(run);
  for (Round r = 1; r <= c.tip_round(); ++r) {
    Chain prefix = c.prefix(r - 1);
    Block b = c.block(r);
    ASSERT_TRUE(validate_block(prefix, b, params, *run.keys).empty()) << "round " << r;
    ASSERT_GE(b.cert.size(), params.t_H);
    b.cert.resize(params.t_H);
    EXPECT_TRUE(validate_block(prefix, b, params, *run.keys).empty());
    b.cert.resize(params.t_H - 1);
    auto v = validate_block(prefix, b, params, *run.keys);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::insufficient_certificates);
    EXPECT_EQ(v[0].detail, "insufficient certificates: have " + std::to_string(params.t_H - 1) + ", need " +
                               std::to_string(params.t_H));
    // A duplicated voter does not make up the deficit.
    b.cert.push_back(b.cert.front());
    EXPECT_EQ(count_valid_certifiers(b.cert, block_hash(b), b.empty(), prefix, params, *run.keys), params.t_H - 1);
  }
}

TEST(Block, CertMessageRejections) {
  const auto& run = fixture::honest_run();
  const Chain& c = run.chains[0];
  auto params = params_of(run);
  Chain prefix = c.prefix(0);
  const Block& b = c.block(1);
  Digest d = block_hash(b);
  CertMessage m = b.cert.front();
  EXPECT_EQ(check_cert_message(m, d, b.empty(), prefix, params, *run.keys), CertCheck::ok);
  EXPECT_EQ(check_cert_message(m, d, !b.empty(), prefix, params, *run.keys), CertCheck::wrong_bit);
  Digest other = d;
  other.bytes[0] ^= 1;
  EXPECT_EQ(check_cert_message(m, other, b.empty(), prefix, params, *run.keys), CertCheck::wrong_digest);
  CertMessage bad = m;
  bad.sig.bytes[3] ^= 1;
  EXPECT_EQ(check_cert_message(bad, d, b.empty(), prefix, params, *run.keys), CertCheck::bad_signature);
  bad = m;
  bad.voter = UserId{m.voter.value % 30 + 1};
  EXPECT_EQ(check_cert_message(bad, d, b.empty(), prefix, params, *run.keys), CertCheck::bad_credential);
  bad = m;
  bad.round = 2;
  EXPECT_EQ(check_cert_message(bad, d, b.empty(), prefix, params, *run.keys), CertCheck::wrong_round);
}

TEST(Block, StructuralViolations) {
  const auto& run = fixture::honest_run();
  const Chain& c = run.chains[0];
  auto params = params_of(run);
  Chain prefix = c.prefix(1);
  Block b = c.block(2);

  Block wrong_prev = b;
  wrong_prev.prev_hash.bytes[0] ^= 1;
  auto v = validate_block(prefix, wrong_prev, params, *run.keys);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].kind, ViolationKind::prev_hash_mismatch);

  Block wrong_round = b;
  wrong_round.round = 3;
  v = validate_block(prefix, wrong_round, params, *run.keys);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].kind, ViolationKind::round_mismatch);

  Block wrong_seed = b;
  wrong_seed.seed.bytes[0] ^= 1;
  v = validate_block(prefix, wrong_seed, params, *run.keys);
  bool seed_flag = false;
  for (const auto& x : v) seed_flag |= x.kind == ViolationKind::seed_mismatch;
  EXPECT_TRUE(seed_flag);
}

TEST(Block, EmptyBlockSeedRule) {
  const auto& run = fixture::honest_run();
  const Chain& c = run.chains[0];
  Block e = empty_block_after(c.tip(), c.tip_hash());
  EXPECT_EQ(e.round, c.tip_round() + 1);
  EXPECT_EQ(e.seed, hash_seed_round(c.tip().seed, e.round));
  EXPECT_EQ(e.prev_hash, c.tip_hash());
}

TEST(Chain, ReplayAndUsers) {
  const auto& run = fixture::honest_run();
  const Chain& c = run.chains[0];
  auto params = params_of(run);
  EXPECT_TRUE(validate_chain(c, params, *run.keys).empty());
  for (Round r = 0; r <= c.tip_round(); ++r) {
    EXPECT_EQ(c.status_after(r).round, r + 1);
    EXPECT_EQ(c.status_after(r).total(), c.genesis_status().total());
    for (auto u : users_at(c, r)) EXPECT_TRUE(is_user_at(c, r, u));
  }
  EXPECT_EQ(code_of([&] { c.block(c.tip_round() + 1); }), Errc::round_out_of_range);
  EXPECT_EQ(code_of([&] { c.prefix(c.tip_round() + 1); }), Errc::round_out_of_range);
}

TEST(Chain, UsersAtTracksBalances) {
  KeyRegistry keys(1, 3, 4);
  for (std::uint64_t u = 1; u <= 3; ++u) keys.register_user(UserId{u});
  Status g;
  g.balances = {{UserId{1}, 5}, {UserId{2}, 5}};
  Chain c = make_genesis_chain(g, genesis_seed(1));
  Block b = empty_block_after(c.tip(), c.tip_hash());
  b.payset = {make_payment(keys.node_signer(UserId{1}), UserId{1}, UserId{3}, 5, 1)};
  c.append(b, keys);
  EXPECT_EQ(users_at(c, 0), (std::vector<UserId>{UserId{1}, UserId{2}}));
  EXPECT_EQ(users_at(c, 1), (std::vector<UserId>{UserId{2}, UserId{3}}));
  Block skip = empty_block_after(c.tip(), c.tip_hash());
  skip.round = 5;
  EXPECT_EQ(code_of([&] { c.append(skip, keys); }), Errc::precondition_violated);
}

TEST(Chain, CompareRule) {
  const auto& run = fixture::honest_run();
  const Chain& c = run.chains[0];
  Chain shorter = c.prefix(c.tip_round() - 1);
  EXPECT_EQ(chain_compare(c, shorter), Preference::first);
  EXPECT_EQ(chain_compare(shorter, c), Preference::second);
  EXPECT_EQ(chain_compare(c, c), Preference::equal);

  Chain alt = shorter;
  alt.append(empty_block_after(alt.tip(), alt.tip_hash()), *run.keys);
  if (alt.tip_hash() != c.tip_hash()) {
    auto want = alt.tip_hash() < c.tip_hash() ? Preference::first : Preference::second;
    EXPECT_EQ(chain_compare(alt, c), want);
  }

  Chain foreign = make_genesis_chain(c.genesis_status(), genesis_seed(999));
  EXPECT_EQ(code_of([&] { chain_compare(c, foreign); }), Errc::incompatible_genesis);
}
