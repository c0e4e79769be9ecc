#include "algosim/io.hpp"

#include <istream>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "algosim/error.hpp"
#include "algosim/sortition.hpp"

namespace algosim {

using nlohmann::ordered_json;

namespace {

ordered_json credential_json(const Credential& c) {
  return {{"user", c.user.value}, {"round", c.round}, {"step", c.step}, {"sig", c.sig.hex()}};
}

ordered_json block_json(const Block& b, const Digest& digest) {
  ordered_json j;
  j["round"] = b.round;
  j["payset"] = ordered_json::array();
  for (const auto& p : b.payset) {
    j["payset"].push_back({{"payer", p.payer.value}, {"payee", p.payee.value}, {"amount", p.amount},
                           {"sig", p.sig.hex()}});
  }
  j["seed"] = b.seed.hex();
  j["prev_hash"] = b.prev_hash.hex();
  j["cert"] = ordered_json::array();
  for (const auto& m : b.cert) {
    j["cert"].push_back({{"voter", m.voter.value}, {"round", m.round}, {"step", m.step}, {"bit", m.bit},
                         {"block_digest", m.block_digest.hex()}, {"sig", m.sig.hex()},
                         {"credential", credential_json(m.credential)}});
  }
  j["hash"] = digest.hex();
  return j;
}

template <typename T>
T from_hex_field(const ordered_json& j, const char* key) {
  return T::from_hex(j.at(key).get<std::string>());
}

Credential credential_from(const ordered_json& j) {
  Credential c;
  c.user = UserId{j.at("user").get<std::uint64_t>()};
  c.round = j.at("round").get<Round>();
  c.step = j.at("step").get<Step>();
  c.sig = from_hex_field<UniqueSignature>(j, "sig");
  c.unit = credential_unit(c.sig);
  return c;
}

Block block_from(const ordered_json& j) {
  Block b;
  b.round = j.at("round").get<Round>();
  for (const auto& p : j.at("payset")) {
    b.payset.push_back({UserId{p.at("payer").get<std::uint64_t>()}, UserId{p.at("payee").get<std::uint64_t>()},
                        p.at("amount").get<Amount>(), from_hex_field<UniqueSignature>(p, "sig")});
  }
  b.seed = from_hex_field<Digest>(j, "seed");
  b.prev_hash = from_hex_field<Digest>(j, "prev_hash");
  for (const auto& m : j.at("cert")) {
    CertMessage c;
    c.voter = UserId{m.at("voter").get<std::uint64_t>()};
    c.round = m.at("round").get<Round>();
    c.step = m.at("step").get<Step>();
    c.bit = m.at("bit").get<std::uint8_t>();
    c.block_digest = from_hex_field<Digest>(m, "block_digest");
    c.sig = from_hex_field<UniqueSignature>(m, "sig");
    c.credential = credential_from(m.at("credential"));
    b.cert.push_back(std::move(c));
  }
  return b;
}

ordered_json optional_hex(const std::optional<Digest>& d) { return d ? ordered_json(d->hex()) : ordered_json(nullptr); }

}  // namespace

void write_chain(std::ostream& out, const Chain& chain, std::uint64_t key_seed) {
  ordered_json header;
  header["record"] = "chain";
  header["key_seed"] = key_seed;
  header["genesis"] = ordered_json::array();
  for (const auto& [u, a] : chain.genesis_status().balances) header["genesis"].push_back({u.value, a});
  header["blocks"] = chain.length();
  out << header.dump() << '\n';
  for (Round r = 0; r < chain.length(); ++r) out << block_json(chain.block(r), chain.hash_at(r)).dump() << '\n';
}

ChainFile read_chain(std::istream& in) {
  ChainFile f;
  std::string line;
  try {
    if (!std::getline(in, line)) throw Error(Errc::parse_error, "empty chain file");
    auto header = ordered_json::parse(line);
    if (header.at("record") != "chain") throw Error(Errc::parse_error, "missing chain header");
    f.key_seed = header.at("key_seed").get<std::uint64_t>();
    for (const auto& g : header.at("genesis")) {
      f.genesis.balances[UserId{g.at(0).get<std::uint64_t>()}] = g.at(1).get<Amount>();
    }
    auto count = header.at("blocks").get<std::size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = ordered_json::parse(line);
      f.blocks.push_back(block_from(j));
      f.stored_hashes.push_back(from_hex_field<Digest>(j, "hash"));
    }
    if (f.blocks.size() != count) {
      throw Error(Errc::parse_error, "chain file truncated: header says " + std::to_string(count) + " blocks, found " +
                                         std::to_string(f.blocks.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(Errc::parse_error, e.what());
  }
  return f;
}

ordered_json round_record(const RoundMetrics& m) {
  ordered_json j;
  j["record"] = "round";
  j["round"] = m.round;
  j["leader"] = m.leader ? ordered_json(m.leader->value) : ordered_json(nullptr);
  j["committee_sizes"] = ordered_json::array();
  for (const auto& c : m.committee_sizes) j["committee_sizes"].push_back({c.step, c.size});
  j["steps_to_decision"] = m.steps_to_decision;
  j["ba_digest"] = optional_hex(m.ba_digest);
  j["simple_digest"] = optional_hex(m.simple_digest);
  j["equivalent"] = m.equivalent;
  j["empty_block"] = m.empty_block;
  j["message_count"] = m.message_count;
  j["payments"] = m.payments;
  j["no_termination"] = m.no_termination;
  j["inconsistent"] = m.inconsistent;
  return j;
}

ordered_json summary_record(const ScenarioConfig& cfg, const ScenarioResult& result) {
  const auto& s = result.metrics.summary;
  ordered_json j;
  j["record"] = "summary";
  j["seed"] = cfg.seed;
  j["rounds"] = cfg.rounds;
  j["mode"] = to_string(cfg.mode);
  j["strategy"] = to_string(cfg.adversary.strategy);
  j["forks_detected"] = s.forks_detected;
  j["fork_descriptions"] = s.fork_descriptions;
  j["total_messages"] = s.total_messages;
  j["validation_failures"] = s.validation_failures;
  j["audit_violations"] = s.audit_violations;
  j["equivalence_mismatches"] = s.equivalence_mismatches;
  j["attack_failure"] = s.attack_failure ? ordered_json(*s.attack_failure) : ordered_json(nullptr);
  j["chain_lengths"] = ordered_json::array();
  for (const auto& c : result.chains) j["chain_lengths"].push_back(c.length());
  j["tip_hash"] = result.chains.front().tip_hash().hex();
  return j;
}

void write_metrics(std::ostream& out, const ScenarioConfig& cfg, const ScenarioResult& result) {
  for (const auto& m : result.metrics.rounds) out << round_record(m).dump() << '\n';
  out << summary_record(cfg, result).dump() << '\n';
}

std::vector<ordered_json> read_metrics(std::istream& in) {
  std::vector<ordered_json> out;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = ordered_json::parse(line);
      if (!j.is_object() || !j.contains("record")) throw Error(Errc::parse_error, "record without a type");
      out.push_back(std::move(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  }
  return out;
}

std::vector<std::string> diff_metrics(const std::vector<ordered_json>& a, const std::vector<ordered_json>& b) {
  std::vector<std::string> out;
  auto rounds = [](const std::vector<ordered_json>& v) {
    std::vector<const ordered_json*> r;
    for (const auto& j : v) {
      if (j.at("record") == "round") r.push_back(&j);
    }
    return r;
  };
  auto ra = rounds(a);
  auto rb = rounds(b);
  if (ra.size() != rb.size()) {
    out.push_back("length mismatch: " + std::to_string(ra.size()) + " vs " + std::to_string(rb.size()) + " rounds");
  }
  auto compare = [&](const std::string& label, const ordered_json& x, const ordered_json& y) {
    std::set<std::string> keys;
    for (const auto& [k, v] : x.items()) keys.insert(k);
    for (const auto& [k, v] : y.items()) keys.insert(k);
    for (const auto& k : keys) {
      auto vx = x.contains(k) ? x.at(k).dump() : "<missing>";
      auto vy = y.contains(k) ? y.at(k).dump() : "<missing>";
      if (vx != vy) out.push_back(label + " " + k + ": " + vx + " != " + vy);
    }
  };
  for (std::size_t i = 0; i < std::min(ra.size(), rb.size()); ++i) {
    compare("round " + ra[i]->at("round").dump(), *ra[i], *rb[i]);
  }
  auto summary = [](const std::vector<ordered_json>& v) -> const ordered_json* {
    for (const auto& j : v) {
      if (j.at("record") == "summary") return &j;
    }
    return nullptr;
  };
  const auto* sa = summary(a);
  const auto* sb = summary(b);
  if (sa && sb) {
    compare("summary", *sa, *sb);
  } else if (sa || sb) {
    out.emplace_back("summary present in only one file");
  }
  return out;
}

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"scenario",
     {"seed", "genesis_users", "initial_balance", "rounds", "mode", "payments_per_round", "new_users_per_round",
      "growth_start_round"}},
    {"protocol", {"expected_leaders", "expected_committee", "p", "p_prime", "k", "m", "t_H", "horizon"}},
    {"adversary", {"strategy", "fork_round", "retention_fraction", "target_round"}},
};

template <typename T>
T get(const pt::ptree& tree, const std::string& path, T fallback) {
  auto node = tree.get_child_optional(path);
  if (!node) return fallback;
  auto text = node->get_value<std::string>();
  if constexpr (std::is_unsigned_v<T>) {
    if (!text.empty() && text.front() == '-') throw Error(Errc::config_invalid, path + " must be non-negative");
  }
  auto v = node->get_value_optional<T>();
  if (!v) throw Error(Errc::config_invalid, "bad value for " + path + ": '" + text + "'");
  return *v;
}

}  // namespace

ScenarioConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::parse_error, e.what());
  }
  for (const auto& [section, body] : tree) {
    auto known = kKnownKeys.find(section);
    if (known == kKnownKeys.end()) throw Error(Errc::config_invalid, "unknown section [" + section + "]");
    if (!body.data().empty()) throw Error(Errc::config_invalid, "key outside a section: " + section);
    for (const auto& [key, value] : body) {
      if (!known->second.contains(key)) throw Error(Errc::config_invalid, "unknown key " + section + "." + key);
    }
  }

  ScenarioConfig cfg;
  cfg.seed = get<std::uint64_t>(tree, "scenario.seed", cfg.seed);
  cfg.num_genesis_users = get<std::size_t>(tree, "scenario.genesis_users", cfg.num_genesis_users);
  cfg.initial_balance = get<Amount>(tree, "scenario.initial_balance", cfg.initial_balance);
  cfg.rounds = get<Round>(tree, "scenario.rounds", cfg.rounds);
  auto mode = get<std::string>(tree, "scenario.mode", "both");
  auto parsed_mode = parse_mode(mode);
  if (!parsed_mode) throw Error(Errc::config_invalid, "mode must be ba, simple or both");
  cfg.mode = *parsed_mode;
  cfg.workload.payments_per_round = get<std::size_t>(tree, "scenario.payments_per_round", cfg.workload.payments_per_round);
  cfg.workload.new_users_per_round = get<std::size_t>(tree, "scenario.new_users_per_round", cfg.workload.new_users_per_round);
  cfg.workload.growth_start_round = get<Round>(tree, "scenario.growth_start_round", cfg.workload.growth_start_round);

  if (cfg.num_genesis_users < 1) throw Error(Errc::config_invalid, "genesis_users must be positive");
  auto leaders = get<double>(tree, "protocol.expected_leaders", 5.0);
  auto committee = get<double>(tree, "protocol.expected_committee", 20.0);
  auto& p = cfg.params;
  p = desk_params(cfg.num_genesis_users, leaders, committee);
  p.p = get<double>(tree, "protocol.p", p.p);
  p.p_prime = get<double>(tree, "protocol.p_prime", p.p_prime);
  p.t_H = ProtocolParams::default_threshold(p.p_prime * static_cast<double>(cfg.num_genesis_users));
  p.t_H = get<std::size_t>(tree, "protocol.t_H", p.t_H);
  p.k = get<Round>(tree, "protocol.k", p.k);
  p.m = get<Step>(tree, "protocol.m", p.m);
  p.horizon = get<Round>(tree, "protocol.horizon", p.horizon);

  auto strategy = get<std::string>(tree, "adversary.strategy", "honest");
  auto parsed = parse_strategy(strategy);
  if (!parsed) throw Error(Errc::config_invalid, "unknown adversary strategy '" + strategy + "'");
  cfg.adversary.strategy = *parsed;
  cfg.adversary.fork_round = get<Round>(tree, "adversary.fork_round", cfg.adversary.fork_round);
  cfg.adversary.retention_fraction = get<double>(tree, "adversary.retention_fraction", cfg.adversary.retention_fraction);
  cfg.adversary.target_round = get<Round>(tree, "adversary.target_round", cfg.adversary.target_round);

  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open config " + path);
  return parse_config(in);
}

}  // namespace algosim
