#include "algosim/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "algosim/error.hpp"
#include "algosim/io.hpp"
#include "algosim/log.hpp"

namespace algosim {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<Round> rounds;
  std::string mode;
  std::string out_dir;
  std::size_t jobs = 1;
  std::size_t batch = 0;
};

ScenarioConfig configure(const RunOptions& o) {
  ScenarioConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.rounds) cfg.rounds = *o.rounds;
  if (!o.mode.empty()) {
    auto m = parse_mode(o.mode);
    if (!m) throw Error(Errc::config_invalid, "--mode must be ba, simple or both");
    cfg.mode = *m;
  }
  cfg.validate();
  return cfg;
}

void write_outputs(const fs::path& dir, const ScenarioConfig& cfg, const ScenarioResult& result) {
  fs::create_directories(dir);
  std::ofstream metrics(dir / "metrics.jsonl");
  write_metrics(metrics, cfg, result);
  for (std::size_t i = 0; i < result.chains.size(); ++i) {
    std::ofstream chain(dir / (i == 0 ? std::string("chain.jsonl") : "fork" + std::to_string(i) + ".jsonl"));
    write_chain(chain, result.chains[i], result.keys->key_seed());
  }
  if (!metrics) throw Error(Errc::parse_error, "cannot write to " + dir.string());
}

bool violated(const ScenarioResult& r) {
  const auto& s = r.metrics.summary;
  return s.forks_detected > 0 || s.validation_failures > 0 || s.audit_violations > 0 ||
         s.equivalence_mismatches > 0;
}

nlohmann::ordered_json stdout_summary(const ScenarioConfig& cfg, const ScenarioResult& r) {
  auto j = summary_record(cfg, r);
  j["wall_time_s"] = r.metrics.summary.wall_time;
  return j;
}

int cmd_run(const RunOptions& o, std::ostream& out) {
  ScenarioConfig base = configure(o);
  if (o.batch == 0) {
    auto result = run_scenario(base);
    for (const auto& m : result.metrics.rounds) out << round_record(m).dump() << '\n';
    out << stdout_summary(base, result).dump() << '\n';
    if (!o.out_dir.empty()) write_outputs(o.out_dir, base, result);
    return violated(result) ? kExitViolation : kExitOk;
  }

  // Independent seeds; results are only merged after every run finished.
  std::vector<std::optional<nlohmann::ordered_json>> lines(o.batch);
  std::vector<std::string> errors(o.batch);
  std::vector<bool> bad(o.batch, false);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < o.batch; i = next++) {
      ScenarioConfig cfg = base;
      cfg.seed = base.seed + i;
      try {
        auto result = run_scenario(cfg);
        lines[i] = stdout_summary(cfg, result);
        bad[i] = violated(result);
        if (!o.out_dir.empty()) write_outputs(fs::path(o.out_dir) / ("seed-" + std::to_string(cfg.seed)), cfg, result);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        bad[i] = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::max<std::size_t>(1, o.jobs); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool any = false;
  for (std::size_t i = 0; i < o.batch; ++i) {
    if (lines[i]) out << lines[i]->dump() << '\n';
    if (!errors[i].empty()) out << R"({"record":"error","seed":)" << base.seed + i << R"(,"message":)"
                                << nlohmann::json(errors[i]).dump() << "}\n";
    any = any || bad[i];
  }
  return any ? kExitViolation : kExitOk;
}

int cmd_verify(const std::string& chain_path, const std::string& config_path, std::ostream& out) {
  std::ifstream in(chain_path);
  if (!in) throw Error(Errc::parse_error, "cannot open chain file " + chain_path);
  ChainFile file = read_chain(in);
  ScenarioConfig cfg = load_config(config_path);
  ProtocolParams params = cfg.params;
  Round horizon = std::max<Round>(params.horizon ? params.horizon : cfg.rounds + 1, file.blocks.size());
  KeyRegistry keys(file.key_seed, horizon, params.max_step());

  std::size_t problems = 0;
  for (std::size_t i = 0; i < file.blocks.size(); ++i) {
    if (block_hash(file.blocks[i]) != file.stored_hashes[i]) {
      out << "round " << file.blocks[i].round << ": stored hash does not match block contents\n";
      ++problems;
    }
  }
  auto violations = validate_blocks(file.genesis, file.blocks, params, keys);
  for (const auto& v : violations) {
    out << "round " << v.round << ": " << to_string(v.violation.kind) << ": " << v.violation.detail << '\n';
  }
  problems += violations.size();
  if (problems == 0) out << "ok: " << file.blocks.size() << " blocks verified\n";
  return problems ? kExitViolation : kExitOk;
}

int cmd_compare(const std::string& a, const std::string& b, std::ostream& out) {
  auto load = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::parse_error, "cannot open metrics file " + path);
    return read_metrics(in);
  };
  auto diffs = diff_metrics(load(a), load(b));
  for (const auto& d : diffs) out << d << '\n';
  if (diffs.empty()) out << "identical\n";
  return diffs.empty() ? kExitOk : kExitViolation;
}

int cmd_attack(const std::string& kind, const RunOptions& o, std::ostream& out) {
  ScenarioConfig cfg = configure(o);
  auto strategy = parse_strategy(kind);
  if (!strategy || *strategy == Strategy::honest) throw Error(Errc::config_invalid, "unknown attack " + kind);
  cfg.adversary.strategy = *strategy;
  cfg.validate();
  auto result = run_scenario(cfg);
  for (const auto& f : result.forks) out << "fork: " << f.describe() << '\n';
  for (std::size_t i = 0; i < result.chains.size(); ++i) {
    out << (i == 0 ? "honest chain" : "attack chain") << ": " << result.chains[i].length() << " blocks, tip "
        << result.chains[i].tip_hash().hex() << '\n';
  }
  if (auto& failure = result.metrics.summary.attack_failure) out << *failure << '\n';
  out << stdout_summary(cfg, result).dump() << '\n';
  if (!o.out_dir.empty()) write_outputs(o.out_dir, cfg, result);
  return violated(result) ? kExitViolation : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic simulator of a committee-based proof-of-stake consensus protocol", "algosim"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "run a scenario and emit metrics");
  auto add_scenario_flags = [](CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config", o.config, "scenario config (INI)")->required();
    cmd->add_option("--seed", o.seed, "override the scenario seed");
    cmd->add_option("--rounds", o.rounds, "override the round count");
    cmd->add_option("--mode", o.mode, "ba | simple | both");
    cmd->add_option("--out", o.out_dir, "directory for metrics.jsonl and chain files");
  };
  add_scenario_flags(run, run_opts);
  run->add_option("--jobs", run_opts.jobs, "parallel runs in batch mode")->check(CLI::PositiveNumber);
  run->add_option("--batch", run_opts.batch, "run seeds seed .. seed+N-1");

  std::string chain_path, verify_config;
  auto* verify = app.add_subcommand("verify-chain", "replay and validate a chain file");
  verify->add_option("chain", chain_path, "chain file (JSONL)")->required();
  verify->add_option("--config", verify_config, "scenario config holding the protocol parameters")->required();

  std::string metrics_a, metrics_b;
  auto* compare = app.add_subcommand("compare", "diff two metrics files");
  compare->add_option("a", metrics_a)->required();
  compare->add_option("b", metrics_b)->required();

  RunOptions attack_opts;
  std::string attack_kind;
  auto* attack = app.add_subcommand("attack", "run a fork attack scenario");
  attack->add_option("kind", attack_kind, "genesis-fork | bribery")
      ->required()
      ->check(CLI::IsMember({"genesis-fork", "bribery"}));
  add_scenario_flags(attack, attack_opts);

  std::vector<const char*> argv{"algosim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_opts, out);
    if (*verify) return cmd_verify(chain_path, verify_config, out);
    if (*compare) return cmd_compare(metrics_a, metrics_b, out);
    if (*attack) return cmd_attack(attack_kind, attack_opts, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace algosim
