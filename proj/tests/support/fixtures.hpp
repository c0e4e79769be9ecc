#pragma once

// Small scenarios shared by the unit tests.

#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "algosim/engine.hpp"
#include "algosim/error.hpp"

namespace algosim::fixture {

inline ScenarioConfig honest_config(std::uint64_t seed = 3, std::size_t users = 30, Round rounds = 6) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.num_genesis_users = users;
  cfg.rounds = rounds;
  cfg.params = desk_params(users, 5, 20);
  cfg.mode = ConsensusMode::both;
  return cfg;
}

/// Run once per test binary; tests copy what they mutate.
inline const ScenarioResult& honest_run() {
  static const ScenarioResult r = run_scenario(honest_config());
  return r;
}

/// The first round after genesis whose committed block has payments.
inline Round first_nonempty(const Chain& c) {
  for (Round r = 1; r <= c.tip_round(); ++r) {
    if (!c.block(r).empty()) return r;
  }
  return 0;
}

inline Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an algosim::Error");
}

inline std::string source_path(const std::string& rel) { return std::string(ALGOSIM_SOURCE_DIR) + "/" + rel; }

}  // namespace algosim::fixture
