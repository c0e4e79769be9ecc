#pragma once

// Line-delimited JSON records for chains and run metrics, and the INI
// scenario config. Layouts are documented in docs/FORMATS.md.

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "algosim/engine.hpp"

namespace algosim {

struct ChainFile {
  std::uint64_t key_seed = 0;
  Status genesis;
  std::vector<Block> blocks;
  std::vector<Digest> stored_hashes;  // as written; not trusted
};

void write_chain(std::ostream& out, const Chain& chain, std::uint64_t key_seed);
/// Throws parse_error on malformed or truncated input.
ChainFile read_chain(std::istream& in);

nlohmann::ordered_json round_record(const RoundMetrics& m);
nlohmann::ordered_json summary_record(const ScenarioConfig& cfg, const ScenarioResult& result);

/// One round record per line followed by the summary record.
void write_metrics(std::ostream& out, const ScenarioConfig& cfg, const ScenarioResult& result);
/// Throws parse_error.
std::vector<nlohmann::ordered_json> read_metrics(std::istream& in);

/// Field-by-field differences between two metrics files; empty when equal.
std::vector<std::string> diff_metrics(const std::vector<nlohmann::ordered_json>& a,
                                      const std::vector<nlohmann::ordered_json>& b);

/// Reads an INI scenario file. Throws config_invalid (bad values, unknown
/// keys) or parse_error (unreadable file).
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(std::istream& in);

}  // namespace algosim
