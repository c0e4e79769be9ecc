#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace algosim {

enum class Errc {
  unauthorized_signer,
  unknown_user,
  key_destroyed,
  key_missing,
  invalid_transition,
  invalid_signature,
  insufficient_funds,
  round_out_of_range,
  incompatible_genesis,
  not_eligible,
  empty_input,
  precondition_violated,
  fork_infeasible,
  config_invalid,
  parse_error,
};

std::string_view to_string(Errc code);

/// Exception carrying a machine-checkable error code. `index` is set when the
/// error refers to a position in an input list (e.g. the offending payment).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace algosim
