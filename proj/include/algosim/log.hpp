#pragma once

#include <spdlog/spdlog.h>

namespace algosim {

/// Shared stderr logger. Its level comes from ALGOSIM_LOG (off|info|trace,
/// plus any other spdlog level name); unset means off.
spdlog::logger& logger();

}  // namespace algosim
