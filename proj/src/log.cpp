#include "algosim/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace algosim {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("algosim");
    const char* env = std::getenv("ALGOSIM_LOG");
    l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::off);
    return l;
  }();
  return *instance;
}

}  // namespace algosim
