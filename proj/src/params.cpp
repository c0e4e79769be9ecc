#include "algosim/params.hpp"

#include <cmath>
#include <string>

#include "algosim/error.hpp"

namespace algosim {

void ProtocolParams::validate() const {
  auto fail = [](const std::string& what) { throw Error(Errc::config_invalid, what); };
  if (!(p > 0.0 && p <= 1.0)) fail("p must be in (0, 1]");
  if (!(p_prime > 0.0 && p_prime <= 1.0)) fail("p_prime must be in (0, 1]");
  if (k < 1) fail("k must be at least 1");
  if (m < 1) fail("m must be at least 1");
  if (t_H < 1) fail("t_H must be at least 1");
}

std::size_t ProtocolParams::default_threshold(double expected_committee) {
  return static_cast<std::size_t>(std::floor(2.0 * expected_committee / 3.0)) + 1;
}

}  // namespace algosim
