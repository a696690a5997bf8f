#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "tempora/rational.hpp"

namespace testutil {

// Unwrapping parse for test literals: every rational written in a test is
// expected to be well-formed, so a bad one is a bug in the test itself.
inline tempora::Rat rat(std::string_view text) {
  auto v = tempora::parse_rat(text);
  if (!v) throw std::runtime_error("bad rational literal in test: " + std::string(text));
  return *v;
}

}  // namespace testutil

using testutil::rat;
