// SPDX-License-Identifier: Apache-2.0

#include "boxreg/text.hpp"

#include <charconv>

namespace boxreg {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace boxreg
