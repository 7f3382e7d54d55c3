// SPDX-License-Identifier: Apache-2.0

#ifndef BOXREG_TEXT_HPP_
#define BOXREG_TEXT_HPP_

#include <string>

namespace boxreg {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace boxreg

#endif  // BOXREG_TEXT_HPP_
