// SPDX-License-Identifier: Apache-2.0

#include "boxreg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "boxreg/error.hpp"

namespace boxreg {

namespace {

std::string describe(double x1, double y1, double x2, double y2) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ")";
  return os.str();
}

bool all_finite(double x1, double y1, double x2, double y2) {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
}

}  // namespace

BBox::BBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!all_finite(x1, y1, x2, y2)) {
    throw Error(ErrorCode::kNonFiniteCoordinate, "box " + describe(x1, y1, x2, y2));
  }
  if (x2 < x1 || y2 < y1) {
    throw Error(ErrorCode::kNonCanonicalBox,
                "box " + describe(x1, y1, x2, y2) + " has x2 < x1 or y2 < y1");
  }
}

ImageDims::ImageDims(double width, double height) : width_(width), height_(height) {
  if (!(std::isfinite(width) && std::isfinite(height) && width > 0.0 && height > 0.0)) {
    std::ostringstream os;
    os << "image dims " << width << "x" << height << " must be finite and positive";
    throw Error(ErrorCode::kInvalidImageDims, os.str());
  }
}

bool ImageDims::contains(const BBox& b) const noexcept {
  return b.x1() >= 0.0 && b.y1() >= 0.0 && b.x2() <= width_ && b.y2() <= height_;
}

BBox canonicalize(const RawBox& b) {
  if (!all_finite(b.x1, b.y1, b.x2, b.y2)) {
    throw Error(ErrorCode::kNonFiniteCoordinate, "box " + describe(b.x1, b.y1, b.x2, b.y2));
  }
  auto [x1, x2] = std::minmax(b.x1, b.x2);
  auto [y1, y2] = std::minmax(b.y1, b.y2);
  return BBox(x1, y1, x2, y2);
}

double area(const BBox& b) noexcept { return b.width() * b.height(); }

double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double ix1 = std::max(a.x1(), b.x1());
  const double iy1 = std::max(a.y1(), b.y1());
  const double ix2 = std::min(a.x2(), b.x2());
  const double iy2 = std::min(a.y2(), b.y2());
  if (ix2 > ix1 && iy2 > iy1) {
    return (ix2 - ix1) * (iy2 - iy1);
  }
  return 0.0;
}

BBox enclosing_box(const BBox& a, const BBox& b) noexcept {
  // min/max of canonical corners is canonical, so the checked constructor
  // cannot throw here.
  return BBox(std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()), std::max(a.x2(), b.x2()),
              std::max(a.y2(), b.y2()));
}

CenterForm to_center_form(const BBox& b) noexcept {
  return {(b.x1() + b.x2()) / 2.0, (b.y1() + b.y2()) / 2.0, b.width(), b.height()};
}

BBox from_center_form(const CenterForm& c) {
  if (!(std::isfinite(c.bw) && std::isfinite(c.bh) && c.bw >= 0.0 && c.bh >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "center form needs finite non-negative size");
  }
  return canonicalize({c.xc - c.bw / 2.0, c.yc - c.bh / 2.0, c.xc + c.bw / 2.0, c.yc + c.bh / 2.0});
}

}  // namespace boxreg
