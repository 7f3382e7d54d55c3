// SPDX-License-Identifier: Apache-2.0
//
// Axis-aligned rectangle primitives in corner form. All arithmetic is plain
// IEEE double: min/max/multiply are exact wherever the operands allow it and
// no epsilon is folded into any result.

#ifndef BOXREG_GEOMETRY_HPP_
#define BOXREG_GEOMETRY_HPP_

#include <array>

namespace boxreg {

/// Unvalidated corner coordinates, e.g. straight from a model output.
struct RawBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
};

/// Canonical box: finite coordinates with x2 >= x1 and y2 >= y1. Zero-width
/// or zero-height boxes are representable; whether they are acceptable is
/// decided by the consumer (metrics reject degenerate ground truth).
class BBox {
 public:
  BBox() = default;
  /// Throws NonFiniteCoordinate or NonCanonicalBox.
  BBox(double x1, double y1, double x2, double y2);

  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double x2() const noexcept { return x2_; }
  double y2() const noexcept { return y2_; }
  double width() const noexcept { return x2_ - x1_; }
  double height() const noexcept { return y2_ - y1_; }

  /// Coordinates in (x1, y1, x2, y2) order.
  std::array<double, 4> coords() const noexcept { return {x1_, y1_, x2_, y2_}; }
  RawBox raw() const noexcept { return {x1_, y1_, x2_, y2_}; }

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x1_ = 0.0;
  double y1_ = 0.0;
  double x2_ = 0.0;
  double y2_ = 0.0;
};

/// Input image extent; the MPDIoU corner-distance normalizer is w^2 + h^2.
class ImageDims {
 public:
  /// Throws InvalidImageDims unless both extents are finite and positive.
  ImageDims(double width, double height);

  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }
  double diag_sq() const noexcept { return width_ * width_ + height_ * height_; }

  /// True when the box lies within [0, w] x [0, h].
  bool contains(const BBox& b) const noexcept;

  friend bool operator==(const ImageDims&, const ImageDims&) = default;

 private:
  double width_;
  double height_;
};

struct CenterForm {
  double xc = 0.0;
  double yc = 0.0;
  double bw = 0.0;
  double bh = 0.0;
};

/// Swaps corners where needed so the result is canonical.
/// Throws NonFiniteCoordinate on NaN/Inf.
BBox canonicalize(const RawBox& b);

double area(const BBox& b) noexcept;

/// Zero unless the overlap has strictly positive width and height.
double intersection_area(const BBox& a, const BBox& b) noexcept;

BBox enclosing_box(const BBox& a, const BBox& b) noexcept;

CenterForm to_center_form(const BBox& b) noexcept;

/// Inverse of to_center_form. The round trip is bit-exact whenever x1 + x2
/// and x2 - x1 (and likewise for y) are representable, which covers pixel
/// grids with up to ~30 bits of combined integer and fractional precision.
/// Throws InvalidArgument for negative or non-finite sizes.
BBox from_center_form(const CenterForm& c);

}  // namespace boxreg

#endif  // BOXREG_GEOMETRY_HPP_
