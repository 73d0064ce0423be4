#pragma once

#include <cstdint>
#include <vector>

namespace rmtrack {

/// Axis-aligned box, top-left corner + extent, in pixels.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }

  bool valid() const;

  /// Smallest box containing both inputs.
  static BBox hull(const BBox& a, const BBox& b);
};

/// Intersection-over-union of two boxes; 0 when the union has zero area.
double iou_box(const BBox& a, const BBox& b);

/// Lattice a mask lives on: grid_w x grid_h cells of cell_size pixels each.
struct GridSpec {
  int grid_w = 0;
  int grid_h = 0;
  double cell_size = 1.0;

  std::int64_t cells() const {
    return static_cast<std::int64_t>(grid_w) * grid_h;
  }
  bool valid() const;
  bool operator==(const GridSpec&) const = default;
};

/// Binary mask over a GridSpec, stored as row-aligned packed 64-bit words.
/// Construction routines keep a foreground cell count and a loose bounding
/// rectangle of the foreground, which overlap tests use as a cheap reject.
class BinaryMask {
public:
  BinaryMask() = default;
  explicit BinaryMask(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::int64_t count() const { return count_; }
  bool empty() const { return count_ == 0; }

  bool get(int cx, int cy) const;
  void set(int cx, int cy, bool v);

  /// True when the foreground bounding rectangles cannot intersect.
  bool disjoint_bounds(const BinaryMask& other) const;

  std::int64_t intersect_count(const BinaryMask& other) const;

  bool operator==(const BinaryMask& other) const {
    return grid_ == other.grid_ && words_ == other.words_;
  }

private:
  friend BinaryMask rasterize_box(const BBox&, const GridSpec&);
  friend BinaryMask mask_restrict(const BinaryMask&, const BBox&);
  friend BinaryMask mask_union(const BinaryMask&, const BinaryMask&);
  friend BinaryMask mask_dilate(const BinaryMask&, int);
  friend BinaryMask mask_erode(const BinaryMask&, int);
  friend std::vector<std::int64_t> rle_encode(const BinaryMask&);
  friend BinaryMask rle_decode(const GridSpec&, const std::vector<std::int64_t>&);

  int words_per_row() const { return (grid_.grid_w + 63) / 64; }
  void clear_row_tails();
  void recount();
  void fill_rows(int r0, int r1, int c0, int c1);

  GridSpec grid_;
  std::vector<std::uint64_t> words_;
  std::int64_t count_ = 0;
  // Loose foreground bounds (inclusive); min > max means empty.
  int min_cx_ = 0, max_cx_ = -1, min_cy_ = 0, max_cy_ = -1;
};

/// Mask of cells whose centers lie inside the box (half-open on the
/// right/bottom edges).
BinaryMask rasterize_box(const BBox& b, const GridSpec& g);

/// |a ∩ b| / |a ∪ b| over foreground cells; 0 when both masks are empty.
/// Throws std::invalid_argument on grid mismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Foreground of m intersected with the rasterization of b.
BinaryMask mask_restrict(const BinaryMask& m, const BBox& b);

/// Cell-wise OR. Throws std::invalid_argument on grid mismatch.
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

/// n rounds of 4-neighbour dilation / erosion. Cells outside the grid count
/// as background, so erosion eats the grid border.
BinaryMask mask_dilate(const BinaryMask& m, int n);
BinaryMask mask_erode(const BinaryMask& m, int n);

/// Canonical run-length encoding: row-major, alternating background /
/// foreground run lengths, starting with a background run (which may be 0);
/// no other zero runs, no trailing zero run. Empty mask encodes as [area].
std::vector<std::int64_t> rle_encode(const BinaryMask& m);

/// Inverse of rle_encode. Accepts any run list with non-negative runs
/// summing to the grid area; throws SchemaError otherwise.
BinaryMask rle_decode(const GridSpec& g, const std::vector<std::int64_t>& runs);

}  // namespace rmtrack
