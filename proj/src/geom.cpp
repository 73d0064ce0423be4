#include "rmtrack/geom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "rmtrack/errors.hpp"

namespace rmtrack {

namespace {

// Bit pattern for columns [lo, hi) within one 64-bit word.
std::uint64_t word_range(int lo, int hi) {
  if (lo >= hi) return 0;
  const std::uint64_t upper = (hi >= 64) ? ~0ull : ((1ull << hi) - 1);
  const std::uint64_t lower = (lo <= 0) ? 0ull : ((1ull << lo) - 1);
  return upper & ~lower;
}

// First cell index c in [0, n] whose center (c + 0.5) * cell lies at or
// beyond edge. The ceil guess is corrected with the exact predicate so the
// result never depends on rounding in the division.
int first_center_at_or_after(double edge, double cell, int n) {
  double guess = std::ceil(edge / cell - 0.5);
  int c = static_cast<int>(std::clamp(guess, 0.0, static_cast<double>(n)));
  while (c > 0 && (c - 0.5) * cell >= edge) --c;
  while (c < n && (c + 0.5) * cell < edge) ++c;
  return c;
}

}  // namespace

bool BBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w >= 0.0 && h >= 0.0;
}

BBox BBox::hull(const BBox& a, const BBox& b) {
  const double x0 = std::min(a.x, b.x);
  const double y0 = std::min(a.y, b.y);
  const double x1 = std::max(a.x + a.w, b.x + b.w);
  const double y1 = std::max(a.y + a.h, b.y + b.h);
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

double iou_box(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

bool GridSpec::valid() const {
  return grid_w > 0 && grid_h > 0 && cell_size > 0.0 && std::isfinite(cell_size);
}

BinaryMask::BinaryMask(const GridSpec& grid) : grid_(grid) {
  if (!grid.valid()) throw std::invalid_argument("BinaryMask: invalid GridSpec");
  words_.assign(static_cast<std::size_t>(words_per_row()) * grid_.grid_h, 0);
}

bool BinaryMask::get(int cx, int cy) const {
  if (cx < 0 || cy < 0 || cx >= grid_.grid_w || cy >= grid_.grid_h) return false;
  const std::size_t idx = static_cast<std::size_t>(cy) * words_per_row() + cx / 64;
  return (words_[idx] >> (cx % 64)) & 1u;
}

void BinaryMask::set(int cx, int cy, bool v) {
  if (cx < 0 || cy < 0 || cx >= grid_.grid_w || cy >= grid_.grid_h)
    throw std::invalid_argument("BinaryMask::set: cell out of range");
  const std::size_t idx = static_cast<std::size_t>(cy) * words_per_row() + cx / 64;
  const std::uint64_t bit = 1ull << (cx % 64);
  const bool was = words_[idx] & bit;
  if (was == v) return;
  if (v) {
    words_[idx] |= bit;
    ++count_;
    if (count_ == 1) {
      min_cx_ = max_cx_ = cx;
      min_cy_ = max_cy_ = cy;
    } else {
      min_cx_ = std::min(min_cx_, cx);
      max_cx_ = std::max(max_cx_, cx);
      min_cy_ = std::min(min_cy_, cy);
      max_cy_ = std::max(max_cy_, cy);
    }
  } else {
    words_[idx] &= ~bit;
    --count_;
    // Bounds stay as a superset; clearing never tightens them.
    if (count_ == 0) {
      min_cx_ = min_cy_ = 0;
      max_cx_ = max_cy_ = -1;
    }
  }
}

bool BinaryMask::disjoint_bounds(const BinaryMask& other) const {
  if (count_ == 0 || other.count_ == 0) return true;
  return max_cx_ < other.min_cx_ || other.max_cx_ < min_cx_ ||
         max_cy_ < other.min_cy_ || other.max_cy_ < min_cy_;
}

std::int64_t BinaryMask::intersect_count(const BinaryMask& other) const {
  if (disjoint_bounds(other)) return 0;
  const int wpr = words_per_row();
  const int r0 = std::max(min_cy_, other.min_cy_);
  const int r1 = std::min(max_cy_, other.max_cy_);
  const int w0 = std::max(min_cx_, other.min_cx_) / 64;
  const int w1 = std::min(max_cx_, other.max_cx_) / 64;
  std::int64_t n = 0;
  for (int r = r0; r <= r1; ++r) {
    const std::uint64_t* a = words_.data() + static_cast<std::size_t>(r) * wpr;
    const std::uint64_t* b = other.words_.data() + static_cast<std::size_t>(r) * wpr;
    for (int w = w0; w <= w1; ++w) n += std::popcount(a[w] & b[w]);
  }
  return n;
}

void BinaryMask::clear_row_tails() {
  const int rem = grid_.grid_w % 64;
  if (rem == 0) return;
  const int wpr = words_per_row();
  const std::uint64_t keep = (1ull << rem) - 1;
  for (int r = 0; r < grid_.grid_h; ++r)
    words_[static_cast<std::size_t>(r) * wpr + wpr - 1] &= keep;
}

void BinaryMask::recount() {
  count_ = 0;
  min_cx_ = min_cy_ = 0;
  max_cx_ = max_cy_ = -1;
  const int wpr = words_per_row();
  bool any = false;
  for (int r = 0; r < grid_.grid_h; ++r) {
    const std::uint64_t* row = words_.data() + static_cast<std::size_t>(r) * wpr;
    int lo = -1, hi = -1;
    for (int w = 0; w < wpr; ++w) {
      if (row[w] == 0) continue;
      count_ += std::popcount(row[w]);
      const int first = w * 64 + std::countr_zero(row[w]);
      const int last = w * 64 + 63 - std::countl_zero(row[w]);
      if (lo < 0) lo = first;
      hi = last;
    }
    if (lo < 0) continue;
    if (!any) {
      any = true;
      min_cy_ = r;
      min_cx_ = lo;
      max_cx_ = hi;
    } else {
      min_cx_ = std::min(min_cx_, lo);
      max_cx_ = std::max(max_cx_, hi);
    }
    max_cy_ = r;
  }
}

void BinaryMask::fill_rows(int r0, int r1, int c0, int c1) {
  if (r0 >= r1 || c0 >= c1) return;
  const int wpr = words_per_row();
  const int wa = c0 / 64;
  const int wb = (c1 - 1) / 64;
  for (int r = r0; r < r1; ++r) {
    std::uint64_t* row = words_.data() + static_cast<std::size_t>(r) * wpr;
    for (int w = wa; w <= wb; ++w)
      row[w] |= word_range(std::max(c0 - w * 64, 0), std::min(c1 - w * 64, 64));
  }
}

BinaryMask rasterize_box(const BBox& b, const GridSpec& g) {
  if (!b.valid()) throw std::invalid_argument("rasterize_box: invalid box");
  BinaryMask m(g);
  const int c0 = first_center_at_or_after(b.x, g.cell_size, g.grid_w);
  const int c1 = first_center_at_or_after(b.x + b.w, g.cell_size, g.grid_w);
  const int r0 = first_center_at_or_after(b.y, g.cell_size, g.grid_h);
  const int r1 = first_center_at_or_after(b.y + b.h, g.cell_size, g.grid_h);
  m.fill_rows(r0, r1, c0, c1);
  if (c0 < c1 && r0 < r1) {
    m.count_ = static_cast<std::int64_t>(c1 - c0) * (r1 - r0);
    m.min_cx_ = c0;
    m.max_cx_ = c1 - 1;
    m.min_cy_ = r0;
    m.max_cy_ = r1 - 1;
  }
  return m;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("mask_iou: grid mismatch");
  if (a.count() == 0 && b.count() == 0) return 0.0;
  const std::int64_t inter = a.intersect_count(b);
  const std::int64_t uni = a.count() + b.count() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask mask_restrict(const BinaryMask& m, const BBox& b) {
  if (!b.valid()) throw std::invalid_argument("mask_restrict: invalid box");
  const GridSpec& g = m.grid();
  BinaryMask out(g);
  const int c0 = first_center_at_or_after(b.x, g.cell_size, g.grid_w);
  const int c1 = first_center_at_or_after(b.x + b.w, g.cell_size, g.grid_w);
  const int r0 = first_center_at_or_after(b.y, g.cell_size, g.grid_h);
  const int r1 = first_center_at_or_after(b.y + b.h, g.cell_size, g.grid_h);
  if (c0 >= c1 || r0 >= r1 || m.count_ == 0) return out;
  const int wpr = out.words_per_row();
  const int wa = c0 / 64;
  const int wb = (c1 - 1) / 64;
  for (int r = r0; r < r1; ++r) {
    const std::uint64_t* src = m.words_.data() + static_cast<std::size_t>(r) * wpr;
    std::uint64_t* dst = out.words_.data() + static_cast<std::size_t>(r) * wpr;
    for (int w = wa; w <= wb; ++w) {
      const std::uint64_t pat =
          word_range(std::max(c0 - w * 64, 0), std::min(c1 - w * 64, 64));
      dst[w] = src[w] & pat;
    }
  }
  out.recount();
  return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (!(a.grid() == b.grid()))
    throw std::invalid_argument("mask_union: grid mismatch");
  BinaryMask out = a;
  for (std::size_t i = 0; i < out.words_.size(); ++i) out.words_[i] |= b.words_[i];
  out.recount();
  return out;
}

BinaryMask mask_dilate(const BinaryMask& m, int n) {
  if (n < 0) throw std::invalid_argument("mask_dilate: negative rounds");
  BinaryMask cur = m;
  const int wpr = cur.words_per_row();
  const int rows = cur.grid_.grid_h;
  for (int round = 0; round < n; ++round) {
    if (cur.count_ == 0) break;
    BinaryMask next(cur.grid_);
    for (int r = 0; r < rows; ++r) {
      const std::uint64_t* row = cur.words_.data() + static_cast<std::size_t>(r) * wpr;
      const std::uint64_t* up =
          (r > 0) ? cur.words_.data() + static_cast<std::size_t>(r - 1) * wpr : nullptr;
      const std::uint64_t* dn =
          (r + 1 < rows) ? cur.words_.data() + static_cast<std::size_t>(r + 1) * wpr : nullptr;
      std::uint64_t* out = next.words_.data() + static_cast<std::size_t>(r) * wpr;
      for (int w = 0; w < wpr; ++w) {
        const std::uint64_t carry_l = (w > 0) ? (row[w - 1] >> 63) : 0;
        const std::uint64_t carry_r = (w + 1 < wpr) ? (row[w + 1] << 63) : 0;
        std::uint64_t v = row[w];
        v |= (row[w] << 1) | carry_l;
        v |= (row[w] >> 1) | carry_r;
        if (up) v |= up[w];
        if (dn) v |= dn[w];
        out[w] = v;
      }
    }
    next.clear_row_tails();
    next.recount();
    cur = std::move(next);
  }
  return cur;
}

BinaryMask mask_erode(const BinaryMask& m, int n) {
  if (n < 0) throw std::invalid_argument("mask_erode: negative rounds");
  BinaryMask cur = m;
  const int wpr = cur.words_per_row();
  const int rows = cur.grid_.grid_h;
  for (int round = 0; round < n; ++round) {
    if (cur.count_ == 0) break;
    BinaryMask next(cur.grid_);
    for (int r = 0; r < rows; ++r) {
      const std::uint64_t* row = cur.words_.data() + static_cast<std::size_t>(r) * wpr;
      const std::uint64_t* up =
          (r > 0) ? cur.words_.data() + static_cast<std::size_t>(r - 1) * wpr : nullptr;
      const std::uint64_t* dn =
          (r + 1 < rows) ? cur.words_.data() + static_cast<std::size_t>(r + 1) * wpr : nullptr;
      std::uint64_t* out = next.words_.data() + static_cast<std::size_t>(r) * wpr;
      for (int w = 0; w < wpr; ++w) {
        const std::uint64_t carry_l = (w > 0) ? (row[w - 1] >> 63) : 0;
        const std::uint64_t carry_r = (w + 1 < wpr) ? (row[w + 1] << 63) : 0;
        // Tail bits past grid_w are kept zero, so shifts pull in background
        // at the row edges on their own.
        const std::uint64_t left_nb = (row[w] << 1) | carry_l;
        const std::uint64_t right_nb = (row[w] >> 1) | carry_r;
        std::uint64_t v = row[w] & left_nb & right_nb;
        v &= up ? up[w] : 0ull;
        v &= dn ? dn[w] : 0ull;
        out[w] = v;
      }
    }
    next.clear_row_tails();
    next.recount();
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::int64_t> rle_encode(const BinaryMask& m) {
  const GridSpec& g = m.grid();
  const int wpr = m.words_per_row();
  std::vector<std::int64_t> runs;
  std::int64_t run = 0;
  bool cur_fg = false;  // canonical form starts with a background run
  for (int r = 0; r < g.grid_h; ++r) {
    const std::uint64_t* row = m.words_.data() + static_cast<std::size_t>(r) * wpr;
    int c = 0;
    while (c < g.grid_w) {
      const std::uint64_t chunk = row[c / 64] >> (c % 64);
      const int avail = std::min(64 - c % 64, g.grid_w - c);
      int len = cur_fg ? std::countr_one(chunk) : std::countr_zero(chunk);
      if (len > avail) len = avail;
      if (len == 0) {
        runs.push_back(run);
        cur_fg = !cur_fg;
        run = 0;
        continue;
      }
      run += len;
      c += len;
    }
  }
  runs.push_back(run);
  return runs;
}

BinaryMask rle_decode(const GridSpec& g, const std::vector<std::int64_t>& runs) {
  if (!g.valid()) throw SchemaError("rle_decode: invalid grid");
  BinaryMask m(g);
  std::int64_t total = 0;
  for (const std::int64_t r : runs) {
    if (r < 0) throw SchemaError("rle_decode: negative run length");
    total += r;
  }
  if (total != g.cells())
    throw SchemaError("rle_decode: run lengths sum to " + std::to_string(total) +
                      ", expected " + std::to_string(g.cells()));
  std::int64_t pos = 0;
  bool fg = false;
  for (const std::int64_t r : runs) {
    if (fg && r > 0) {
      // Fill [pos, pos + r) linear cells row by row.
      std::int64_t i = pos;
      const std::int64_t end = pos + r;
      while (i < end) {
        const int row = static_cast<int>(i / g.grid_w);
        const int col = static_cast<int>(i % g.grid_w);
        const int span = static_cast<int>(std::min<std::int64_t>(end - i, g.grid_w - col));
        m.fill_rows(row, row + 1, col, col + span);
        i += span;
      }
    }
    pos += r;
    fg = !fg;
  }
  m.recount();
  return m;
}

}  // namespace rmtrack
