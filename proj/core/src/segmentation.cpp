#include "binpick/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "binpick/error.hpp"

namespace binpick {
namespace {

// Clamped pixel access (replicated border).
inline int clamp_coord(long v, std::size_t n) {
  return static_cast<int>(std::clamp<long>(v, 0, static_cast<long>(n) - 1));
}

void require_min_size(const GrayImage& img) {
  if (img.width < 3 || img.height < 3) {
    throw Error(Errc::image_too_small, "image must be at least 3x3");
  }
}

// Clockwise 8-neighbourhood on a y-down grid, starting east.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int dx, int dy) {
  for (int d = 0; d < 8; ++d) {
    if (kDx[d] == dx && kDy[d] == dy) return d;
  }
  return 4;
}

EdgeMap dilate_3x3(const EdgeMap& in) {
  EdgeMap out{in.width, in.height, std::vector<std::uint8_t>(in.bits.size(), 0)};
  const long w = static_cast<long>(in.width);
  const long h = static_cast<long>(in.height);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      if (!in.bits[y * w + x]) continue;
      for (long yy = std::max(0L, y - 1); yy <= std::min(h - 1, y + 1); ++yy) {
        for (long xx = std::max(0L, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
          out.bits[yy * w + xx] = 1;
        }
      }
    }
  }
  return out;
}

struct Region {
  std::size_t first = 0;  // raster-first pixel index
  std::size_t pixels = 0;
  bool touches_border = false;
};

// Labels 4-connected runs of non-edge pixels; edge pixels get -1.
std::vector<Region> label_regions(const EdgeMap& edges, std::vector<int>& labels) {
  const std::size_t w = edges.width;
  const std::size_t h = edges.height;
  labels.assign(w * h, -1);
  std::vector<Region> regions;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (edges.bits[start] || labels[start] != -1) continue;
    const int id = static_cast<int>(regions.size());
    Region region{start, 0, false};
    labels[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++region.pixels;
      const std::size_t x = p % w;
      const std::size_t y = p / w;
      if (x == 0 || y == 0 || x + 1 == w || y + 1 == h) region.touches_border = true;
      auto visit = [&](std::size_t q) {
        if (!edges.bits[q] && labels[q] == -1) {
          labels[q] = id;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    regions.push_back(region);
  }
  return regions;
}

// Moore-neighbour tracing of the outer boundary of one labelled region.
std::vector<PixelPoint> trace_outer_boundary(const std::vector<int>& labels, std::size_t w,
                                             std::size_t h, int label, std::size_t first) {
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < static_cast<int>(w) && y < static_cast<int>(h) &&
           labels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] == label;
  };

  const PixelPoint start{static_cast<int>(first % w), static_cast<int>(first / w)};
  std::vector<PixelPoint> boundary{start};

  PixelPoint current = start;
  PixelPoint back{start.x - 1, start.y};  // west of the raster-first pixel is outside
  std::optional<PixelPoint> first_step;
  const std::size_t guard = 8 * w * h + 16;

  for (std::size_t iter = 0; iter < guard; ++iter) {
    const int back_dir = direction_of(back.x - current.x, back.y - current.y);
    std::optional<PixelPoint> next;
    PixelPoint next_back = back;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back_dir + k) % 8;
      const PixelPoint candidate{current.x + kDx[d], current.y + kDy[d]};
      if (inside(candidate.x, candidate.y)) {
        next = candidate;
        const int pd = (back_dir + k - 1) % 8;
        next_back = {current.x + kDx[pd], current.y + kDy[pd]};
        break;
      }
    }
    if (!next) break;  // isolated pixel
    if (current == start) {
      if (first_step && *next == *first_step) break;
      if (!first_step) first_step = next;
    }
    boundary.push_back(*next);
    back = next_back;
    current = *next;
  }
  if (boundary.size() > 1 && boundary.back() == boundary.front()) boundary.pop_back();
  return boundary;
}

double shoelace_area(const std::vector<PixelPoint>& poly) {
  if (poly.size() < 3) return 0.0;
  long long twice = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const PixelPoint& a = poly[i];
    const PixelPoint& b = poly[(i + 1) % poly.size()];
    twice += static_cast<long long>(a.x) * b.y - static_cast<long long>(b.x) * a.y;
  }
  return std::abs(static_cast<double>(twice)) * 0.5;
}

bool bbox_strictly_contains(const Contour& outer, const Contour& inner) {
  return outer.min_x() < inner.min_x() && outer.max_x() > inner.max_x() &&
         outer.min_y() < inner.min_y() && outer.max_y() > inner.max_y();
}

void assign_depths(std::vector<Contour>& contours) {
  for (auto& c : contours) {
    int depth = 0;
    std::optional<std::size_t> p = c.parent_index;
    while (p) {
      ++depth;
      p = contours[*p].parent_index;
    }
    c.depth = depth;
  }
}

}  // namespace

std::size_t EdgeMap::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

int Contour::min_x() const {
  return std::min_element(vertices.begin(), vertices.end(),
                          [](auto& a, auto& b) { return a.x < b.x; })->x;
}
int Contour::max_x() const {
  return std::max_element(vertices.begin(), vertices.end(),
                          [](auto& a, auto& b) { return a.x < b.x; })->x;
}
int Contour::min_y() const {
  return std::min_element(vertices.begin(), vertices.end(),
                          [](auto& a, auto& b) { return a.y < b.y; })->y;
}
int Contour::max_y() const {
  return std::max_element(vertices.begin(), vertices.end(),
                          [](auto& a, auto& b) { return a.y < b.y; })->y;
}

const char* to_string(MaskRole role) { return role == MaskRole::child ? "child" : "parent"; }

std::size_t BinaryMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

GrayImage BinaryMask::to_image() const {
  GrayImage img(width, height);
  for (std::size_t i = 0; i < bits.size(); ++i) img.pixels[i] = bits[i] ? 255 : 0;
  return img;
}

BinaryMask BinaryMask::from_image(const GrayImage& img, MaskRole role) {
  BinaryMask m{img.width, img.height, std::vector<std::uint8_t>(img.size(), 0), role, 0};
  for (std::size_t i = 0; i < img.size(); ++i) m.bits[i] = img.pixels[i] >= 128 ? 1 : 0;
  return m;
}

GrayImage extract_roi(const GrayImage& img, const PixelRect& rect) {
  if (rect.width == 0 || rect.height == 0 || rect.x + rect.width > img.width ||
      rect.y + rect.height > img.height) {
    throw Error(Errc::out_of_bounds, "ROI rectangle exceeds image bounds");
  }
  GrayImage out(rect.width, rect.height);
  for (std::size_t y = 0; y < rect.height; ++y) {
    const auto* src = img.pixels.data() + (rect.y + y) * img.width + rect.x;
    std::copy(src, src + rect.width, out.pixels.begin() + static_cast<long>(y * rect.width));
  }
  return out;
}

GrayImage gaussian_smooth_3x3(const GrayImage& img) {
  require_min_size(img);
  static constexpr int kWeights[3] = {1, 2, 1};
  const std::size_t w = img.width;
  const std::size_t h = img.height;
  GrayImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      int acc = 0;
      for (int j = -1; j <= 1; ++j) {
        const int yy = clamp_coord(static_cast<long>(y) + j, h);
        for (int i = -1; i <= 1; ++i) {
          const int xx = clamp_coord(static_cast<long>(x) + i, w);
          acc += kWeights[i + 1] * kWeights[j + 1] * img.pixels[yy * w + xx];
        }
      }
      out.pixels[y * w + x] = static_cast<std::uint8_t>((acc + 8) >> 4);
    }
  }
  return out;
}

Gradients sobel_gradients(const GrayImage& img) {
  require_min_size(img);
  const std::size_t w = img.width;
  const std::size_t h = img.height;
  Gradients g{w, h, std::vector<int>(w * h), std::vector<int>(w * h), std::vector<double>(w * h)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      int sx = 0;
      int sy = 0;
      for (int j = 0; j < 3; ++j) {
        const int yy = clamp_coord(static_cast<long>(y) + j - 1, h);
        for (int i = 0; i < 3; ++i) {
          const int xx = clamp_coord(static_cast<long>(x) + i - 1, w);
          const int v = img.pixels[yy * w + xx];
          sx += kGradientKernelX[j][i] * v;
          sy += kGradientKernelY[j][i] * v;
        }
      }
      const std::size_t k = y * w + x;
      g.gx[k] = sx;
      g.gy[k] = sy;
      g.magnitude[k] = std::sqrt(static_cast<double>(sx) * sx + static_cast<double>(sy) * sy);
    }
  }
  return g;
}

EdgeMap auto_canny(const GrayImage& img, double sigma) {
  EdgeMap edges{img.width, img.height, std::vector<std::uint8_t>(img.size(), 0)};
  if (img.width < 3 || img.height < 3) return edges;

  std::array<std::size_t, 256> hist{};
  for (auto v : img.pixels) ++hist[v];
  auto nth_value = [&](std::size_t n) {
    std::size_t seen = 0;
    for (int v = 0; v < 256; ++v) {
      seen += hist[v];
      if (seen > n) return v;
    }
    return 255;
  };
  const std::size_t n = img.size();
  const double median = 0.5 * (nth_value((n - 1) / 2) + nth_value(n / 2));
  const double lower = std::max(0.0, (1.0 - sigma) * median);
  const double upper = std::min(255.0, (1.0 + sigma) * median);

  const Gradients g = sobel_gradients(img);
  const long w = static_cast<long>(img.width);
  const long h = static_cast<long>(img.height);
  auto mag = [&](long x, long y) {
    return g.magnitude[clamp_coord(y, img.height) * w + clamp_coord(x, img.width)];
  };

  // Non-maximum suppression along the quantised gradient direction.
  constexpr double kTan22 = 0.41421356237309503;
  constexpr double kTan67 = 2.414213562373095;
  std::vector<std::uint8_t> state(img.size(), 0);  // 0 none, 1 weak, 2 strong
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      const std::size_t k = static_cast<std::size_t>(y * w + x);
      const double m = g.magnitude[k];
      if (m <= lower) continue;
      const double ax = std::abs(static_cast<double>(g.gx[k]));
      const double ay = std::abs(static_cast<double>(g.gy[k]));
      double before;
      double after;
      if (ay <= kTan22 * ax) {
        before = mag(x - 1, y);
        after = mag(x + 1, y);
      } else if (ay >= kTan67 * ax) {
        before = mag(x, y - 1);
        after = mag(x, y + 1);
      } else if ((g.gx[k] < 0) != (g.gy[k] < 0)) {
        // image-space gradient (gx, -gy) points along (+1, +1)
        before = mag(x - 1, y - 1);
        after = mag(x + 1, y + 1);
      } else {
        before = mag(x - 1, y + 1);
        after = mag(x + 1, y - 1);
      }
      if (m > before && m >= after) state[k] = m > upper ? 2 : 1;
    }
  }

  // Hysteresis: keep weak pixels 8-connected to a strong one.
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < state.size(); ++k) {
    if (state[k] == 2) {
      edges.bits[k] = 1;
      stack.push_back(k);
    }
  }
  while (!stack.empty()) {
    const std::size_t k = stack.back();
    stack.pop_back();
    const long x = static_cast<long>(k) % w;
    const long y = static_cast<long>(k) / w;
    for (int d = 0; d < 8; ++d) {
      const long xx = x + kDx[d];
      const long yy = y + kDy[d];
      if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
      const std::size_t q = static_cast<std::size_t>(yy * w + xx);
      if (state[q] == 1 && !edges.bits[q]) {
        edges.bits[q] = 1;
        stack.push_back(q);
      }
    }
  }
  return edges;
}

std::vector<Contour> find_contours(const EdgeMap& edges) {
  std::vector<Contour> contours;
  if (edges.width == 0 || edges.height == 0 || edges.count() == 0) return contours;

  const EdgeMap closed = dilate_3x3(edges);
  std::vector<int> labels;
  const std::vector<Region> regions = label_regions(closed, labels);

  std::optional<std::size_t> background;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (!regions[r].touches_border) continue;
    if (!background || regions[r].pixels > regions[*background].pixels) background = r;
  }

  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (background && r == *background) continue;
    Contour c;
    c.vertices = trace_outer_boundary(labels, closed.width, closed.height, static_cast<int>(r),
                                      regions[r].first);
    c.area = shoelace_area(c.vertices);
    contours.push_back(std::move(c));
  }

  for (std::size_t i = 0; i < contours.size(); ++i) {
    const PixelPoint probe = contours[i].vertices.front();
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < contours.size(); ++j) {
      if (i == j || !bbox_strictly_contains(contours[j], contours[i])) continue;
      if (!point_in_polygon(contours[j].vertices, probe.x, probe.y)) continue;
      if (!best || contours[j].area < contours[*best].area) best = j;
    }
    contours[i].parent_index = best;
  }
  assign_depths(contours);
  return contours;
}

double scaled_min_contour_area(std::size_t image_pixels) {
  return kReferenceContourArea * static_cast<double>(image_pixels) /
         static_cast<double>(kReferenceImagePixels);
}

std::vector<Contour> refine_contours(const std::vector<Contour>& contours, double min_area) {
  std::vector<std::optional<std::size_t>> remap(contours.size());
  std::vector<Contour> kept;
  for (std::size_t i = 0; i < contours.size(); ++i) {
    if (contours[i].area >= min_area) {
      remap[i] = kept.size();
      kept.push_back(contours[i]);
    }
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < contours.size(); ++i) {
    if (!remap[i]) continue;
    std::optional<std::size_t> p = contours[i].parent_index;
    while (p && !remap[*p]) p = contours[*p].parent_index;
    kept[k++].parent_index = p ? remap[*p] : std::nullopt;
  }
  assign_depths(kept);
  return kept;
}

bool point_in_polygon(const std::vector<PixelPoint>& polygon, double x, double y) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = polygon[i].x, yi = polygon[i].y;
    const double xj = polygon[j].x, yj = polygon[j].y;
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

std::vector<std::uint8_t> fill_contour(const Contour& contour, std::size_t width,
                                       std::size_t height) {
  std::vector<std::uint8_t> bits(width * height, 0);
  const auto& poly = contour.vertices;
  if (poly.empty()) return bits;

  const int y0 = std::max(0, contour.min_y());
  const int y1 = std::min(static_cast<int>(height) - 1, contour.max_y());
  std::vector<double> crossings;
  for (int y = y0; y <= y1; ++y) {
    crossings.clear();
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      const double yi = poly[i].y, yj = poly[j].y;
      if ((yi > y) != (yj > y)) {
        crossings.push_back((poly[j].x - poly[i].x) * (y - yi) / (yj - yi) + poly[i].x);
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t c = 0; c + 1 < crossings.size(); c += 2) {
      const long xa = std::max(0L, static_cast<long>(std::ceil(crossings[c])));
      const long xb = std::min(static_cast<long>(width) - 1,
                               static_cast<long>(std::ceil(crossings[c + 1])) - 1);
      for (long x = xa; x <= xb; ++x) bits[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
  const auto plot = [&](int x, int y) {
    if (x >= 0 && y >= 0 && x < static_cast<int>(width) && y < static_cast<int>(height)) {
      bits[static_cast<std::size_t>(y) * width + x] = 1;
    }
  };
  // Boundary pixels, edge by edge.
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    int x = poly[j].x, y = poly[j].y;
    const int dx = std::abs(poly[i].x - x), dy = -std::abs(poly[i].y - y);
    const int sx = x < poly[i].x ? 1 : -1, sy = y < poly[i].y ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      plot(x, y);
      if (x == poly[i].x && y == poly[i].y) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y += sy;
      }
    }
  }
  return bits;
}

std::vector<BinaryMask> generate_masks(const std::vector<Contour>& contours, MaskPhase phase,
                                       std::size_t width, std::size_t height) {
  std::vector<bool> has_children(contours.size(), false);
  for (const auto& c : contours) {
    if (c.parent_index) has_children[*c.parent_index] = true;
  }

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < contours.size(); ++i) {
    const bool nested_leaf = contours[i].depth >= 1 && !has_children[i];
    if (nested_leaf == (phase == MaskPhase::child_first)) selected.push_back(i);
  }
  std::stable_sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
    if (contours[a].depth != contours[b].depth) return contours[a].depth > contours[b].depth;
    return contours[a].area > contours[b].area;
  });

  const MaskRole role = phase == MaskPhase::child_first ? MaskRole::child : MaskRole::parent;
  std::vector<BinaryMask> masks;
  masks.reserve(selected.size());
  for (std::size_t i : selected) {
    masks.push_back({width, height, fill_contour(contours[i], width, height), role, i});
  }
  return masks;
}

BinaryMask embed_mask(const BinaryMask& mask, const PixelRect& roi, std::size_t frame_width,
                      std::size_t frame_height) {
  if (roi.x + mask.width > frame_width || roi.y + mask.height > frame_height) {
    throw Error(Errc::out_of_bounds, "mask does not fit the frame at the ROI offset");
  }
  BinaryMask out{frame_width, frame_height,
                 std::vector<std::uint8_t>(frame_width * frame_height, 0), mask.role,
                 mask.contour_index};
  for (std::size_t y = 0; y < mask.height; ++y) {
    const auto* src = mask.bits.data() + y * mask.width;
    std::copy(src, src + mask.width,
              out.bits.begin() + static_cast<long>((roi.y + y) * frame_width + roi.x));
  }
  return out;
}

BinaryMask fill_mask_holes(const BinaryMask& mask) {
  long x0 = static_cast<long>(mask.width), y0 = static_cast<long>(mask.height), x1 = -1, y1 = -1;
  for (std::size_t y = 0; y < mask.height; ++y) {
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (!mask.bits[y * mask.width + x]) continue;
      x0 = std::min(x0, static_cast<long>(x));
      x1 = std::max(x1, static_cast<long>(x));
      y0 = std::min(y0, static_cast<long>(y));
      y1 = std::max(y1, static_cast<long>(y));
    }
  }
  BinaryMask out = mask;
  if (x1 < 0) return out;

  // Flood the background inward from a one-pixel frame around the bbox.
  x0 -= 1, y0 -= 1, x1 += 1, y1 += 1;
  const std::size_t w = static_cast<std::size_t>(x1 - x0 + 1);
  const std::size_t h = static_cast<std::size_t>(y1 - y0 + 1);
  auto inside_mask = [&](long x, long y) {
    return x >= 0 && y >= 0 && x < static_cast<long>(mask.width) &&
           y < static_cast<long>(mask.height) &&
           mask.bits[static_cast<std::size_t>(y) * mask.width + static_cast<std::size_t>(x)];
  };
  std::vector<std::uint8_t> outside(w * h, 0);
  std::vector<std::pair<long, long>> stack;
  for (long x = x0; x <= x1; ++x) stack.insert(stack.end(), {{x, y0}, {x, y1}});
  for (long y = y0; y <= y1; ++y) stack.insert(stack.end(), {{x0, y}, {x1, y}});
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    if (x < x0 || y < y0 || x > x1 || y > y1) continue;
    auto& o = outside[static_cast<std::size_t>(y - y0) * w + static_cast<std::size_t>(x - x0)];
    if (o || inside_mask(x, y)) continue;
    o = 1;
    stack.insert(stack.end(), {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}});
  }
  for (long y = y0 + 1; y < y1; ++y) {
    for (long x = x0 + 1; x < x1; ++x) {
      if (!outside[static_cast<std::size_t>(y - y0) * w + static_cast<std::size_t>(x - x0)]) {
        out.bits[static_cast<std::size_t>(y) * mask.width + static_cast<std::size_t>(x)] = 1;
      }
    }
  }
  return out;
}

}  // namespace binpick
