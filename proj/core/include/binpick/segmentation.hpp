#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "binpick/image.hpp"

namespace binpick {

/// 3x3 Sobel kernels, applied as correlation (row index = y, y down).
inline constexpr std::array<std::array<int, 3>, 3> kGradientKernelX{{{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}}};
inline constexpr std::array<std::array<int, 3>, 3> kGradientKernelY{{{1, 2, 1}, {0, 0, 0}, {-1, -2, -1}}};

inline constexpr double kDefaultCannySigma = 0.33;
inline constexpr double kReferenceContourArea = 2500.0;
inline constexpr std::size_t kReferenceImagePixels = 2048 * 1536;

struct Gradients {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> gx;
  std::vector<int> gy;
  std::vector<double> magnitude;
};

/// Binary bitmap (0/1 per pixel) over an image plane.
struct EdgeMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  std::size_t count() const;
};

struct PixelPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct Contour {
  std::vector<PixelPoint> vertices;  // closed polygon, last vertex joins the first
  double area = 0.0;                 // shoelace area, pixels^2
  std::optional<std::size_t> parent_index;
  int depth = 0;

  int min_x() const;
  int max_x() const;
  int min_y() const;
  int max_y() const;
};

enum class MaskRole { child, parent };
enum class MaskPhase { child_first, parent_after };

const char* to_string(MaskRole role);

struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;  // 1 = box, 0 = background
  MaskRole role = MaskRole::parent;
  std::size_t contour_index = 0;

  std::size_t popcount() const;
  GrayImage to_image() const;  // {0, 255}
  static BinaryMask from_image(const GrayImage& img, MaskRole role);
};

/// Throws Errc::out_of_bounds when rect leaves the image.
GrayImage extract_roi(const GrayImage& img, const PixelRect& rect);

/// Binomial 3x3 smoothing with replicated borders, rounded to nearest.
GrayImage gaussian_smooth_3x3(const GrayImage& img);

Gradients sobel_gradients(const GrayImage& img);

/// Canny edges (Sobel, non-maximum suppression, hysteresis) with thresholds
/// derived from the median intensity: [(1-sigma)*median, (1+sigma)*median].
EdgeMap auto_canny(const GrayImage& img, double sigma = kDefaultCannySigma);

/// Closes one-pixel gaps with a 3x3 dilation, then traces the outer boundary
/// of every region enclosed by edges. The background (largest region touching
/// the image border) is discarded; other border-touching regions are closed
/// along the border. Nesting comes from polygon containment.
std::vector<Contour> find_contours(const EdgeMap& edges);

/// Minimum contour area for an image with the given pixel count.
double scaled_min_contour_area(std::size_t image_pixels);

/// Drops contours with area < min_area and re-links survivors to their
/// nearest surviving ancestor.
std::vector<Contour> refine_contours(const std::vector<Contour>& contours, double min_area);

/// Filled polygon rasterisation (interior plus boundary pixels).
std::vector<std::uint8_t> fill_contour(const Contour& contour, std::size_t width,
                                       std::size_t height);

/// child_first: nested leaf contours (depth >= 1, no children), ordered by
/// descending depth then descending area. parent_after: every other contour,
/// children before their parents, same ordering.
std::vector<BinaryMask> generate_masks(const std::vector<Contour>& contours, MaskPhase phase,
                                       std::size_t width, std::size_t height);

/// Places an ROI-relative mask into a full frame.
BinaryMask embed_mask(const BinaryMask& mask, const PixelRect& roi, std::size_t frame_width,
                      std::size_t frame_height);

/// Even-odd point-in-polygon test; points on the boundary may go either way.
/// Sets every background pixel not 4-connected to the mask's bounding frame.
BinaryMask fill_mask_holes(const BinaryMask& mask);

bool point_in_polygon(const std::vector<PixelPoint>& polygon, double x, double y);

}  // namespace binpick
