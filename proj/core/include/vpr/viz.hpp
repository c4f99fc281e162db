#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpr/image_io.hpp"
#include "vpr/network.hpp"
#include "vpr/training.hpp"

namespace vpr {

/// Geometry of one unit in network-input pixels. `offset` is the centre of
/// unit (0, 0); unit (r, c) is centred at (offset + r jump, offset + c jump).
struct ReceptiveField {
  std::size_t size = 1;
  std::size_t jump = 1;
  double offset = 0;

  bool operator==(const ReceptiveField&) const = default;
};

/// Composes conv and pool geometry up to `layer`; relu passes through.
/// Throws ArgumentError for fc/softmax layers or layers behind them.
ReceptiveField receptive_field(const NetworkSpec& spec, std::string_view layer);

/// Half-open pixel box [x0, x1) x [y0, y1).
struct PixelBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(std::size_t x, std::size_t y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  bool operator==(const PixelBox&) const = default;
};

/// Receptive-field box of unit (row, col), clipped to a width x height input.
PixelBox unit_box(const ReceptiveField& rf, std::size_t row, std::size_t col, std::size_t width, std::size_t height);

struct PatchHit {
  std::size_t image = 0;
  std::size_t filter = 0;
  float activation = 0;
  std::size_t row = 0, col = 0;
  PixelBox box;

  bool operator==(const PatchHit&) const = default;
};

/// Network-input view of a raw 0..255 image (eval resize + crop, no mean
/// subtraction), still in 0..255. Boxes of top_k_patches refer to it.
Tensor3 input_view(const Tensor3& image, const AugmentConfig& aug);

/// Best unit of `filter` per image, then the k strongest images. Ties go to
/// the smaller (image, row, col). `aug` defaults to default_augment_for(spec).
std::vector<PatchHit> top_k_patches(const NetworkSpec& spec, const ModelWeights& weights,
                                    std::span<const Tensor3> images, std::string_view layer, std::size_t filter,
                                    std::size_t k = 9, std::optional<AugmentConfig> aug = {});

/// Tiles the patches (one per hit, rf.size square, clipped parts mid-gray)
/// in a near-square grid with 1-pixel separators. `views` are input views.
Image8 render_patches(std::span<const PatchHit> hits, std::span<const Tensor3> views, const ReceptiveField& rf);

/// Sidecar index: "rank image_path activation x0 y0 x1 y1" per hit.
void write_patch_index(std::ostream& out, std::span<const PatchHit> hits, std::span<const std::string> paths);

enum class HeatmapMode { kChannelSum, kChannelMax };

/// Aggregates the captured maps over channels, min-max normalises to [0,1]
/// (constant maps become zeros) and bilinearly resizes to height x width.
/// Result is 1 x height x width.
Tensor3 heatmap(const ActivationTrace& trace, const NetworkSpec& spec, std::string_view layer, std::size_t height,
                std::size_t width, HeatmapMode mode = HeatmapMode::kChannelSum);
Tensor3 heatmap(const Tensor3& maps, std::size_t height, std::size_t width,
                HeatmapMode mode = HeatmapMode::kChannelSum);

/// Gray image of a [0,1] heat map.
Image8 heatmap_image(const Tensor3& heat);
/// 50% blend of an RGB image and a colour-ramped heat map of the same size.
Image8 heatmap_overlay(const Image8& base, const Tensor3& heat);

/// First conv layer's 3 x k x k kernels as RGB tiles, each min-max
/// normalised (constant kernels mid-gray), ceil(sqrt(n)) columns, 1-pixel
/// black separators; unused cells stay black.
Image8 weight_mosaic(const NetworkSpec& spec, const ModelWeights& weights, std::string_view layer = "conv1");

}  // namespace vpr
