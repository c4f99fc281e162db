#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vpr/network.hpp"
#include "vpr/tensor.hpp"

namespace vpr {

enum class EncoderKind { kMultiscale, kHolisticMax, kHolisticSum, kRawFlatten };

std::string_view encoder_name(EncoderKind kind) noexcept;
EncoderKind parse_encoder(std::string_view name);  // throws ArgumentError

/// Every encoder kind, in comparison-table order.
inline constexpr EncoderKind kAllEncoders[] = {EncoderKind::kMultiscale, EncoderKind::kHolisticMax,
                                               EncoderKind::kHolisticSum, EncoderKind::kRawFlatten};

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kMultiscale;
  std::vector<std::size_t> scales{1, 2, 3, 4};
  bool normalize = true;

  void validate() const;
  std::string summary() const;  // e.g. "multiscale[1,2,3,4]+l2"
};

struct Descriptor {
  std::vector<float> values;
  std::string source_layer;
  std::string encoder;

  std::size_t dim() const noexcept { return values.size(); }
};

/// Values per feature map for a scale set: sum of S^2.
std::size_t cells_per_map(std::span<const std::size_t> scales);

/// Cell (i, j) of an S x S grid covers rows [floor(i H / S), floor((i+1) H / S))
/// and the analogous columns. Max per cell, 0 for empty cells; scales are
/// concatenated per map, maps in channel order.
Descriptor multiscale_pool(const Tensor3& maps, std::span<const std::size_t> scales, bool normalize = false);

enum class HolisticMode { kMax, kSum };

/// One global max or sum per map.
Descriptor holistic_pool(const Tensor3& maps, HolisticMode mode, bool normalize = false);

/// In-place L2 normalisation; the zero vector stays zero.
void l2_normalize(std::vector<float>& values);

/// Encodes one captured layer. `spatial` tells whether the activation is a
/// stack of maps (conv/pool/relu) or a flat fc vector; flat activations only
/// accept raw_flatten.
Descriptor encode(const ActivationTrace& trace, std::string_view layer, bool spatial, const EncoderConfig& cfg);

/// Looks up spatiality from the spec's shape inference.
Descriptor encode(const ActivationTrace& trace, const NetworkSpec& spec, std::string_view layer,
                  const EncoderConfig& cfg);

/// Descriptor container. Little-endian: "SPDD", version, count, dim, then
/// per descriptor an image id (u32) and dim floats.
inline constexpr std::uint32_t kDescriptorFormatVersion = 1;

struct DescriptorSet {
  std::vector<std::uint32_t> ids;
  std::vector<Descriptor> descriptors;
  std::vector<std::string> paths;  // id -> source path, from the sidecar manifest

  std::size_t size() const noexcept { return descriptors.size(); }
  std::size_t dim() const noexcept { return descriptors.empty() ? 0 : descriptors.front().dim(); }
};

std::vector<std::uint8_t> serialize_descriptors(const DescriptorSet& set);
DescriptorSet deserialize_descriptors(std::span<const std::uint8_t> bytes);

/// Writes `path` and `path + ".manifest.txt"` (id, path per line, with the
/// source layer and encoder in header comments).
void save_descriptors(const DescriptorSet& set, const std::string& path);
/// Reads the binary file and, when present, its manifest.
DescriptorSet load_descriptors(const std::string& path);

}  // namespace vpr
