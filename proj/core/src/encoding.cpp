#include "vpr/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"

namespace vpr {

std::string_view encoder_name(EncoderKind kind) noexcept {
  switch (kind) {
    case EncoderKind::kMultiscale: return "multiscale";
    case EncoderKind::kHolisticMax: return "holistic_max";
    case EncoderKind::kHolisticSum: return "holistic_sum";
    case EncoderKind::kRawFlatten: return "raw_flatten";
  }
  return "unknown";
}

EncoderKind parse_encoder(std::string_view name) {
  for (EncoderKind k : kAllEncoders) {
    if (encoder_name(k) == name) return k;
  }
  throw ArgumentError("unknown encoder '" + std::string(name) +
                      "' (expected multiscale, holistic_max, holistic_sum or raw_flatten)");
}

void EncoderConfig::validate() const {
  if (kind != EncoderKind::kMultiscale) return;
  if (scales.empty()) throw ArgumentError("multiscale encoder needs at least one scale");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (scales[i] < 1) throw ArgumentError("pyramid scales must be >= 1");
    if (i > 0 && scales[i] <= scales[i - 1]) throw ArgumentError("pyramid scales must be strictly increasing");
  }
}

std::string EncoderConfig::summary() const {
  std::string s(encoder_name(kind));
  if (kind == EncoderKind::kMultiscale) {
    s += "[";
    for (std::size_t i = 0; i < scales.size(); ++i) s += (i ? "," : "") + std::to_string(scales[i]);
    s += "]";
  }
  if (normalize) s += "+l2";
  return s;
}

std::size_t cells_per_map(std::span<const std::size_t> scales) {
  std::size_t n = 0;
  for (std::size_t s : scales) n += s * s;
  return n;
}

void l2_normalize(std::vector<float>& values) {
  double sq = 0;
  for (float v : values) sq += static_cast<double>(v) * v;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (float& v : values) v = static_cast<float>(v * inv);
}

Descriptor multiscale_pool(const Tensor3& maps, std::span<const std::size_t> scales, bool normalize) {
  if (maps.empty()) throw ShapeError("multiscale_pool on empty feature maps");
  EncoderConfig{EncoderKind::kMultiscale, {scales.begin(), scales.end()}, normalize}.validate();
  const std::size_t h = maps.height();
  const std::size_t w = maps.width();
  Descriptor d;
  d.values.reserve(maps.channels() * cells_per_map(scales));
  for (std::size_t c = 0; c < maps.channels(); ++c) {
    const auto plane = maps.plane(c);
    for (std::size_t s : scales) {
      for (std::size_t i = 0; i < s; ++i) {
        const std::size_t y0 = i * h / s;
        const std::size_t y1 = (i + 1) * h / s;
        for (std::size_t j = 0; j < s; ++j) {
          const std::size_t x0 = j * w / s;
          const std::size_t x1 = (j + 1) * w / s;
          if (y0 == y1 || x0 == x1) {
            d.values.push_back(0.0f);
            continue;
          }
          float best = plane[y0 * w + x0];
          for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) best = std::max(best, plane[y * w + x]);
          }
          d.values.push_back(best);
        }
      }
    }
  }
  if (normalize) l2_normalize(d.values);
  return d;
}

Descriptor holistic_pool(const Tensor3& maps, HolisticMode mode, bool normalize) {
  if (maps.empty()) throw ShapeError("holistic_pool on empty feature maps");
  Descriptor d;
  d.values.reserve(maps.channels());
  for (std::size_t c = 0; c < maps.channels(); ++c) {
    const auto plane = maps.plane(c);
    if (mode == HolisticMode::kMax) {
      d.values.push_back(*std::max_element(plane.begin(), plane.end()));
    } else {
      double s = 0;
      for (float v : plane) s += v;
      d.values.push_back(static_cast<float>(s));
    }
  }
  if (normalize) l2_normalize(d.values);
  return d;
}

Descriptor encode(const ActivationTrace& trace, std::string_view layer, bool spatial, const EncoderConfig& cfg) {
  cfg.validate();
  const auto it = trace.find(layer);
  if (it == trace.end()) throw ArgumentError("layer '" + std::string(layer) + "' was not captured");
  const Tensor3& act = it->second;
  if (!spatial && cfg.kind != EncoderKind::kRawFlatten) {
    throw ArgumentError("encoder " + std::string(encoder_name(cfg.kind)) + " needs spatial maps, layer '" +
                        std::string(layer) + "' is flat");
  }
  Descriptor d;
  switch (cfg.kind) {
    case EncoderKind::kMultiscale: d = multiscale_pool(act, cfg.scales, cfg.normalize); break;
    case EncoderKind::kHolisticMax: d = holistic_pool(act, HolisticMode::kMax, cfg.normalize); break;
    case EncoderKind::kHolisticSum: d = holistic_pool(act, HolisticMode::kSum, cfg.normalize); break;
    case EncoderKind::kRawFlatten:
      d.values.assign(act.data().begin(), act.data().end());
      if (cfg.normalize) l2_normalize(d.values);
      break;
  }
  d.source_layer = std::string(layer);
  d.encoder = cfg.summary();
  return d;
}

Descriptor encode(const ActivationTrace& trace, const NetworkSpec& spec, std::string_view layer,
                  const EncoderConfig& cfg) {
  const auto shapes = infer_shapes(spec);
  return encode(trace, layer, shapes[spec.index_of(layer)].spatial, cfg);
}

namespace {
constexpr char kMagic[4] = {'S', 'P', 'D', 'D'};
}

std::vector<std::uint8_t> serialize_descriptors(const DescriptorSet& set) {
  if (set.ids.size() != set.descriptors.size()) {
    throw ArgumentError("descriptor set has " + std::to_string(set.ids.size()) + " ids for " +
                        std::to_string(set.descriptors.size()) + " descriptors");
  }
  const std::size_t dim = set.dim();
  detail::ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u32(kDescriptorFormatVersion);
  w.u32(static_cast<std::uint32_t>(set.size()));
  w.u32(static_cast<std::uint32_t>(dim));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.descriptors[i].dim() != dim) {
      throw ShapeError("descriptor " + std::to_string(i) + " has dim " + std::to_string(set.descriptors[i].dim()) +
                       ", expected " + std::to_string(dim));
    }
    w.u32(set.ids[i]);
    w.floats(set.descriptors[i].values);
  }
  return std::move(w.bytes());
}

DescriptorSet deserialize_descriptors(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::kBadMagic, "descriptor file: missing SPDD magic");
  }
  detail::ByteReader r(bytes, "descriptor file");
  r.text(4);
  const std::uint32_t version = r.u32();
  if (version != kDescriptorFormatVersion) {
    throw FormatError(FormatError::Kind::kVersionMismatch,
                      "descriptor file: format version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  DescriptorSet set;
  for (std::uint32_t i = 0; i < count; ++i) {
    set.ids.push_back(r.u32());
    Descriptor d;
    d.values = r.floats(dim);
    set.descriptors.push_back(std::move(d));
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatError::Kind::kMalformed,
                      "descriptor file: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return set;
}

void save_descriptors(const DescriptorSet& set, const std::string& path) {
  detail::write_file_bytes(path, serialize_descriptors(set));
  std::ofstream manifest(path + ".manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + path + ".manifest.txt");
  if (!set.descriptors.empty()) {
    manifest << "# layer=" << set.descriptors.front().source_layer << "\n";
    manifest << "# encoder=" << set.descriptors.front().encoder << "\n";
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    manifest << set.ids[i] << ' ' << (i < set.paths.size() ? set.paths[i] : std::string("-")) << '\n';
  }
}

DescriptorSet load_descriptors(const std::string& path) {
  DescriptorSet set;
  try {
    set = deserialize_descriptors(detail::read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path + ": " + e.what());
  }
  std::ifstream manifest(path + ".manifest.txt");
  if (!manifest) return set;
  std::string layer, encoder, line;
  std::vector<std::string> paths(set.size());
  std::unordered_map<std::uint32_t, std::size_t> slot;
  for (std::size_t i = 0; i < set.size(); ++i) slot.emplace(set.ids[i], i);
  while (std::getline(manifest, line)) {
    if (line.rfind("# layer=", 0) == 0) layer = line.substr(8);
    else if (line.rfind("# encoder=", 0) == 0) encoder = line.substr(10);
    else if (!line.empty() && line[0] != '#') {
      std::istringstream row(line);
      std::uint32_t id;
      std::string p;
      row >> id;
      std::getline(row >> std::ws, p);
      if (auto it = slot.find(id); it != slot.end()) paths[it->second] = p;
    }
  }
  set.paths = std::move(paths);
  for (auto& d : set.descriptors) {
    d.source_layer = layer;
    d.encoder = encoder;
  }
  return set;
}

}  // namespace vpr
