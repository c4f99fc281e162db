#include <variant>

#include "binary_io.hpp"
#include "vpr/network.hpp"

namespace vpr {
namespace {

constexpr char kMagic[4] = {'S', 'P', 'D', 'N'};

enum class KindTag : std::uint8_t {
  kInput = 0,
  kConv = 1,
  kRelu = 2,
  kMaxPool = 3,
  kFullyConnected = 4,
  kSoftmax = 5,
};

void write_record(detail::ByteWriter& w, std::string_view name, KindTag tag,
                  std::initializer_list<std::size_t> dims, std::span<const float> weights,
                  std::span<const float> biases) {
  if (name.size() > 0xFFFF) throw ArgumentError("layer name too long: " + std::string(name.substr(0, 32)));
  w.u16(static_cast<std::uint16_t>(name.size()));
  w.text(name);
  w.u8(static_cast<std::uint8_t>(tag));
  w.u8(static_cast<std::uint8_t>(dims.size()));
  for (std::size_t d : dims) w.u32(static_cast<std::uint32_t>(d));
  w.floats(weights);
  w.floats(biases);
}

[[noreturn]] void malformed(const std::string& why) {
  throw FormatError(FormatError::Kind::kMalformed, "model file: " + why);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const NetworkSpec& spec, const ModelWeights& weights) {
  check_weights(spec, weights);
  const auto shapes = infer_shapes(spec);
  detail::ByteWriter w;
  w.text(std::string_view(kMagic, 4));
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(spec.layers.size() + 1));

  // Leading pseudo-record: input shape, class count, preprocessing mean.
  std::vector<float> mean = weights.channel_mean;
  if (mean.empty()) mean.assign(spec.input.channels, 0.0f);
  write_record(w, "input", KindTag::kInput,
               {spec.input.channels, spec.input.height, spec.input.width, spec.num_classes}, mean, {});

  Shape3 in = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const LayerParams& p = weights.layers[i];
    if (const auto* c = std::get_if<ConvLayer>(&layer.kind)) {
      write_record(w, layer.name, KindTag::kConv,
                   {c->out_channels, in.channels, c->kernel_size, c->stride, c->pad}, p.weights, p.biases);
    } else if (std::holds_alternative<ReluLayer>(layer.kind)) {
      write_record(w, layer.name, KindTag::kRelu, {}, {}, {});
    } else if (const auto* m = std::get_if<MaxPoolLayer>(&layer.kind)) {
      write_record(w, layer.name, KindTag::kMaxPool, {m->window, m->stride}, {}, {});
    } else if (const auto* f = std::get_if<FullyConnectedLayer>(&layer.kind)) {
      write_record(w, layer.name, KindTag::kFullyConnected, {f->out_features, in.size()}, p.weights, p.biases);
    } else {
      write_record(w, layer.name, KindTag::kSoftmax, {}, {}, {});
    }
    in = shapes[i].shape;
  }
  const std::uint32_t crc = detail::crc32_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::kBadMagic, "model file: missing SPDN magic");
  }
  detail::ByteReader r(bytes, "model file");
  r.text(4);
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError(FormatError::Kind::kVersionMismatch,
                      "model file: format version " + std::to_string(version) + ", this build reads " +
                          std::to_string(kModelFormatVersion));
  }
  if (bytes.size() < 16) {
    throw FormatError(FormatError::Kind::kTruncated, "model file: truncated header");
  }
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + body.size(), 4);
  const bool crc_ok = detail::crc32_of(body) == stored_crc;

  LoadedModel model;
  try {
    detail::ByteReader body_reader(body, "model file");
    body_reader.text(8);
    const std::uint32_t count = body_reader.u32();
    if (count < 2) malformed("record count " + std::to_string(count) + " is too small");
    for (std::uint32_t rec = 0; rec < count; ++rec) {
      const std::uint16_t name_len = body_reader.u16();
      std::string name = body_reader.text(name_len);
      const auto tag = static_cast<KindTag>(body_reader.u8());
      const std::uint8_t rank = body_reader.u8();
      std::vector<std::size_t> dims(rank);
      for (auto& d : dims) d = body_reader.u32();
      auto expect_rank = [&](std::size_t n) {
        if (dims.size() != n) malformed("record '" + name + "' has rank " + std::to_string(dims.size()));
      };
      if (rec == 0) {
        if (tag != KindTag::kInput) malformed("first record is not the input record");
        expect_rank(4);
        model.spec.input = {dims[0], dims[1], dims[2]};
        model.spec.num_classes = dims[3];
        model.weights.channel_mean = body_reader.floats(dims[0]);
        continue;
      }
      LayerParams params;
      LayerKind kind;
      switch (tag) {
        case KindTag::kConv:
          expect_rank(5);
          kind = ConvLayer{dims[0], dims[2], dims[3], dims[4]};
          params.weights = body_reader.floats(dims[0] * dims[1] * dims[2] * dims[2]);
          params.biases = body_reader.floats(dims[0]);
          break;
        case KindTag::kRelu:
          expect_rank(0);
          kind = ReluLayer{};
          break;
        case KindTag::kMaxPool:
          expect_rank(2);
          kind = MaxPoolLayer{dims[0], dims[1]};
          break;
        case KindTag::kFullyConnected:
          expect_rank(2);
          kind = FullyConnectedLayer{dims[0]};
          params.weights = body_reader.floats(dims[0] * dims[1]);
          params.biases = body_reader.floats(dims[0]);
          break;
        case KindTag::kSoftmax:
          expect_rank(0);
          kind = SoftmaxLayer{};
          break;
        default:
          malformed("record '" + name + "' has unknown kind tag " + std::to_string(static_cast<int>(tag)));
      }
      model.spec.layers.push_back({name, kind});
      model.weights.names.push_back(std::move(name));
      model.weights.layers.push_back(std::move(params));
    }
    if (body_reader.remaining() != 0) {
      malformed(std::to_string(body_reader.remaining()) + " trailing bytes before the checksum");
    }
  } catch (const FormatError& e) {
    // A damaged byte can masquerade as a structural error; the checksum
    // decides unless the file simply ran out.
    if (e.kind() == FormatError::Kind::kTruncated || crc_ok) throw;
    throw FormatError(FormatError::Kind::kChecksumMismatch, "model file: CRC32 mismatch");
  }
  if (!crc_ok) throw FormatError(FormatError::Kind::kChecksumMismatch, "model file: CRC32 mismatch");
  try {
    check_weights(model.spec, model.weights);
  } catch (const ShapeError& e) {
    malformed(e.what());
  }
  return model;
}

void save_model(const ModelWeights& weights, const NetworkSpec& spec, const std::string& path) {
  const auto bytes = serialize_model(spec, weights);
  detail::write_file_bytes(path, bytes);
}

LoadedModel load_model(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  try {
    return deserialize_model(bytes);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path + ": " + e.what());
  }
}

}  // namespace vpr
