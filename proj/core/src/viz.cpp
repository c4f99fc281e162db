#include "vpr/viz.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace vpr {

ReceptiveField receptive_field(const NetworkSpec& spec, std::string_view layer) {
  const std::size_t last = spec.index_of(layer);
  ReceptiveField rf;
  for (std::size_t i = 0; i <= last; ++i) {
    const LayerSpec& l = spec.layers[i];
    std::size_t k = 1, stride = 1, pad = 0;
    if (const auto* c = std::get_if<ConvLayer>(&l.kind)) {
      k = c->kernel_size, stride = c->stride, pad = c->pad;
    } else if (const auto* p = std::get_if<MaxPoolLayer>(&l.kind)) {
      k = p->window, stride = p->stride;
    } else if (!std::holds_alternative<ReluLayer>(l.kind)) {
      throw ArgumentError("layer '" + std::string(layer) + "' has a global receptive field (reached " +
                          std::string(kind_name(l.kind)) + " layer '" + l.name + "')");
    }
    rf.offset += ((static_cast<double>(k) - 1.0) / 2.0 - static_cast<double>(pad)) * static_cast<double>(rf.jump);
    rf.size += (k - 1) * rf.jump;
    rf.jump *= stride;
  }
  return rf;
}

PixelBox unit_box(const ReceptiveField& rf, std::size_t row, std::size_t col, std::size_t width,
                  std::size_t height) {
  const double half = (static_cast<double>(rf.size) - 1.0) / 2.0;
  auto span = [&](std::size_t unit, std::size_t extent) {
    const double centre = rf.offset + static_cast<double>(unit * rf.jump);
    const auto lo = static_cast<long long>(std::floor(centre - half + 0.5));
    const long long hi = lo + static_cast<long long>(rf.size);
    const auto e = static_cast<long long>(extent);
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(std::clamp(lo, 0LL, e)),
                                               static_cast<std::size_t>(std::clamp(hi, 0LL, e)));
  };
  const auto [x0, x1] = span(col, width);
  const auto [y0, y1] = span(row, height);
  return {x0, y0, x1, y1};
}

Tensor3 input_view(const Tensor3& image, const AugmentConfig& aug) {
  std::mt19937_64 unused(0);
  Tensor3 view = preprocess(image, aug, PreprocessMode::kEval, unused);
  for (float& v : view.data()) v *= 255.0f;
  return view;
}

std::vector<PatchHit> top_k_patches(const NetworkSpec& spec, const ModelWeights& weights,
                                    std::span<const Tensor3> images, std::string_view layer, std::size_t filter,
                                    std::size_t k, std::optional<AugmentConfig> aug) {
  if (k < 1) throw ArgumentError("top_k_patches needs k >= 1");
  const auto shapes = infer_shapes(spec);
  const std::size_t li = spec.index_of(layer);
  if (!shapes[li].spatial) throw ArgumentError("layer '" + std::string(layer) + "' has no spatial extent");
  if (filter >= shapes[li].shape.channels) {
    throw ArgumentError("filter " + std::to_string(filter) + " out of range for layer '" + std::string(layer) +
                        "' with " + std::to_string(shapes[li].shape.channels) + " channels");
  }
  const ReceptiveField rf = receptive_field(spec, layer);
  const AugmentConfig cfg = aug.value_or(default_augment_for(spec));
  const std::set<std::string, std::less<>> capture{std::string(layer)};

  std::vector<PatchHit> hits;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor3 input = prepare_input(images[i], spec, weights, cfg);
    const auto result = forward(spec, weights, input, capture);
    const Tensor3& maps = result.trace.find(layer)->second;
    PatchHit best{i, filter, maps.at(filter, 0, 0), 0, 0, {}};
    for (std::size_t y = 0; y < maps.height(); ++y) {
      for (std::size_t x = 0; x < maps.width(); ++x) {
        if (maps.at(filter, y, x) > best.activation) best.activation = maps.at(filter, y, x), best.row = y, best.col = x;
      }
    }
    best.box = unit_box(rf, best.row, best.col, spec.input.width, spec.input.height);
    hits.push_back(best);
  }
  // Hits are already in image order, so a stable sort keeps the tie rule.
  std::stable_sort(hits.begin(), hits.end(),
                   [](const PatchHit& a, const PatchHit& b) { return a.activation > b.activation; });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

namespace {

std::size_t grid_columns(std::size_t n) {
  auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (cols * cols < n) ++cols;  // guard against sqrt rounding
  return std::max<std::size_t>(cols, 1);
}

}  // namespace

Image8 render_patches(std::span<const PatchHit> hits, std::span<const Tensor3> views, const ReceptiveField& rf) {
  const std::size_t n = hits.size();
  const std::size_t cols = grid_columns(n);
  const std::size_t rows = n == 0 ? 1 : (n + cols - 1) / cols;
  const std::size_t tile = rf.size;
  Image8 out(cols * tile + cols - 1, rows * tile + rows - 1, 3, 0);
  const double half = (static_cast<double>(rf.size) - 1.0) / 2.0;
  for (std::size_t h = 0; h < n; ++h) {
    const PatchHit& hit = hits[h];
    if (hit.image >= views.size()) throw ArgumentError("patch hit refers to a missing image view");
    const Tensor3& view = views[hit.image];
    // Unclipped top-left corner; pixels outside the view render mid-gray.
    const auto left = static_cast<long long>(std::floor(rf.offset + static_cast<double>(hit.col * rf.jump) - half + 0.5));
    const auto top = static_cast<long long>(std::floor(rf.offset + static_cast<double>(hit.row * rf.jump) - half + 0.5));
    const std::size_t ox = (h % cols) * (tile + 1), oy = (h / cols) * (tile + 1);
    for (std::size_t ty = 0; ty < tile; ++ty) {
      for (std::size_t tx = 0; tx < tile; ++tx) {
        const long long sy = top + static_cast<long long>(ty), sx = left + static_cast<long long>(tx);
        const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<long long>(view.height()) &&
                            sx < static_cast<long long>(view.width());
        for (std::size_t c = 0; c < 3; ++c) {
          std::uint8_t v = 128;
          if (inside) {
            const float p = view.at(std::min(c, view.channels() - 1), static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
            v = static_cast<std::uint8_t>(std::clamp(std::round(p), 0.0f, 255.0f));
          }
          out.at(oy + ty, ox + tx, c) = v;
        }
      }
    }
  }
  return out;
}

void write_patch_index(std::ostream& out, std::span<const PatchHit> hits, std::span<const std::string> paths) {
  out << "# rank image activation x0 y0 x1 y1\n";
  char buf[64];
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const PatchHit& h = hits[i];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(h.activation));
    out << i << ' ' << (h.image < paths.size() ? paths[h.image] : std::to_string(h.image)) << ' ' << buf << ' '
        << h.box.x0 << ' ' << h.box.y0 << ' ' << h.box.x1 << ' ' << h.box.y1 << '\n';
  }
}

Tensor3 heatmap(const Tensor3& maps, std::size_t height, std::size_t width, HeatmapMode mode) {
  if (maps.empty()) throw ArgumentError("heatmap of an empty activation");
  if (height == 0 || width == 0) throw ArgumentError("heatmap target size must be positive");
  Tensor3 agg(1, maps.height(), maps.width());
  for (std::size_t i = 0; i < maps.plane_size(); ++i) {
    double acc = mode == HeatmapMode::kChannelSum ? 0.0 : maps.plane(0)[i];
    for (std::size_t c = 0; c < maps.channels(); ++c) {
      const double v = maps.plane(c)[i];
      acc = mode == HeatmapMode::kChannelSum ? acc + v : std::max(acc, v);
    }
    agg[i] = static_cast<float>(acc);
  }
  const auto [lo, hi] = std::minmax_element(agg.data().begin(), agg.data().end());
  const float min = *lo, range = *hi - *lo;
  for (float& v : agg.data()) v = range > 0 ? (v - min) / range : 0.0f;
  Tensor3 up = resize_bilinear(agg, height, width);
  for (float& v : up.data()) v = std::clamp(v, 0.0f, 1.0f);
  return up;
}

Tensor3 heatmap(const ActivationTrace& trace, const NetworkSpec& spec, std::string_view layer, std::size_t height,
                std::size_t width, HeatmapMode mode) {
  const auto shapes = infer_shapes(spec);
  if (!shapes[spec.index_of(layer)].spatial) {
    throw ArgumentError("layer '" + std::string(layer) + "' is flat; heat maps need spatial activations");
  }
  const auto it = trace.find(layer);
  if (it == trace.end()) throw ArgumentError("layer '" + std::string(layer) + "' was not captured");
  return heatmap(it->second, height, width, mode);
}

Image8 heatmap_image(const Tensor3& heat) { return to_image(heat, 255.0f); }

Image8 heatmap_overlay(const Image8& base, const Tensor3& heat) {
  if (base.channels != 3 || base.width != heat.width() || base.height != heat.height()) {
    throw ShapeError("overlay needs an RGB image of the heat map size " + std::to_string(heat.height()) + "x" +
                     std::to_string(heat.width()));
  }
  Image8 out = base;
  for (std::size_t y = 0; y < base.height; ++y) {
    for (std::size_t x = 0; x < base.width; ++x) {
      const float h = heat.at(0, y, x);
      const float ramp[3] = {std::clamp(3 * h, 0.0f, 1.0f), std::clamp(3 * h - 1, 0.0f, 1.0f),
                             std::clamp(3 * h - 2, 0.0f, 1.0f)};
      for (std::size_t c = 0; c < 3; ++c) {
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(0.5f * base.at(y, x, c) + 0.5f * 255.0f * ramp[c]));
      }
    }
  }
  return out;
}

Image8 weight_mosaic(const NetworkSpec& spec, const ModelWeights& weights, std::string_view layer) {
  const std::size_t li = spec.index_of(layer);
  const auto* conv = std::get_if<ConvLayer>(&spec.layers[li].kind);
  if (!conv) throw ArgumentError("weight mosaic needs a conv layer, '" + std::string(layer) + "' is not one");
  const auto shapes = infer_shapes(spec);
  const std::size_t in_channels = li == 0 ? spec.input.channels : shapes[li - 1].shape.channels;
  if (in_channels != 3) {
    throw ArgumentError("weight mosaic needs RGB kernels; '" + std::string(layer) + "' has " +
                        std::to_string(in_channels) + " input channels");
  }
  const auto& w = weights.at(layer).weights;
  const std::size_t n = conv->out_channels, k = conv->kernel_size, per = 3 * k * k;
  if (w.size() != n * per) throw ShapeError("weights of '" + std::string(layer) + "' do not match its spec");
  const std::size_t cols = grid_columns(n);
  const std::size_t rows = (n + cols - 1) / cols;
  Image8 out(cols * k + cols - 1, rows * k + rows - 1, 3, 0);
  for (std::size_t o = 0; o < n; ++o) {
    const auto kernel = std::span<const float>(w).subspan(o * per, per);
    const auto [lo, hi] = std::minmax_element(kernel.begin(), kernel.end());
    const float min = *lo, range = *hi - *lo;
    const std::size_t ox = (o % cols) * (k + 1), oy = (o / cols) * (k + 1);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < k; ++y) {
        for (std::size_t x = 0; x < k; ++x) {
          const float v = range > 0 ? (kernel[(c * k + y) * k + x] - min) / range : 0.5f;
          out.at(oy + y, ox + x, c) = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
      }
    }
  }
  return out;
}

}  // namespace vpr
