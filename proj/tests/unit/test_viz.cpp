#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "vpr/plot.hpp"
#include "vpr/viz.hpp"

using namespace vpr;

TEST_CASE("receptive field recurrence") {
  const NetworkSpec amos = amosnet_spec(3);
  const ReceptiveField c1 = receptive_field(amos, "conv1");
  CHECK(c1 == ReceptiveField{11, 4, 5.0});
  CHECK(receptive_field(amos, "relu1") == c1);
  const ReceptiveField p1 = receptive_field(amos, "pool1");
  CHECK(p1.size == 19);
  CHECK(p1.jump == 8);
  CHECK(p1.offset == 9.0);
  CHECK_THROWS_AS(receptive_field(amos, "fc7"), ArgumentError);
  CHECK_THROWS_AS(receptive_field(amos, "prob"), ArgumentError);

  // Size grows at every conv/pool layer, jump at every strided one.
  ReceptiveField prev;
  for (const auto& l : amos.layers) {
    if (std::holds_alternative<FullyConnectedLayer>(l.kind)) break;
    const ReceptiveField rf = receptive_field(amos, l.name);
    if (std::holds_alternative<ReluLayer>(l.kind)) {
      CHECK(rf == prev);
    } else {
      CHECK(rf.size > prev.size);
      const bool strided = std::visit(
          [](const auto& k) {
            if constexpr (requires { k.stride; }) return k.stride > 1;
            return false;
          },
          l.kind);
      CHECK((rf.jump > prev.jump) == strided);
    }
    prev = rf;
  }
}

TEST_CASE("unit boxes") {
  const ReceptiveField c1{11, 4, 5.0};
  CHECK(unit_box(c1, 0, 0, 227, 227) == PixelBox{0, 0, 11, 11});
  CHECK(unit_box(c1, 2, 54, 227, 227) == PixelBox{216, 8, 227, 19});
  // Same-padded layer: the first unit's box hangs over the border and is clipped.
  const ReceptiveField padded{5, 1, 0.0};
  CHECK(unit_box(padded, 0, 0, 10, 10) == PixelBox{0, 0, 3, 3});
  CHECK(unit_box(padded, 9, 9, 10, 10) == PixelBox{7, 7, 10, 10});
}

TEST_CASE("top_k_patches") {
  const NetworkSpec spec = amosnet_mini_spec(3);
  ModelWeights w = init_weights(spec, 2, 0.05);
  AugmentConfig aug = default_augment_for(spec);
  aug.resize_to = aug.crop_to = 64;
  std::mt19937_64 rng(3);
  std::vector<Tensor3> images;
  for (int i = 0; i < 5; ++i) images.push_back(test::random_tensor(spec.input, rng, 0, 255));

  const auto hits = top_k_patches(spec, w, images, "conv2", 4, 3, aug);
  REQUIRE(hits.size() == 3);
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i].activation <= hits[i - 1].activation);
  const ReceptiveField rf = receptive_field(spec, "conv2");
  for (const auto& h : hits) {
    CHECK(h.filter == 4);
    const auto trace = forward(spec, w, prepare_input(images[h.image], spec, w, aug), {"conv2"}).trace;
    CHECK(trace.at("conv2").at(4, h.row, h.col) == h.activation);
    CHECK(h.box == unit_box(rf, h.row, h.col, 64, 64));
    CHECK(h.box.x1 <= 64);
    CHECK(h.box.y1 <= 64);
  }

  const auto all = top_k_patches(spec, w, images, "conv2", 4, 50, aug);
  CHECK(all.size() == images.size());

  SUBCASE("ties on blank images keep image order") {
    const std::vector<Tensor3> blank(4, Tensor3(spec.input, 0.0f));
    const auto t = top_k_patches(spec, w, blank, "conv1", 0, 4, aug);
    REQUIRE(t.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(t[i].image == i);
      CHECK(t[i].row == 0);
      CHECK(t[i].col == 0);
    }
  }

  CHECK_THROWS_AS(top_k_patches(spec, w, images, "conv2", 32, 3, aug), ArgumentError);
  CHECK_THROWS_AS(top_k_patches(spec, w, images, "fc3", 0, 3, aug), ArgumentError);
  CHECK_THROWS_AS(top_k_patches(spec, w, images, "conv2", 0, 0, aug), ArgumentError);

  SUBCASE("rendering and index") {
    std::vector<Tensor3> views;
    for (const auto& im : images) views.push_back(input_view(im, aug));
    for (std::size_t i = 0; i < views[0].size(); ++i) CHECK(views[0][i] == doctest::Approx(images[0][i]).epsilon(1e-5));
    const Image8 mosaic = render_patches(hits, views, rf);
    CHECK(mosaic.width == 2 * rf.size + 1);
    CHECK(mosaic.height == 2 * rf.size + 1);
    std::ostringstream idx;
    const std::vector<std::string> paths{"a", "b", "c", "d", "e"};
    write_patch_index(idx, hits, paths);
    std::istringstream lines(idx.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line)) ++n;
    CHECK(n == 4);
  }
}

TEST_CASE("heatmap") {
  Tensor3 one(1, 4, 4);
  for (std::size_t i = 0; i < 16; ++i) one[i] = static_cast<float>(i);
  const Tensor3 copy = heatmap(one, 4, 4);
  for (std::size_t i = 0; i < 16; ++i) CHECK(copy[i] == doctest::Approx(i / 15.0));

  const Tensor3 flat = heatmap(Tensor3(8, 5, 5, 3.0f), 20, 20);
  for (float v : flat.data()) CHECK(v == 0.0f);

  Tensor3 hot(2, 5, 5);
  hot.at(1, 3, 1) = 7;
  const Tensor3 up = heatmap(hot, 50, 50, HeatmapMode::kChannelMax);
  std::size_t arg = 0;
  for (std::size_t i = 0; i < up.size(); ++i) {
    CHECK(up[i] >= 0.0f);
    CHECK(up[i] <= 1.0f);
    if (up[i] > up[arg]) arg = i;
  }
  // Cell (3, 1) of a 5x5 map covers rows 30..39 and columns 10..19 at 10x.
  CHECK(arg / 50 >= 30);
  CHECK(arg / 50 < 40);
  CHECK(arg % 50 >= 10);
  CHECK(arg % 50 < 20);

  const NetworkSpec spec = amosnet_mini_spec(3);
  ActivationTrace trace;
  trace["conv2"] = hot;
  trace["fc3"] = Tensor3(128, 1, 1);
  CHECK(heatmap(trace, spec, "conv2", 50, 50, HeatmapMode::kChannelMax) == up);
  CHECK_THROWS_AS(heatmap(trace, spec, "fc3", 8, 8), ArgumentError);
  CHECK_THROWS_AS(heatmap(trace, spec, "pool1", 8, 8), ArgumentError);

  const Image8 gray = heatmap_image(copy);
  CHECK(gray.channels == 1);
  CHECK(gray.pixels.back() == 255);
  const Image8 base(4, 4, 3, 100);
  const Image8 over = heatmap_overlay(base, copy);
  CHECK(over.at(0, 0, 0) == 50);
  CHECK(over.at(3, 3, 2) == 178);
  CHECK_THROWS_AS(heatmap_overlay(Image8(5, 4, 3), copy), ShapeError);
}

TEST_CASE("weight mosaic") {
  const NetworkSpec amos = amosnet_spec(2);
  NetworkSpec conv_only = amos;
  conv_only.layers = {amos.layers[0], {"fc", FullyConnectedLayer{2}}, {"prob", SoftmaxLayer{}}};
  ModelWeights w = init_weights(conv_only, 1);
  std::fill_n(w.at("conv1").weights.begin() + 5 * 363, 363, 0.0f);
  const Image8 m = weight_mosaic(conv_only, w);
  CHECK(m.width == 10 * 11 + 9);
  CHECK(m.height == 10 * 11 + 9);
  // Kernel 5 is all zero: mid-gray tile at grid cell (0, 5).
  CHECK(m.at(3, 5 * 12 + 3, 1) == 128);
  // Cells 96..99 (row 9, columns 6..9) stay black; cell 95 does not.
  auto tile_max = [&](std::size_t row, std::size_t col) {
    int best = 0;
    for (std::size_t y = 0; y < 11; ++y) {
      for (std::size_t x = 0; x < 11; ++x) {
        for (std::size_t c = 0; c < 3; ++c) best = std::max<int>(best, m.at(row * 12 + y, col * 12 + x, c));
      }
    }
    return best;
  };
  CHECK(tile_max(9, 5) == 255);
  for (std::size_t col = 6; col < 10; ++col) CHECK(tile_max(9, col) == 0);

  test::TempDir dir;
  save_model(w, conv_only, (dir / "m.spdn").string());
  const LoadedModel back = load_model((dir / "m.spdn").string());
  CHECK(encode_png(weight_mosaic(back.spec, back.weights)) == encode_png(m));

  const NetworkSpec mini = amosnet_mini_spec(2);
  CHECK_THROWS_AS(weight_mosaic(mini, init_weights(mini, 0), "conv2"), ArgumentError);
  CHECK_THROWS_AS(weight_mosaic(mini, init_weights(mini, 0), "relu1"), ArgumentError);
}

TEST_CASE("svg charts are deterministic") {
  PRCurve c;
  c.points = {{0.5, 1, 0.1}, {1, 0.5, 0.2}};
  c.auc = 0.875;
  const std::vector<NamedCurve> curves{{"conv2 <multiscale>", c}};
  const std::string a = svg_pr_chart(curves, "PR"), b = svg_pr_chart(curves, "PR");
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("&lt;multiscale&gt;") != std::string::npos);
  const std::string bars = svg_bar_chart({{"multiscale", 0.9}, {"raw_flatten", 0.4}}, "AUC");
  CHECK(bars.find("raw_flatten") != std::string::npos);
  CHECK(bars.find("</svg>") != std::string::npos);
}
