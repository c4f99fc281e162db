// Acceptance suite: one PASS/FAIL line per criterion.
//
//   vpr_acceptance            run every criterion
//   vpr_acceptance 6 7        run the listed criteria
//
// Exit status is non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "commands.hpp"
#include "oracles.hpp"
#include "vpr/dataset.hpp"
#include "vpr/encoding.hpp"
#include "vpr/image_io.hpp"
#include "vpr/network.hpp"
#include "vpr/ops.hpp"
#include "vpr/placerec.hpp"
#include "vpr/training.hpp"
#include "vpr/viz.hpp"

namespace fs = std::filesystem;
using namespace vpr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& name) {
    path = fs::temp_directory_path() / ("vpr_acceptance_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Tensor3 random_tensor(Shape3 s, std::mt19937_64& rng, float lo = -1, float hi = 1) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor3 t(s);
  for (float& v : t.storage()) v = u(rng);
  return t;
}

// 1 ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::size_t checked = 0, kinks = 0;
  std::string where;
  for (const char* preset : {"amosnet-mini", "amosnet-mini-overlap"}) {
    const NetworkSpec spec = network_preset(preset, 5);
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      const ModelWeights w = init_weights(spec, seed, 0.1);
      std::mt19937_64 rng(seed + 17);
      const Tensor3 x = random_tensor(spec.input, rng);
      GradCheckOptions opt;
      opt.epsilon = 1e-3;
      opt.seed = seed;
      const auto report = grad_check(spec, w, x, seed % spec.num_classes, opt);
      for (const auto& l : report.layers) {
        checked += l.checked;
        kinks += l.skipped_kinks;
        if (l.max_rel_error >= worst) {
          worst = l.max_rel_error;
          where = std::string(preset) + "/" + l.name;
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 60 && checked > 0,
          fmt("max_rel_error=%.3g (%s) params=%zu kinks_skipped=%zu eps=1e-3 time=%.1fs", worst, where.c_str(), checked,
              kinks, secs)};
}

// 2 ---------------------------------------------------------------------------

Outcome kernel_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

  double conv_err = 0;
  for (int cases = 0; cases < 200;) {
    const Shape3 s{pick(1, 4), pick(1, 10), pick(1, 10)};
    const std::size_t k = pick(1, 5);
    const std::size_t pad = pick(0, 2), stride = pick(1, 3);
    if (k > std::min(s.height, s.width) + 2 * pad) continue;
    ++cases;
    ConvKernelBank bank(pick(1, 4), s.channels, k);
    for (float& v : bank.weights) v = std::uniform_real_distribution<float>(-1, 1)(rng);
    for (float& v : bank.biases) v = std::uniform_real_distribution<float>(-1, 1)(rng);
    const Tensor3 x = random_tensor(s, rng);
    const Tensor3 a = conv2d_forward(x, bank, stride, pad);
    const Tensor3 b = oracle::oracle_conv(x, bank, stride, pad);
    if (a.shape() != b.shape()) return {false, "conv shape mismatch " + a.shape().str() + " vs " + b.shape().str()};
    for (std::size_t j = 0; j < a.size(); ++j) conv_err = std::max(conv_err, double(std::abs(a[j] - b[j])));
  }

  std::size_t msp_mismatch = 0;
  const std::vector<std::size_t> scales{1, 2, 3, 4};
  for (int i = 0; i < 100; ++i) {
    const Tensor3 maps = random_tensor({pick(1, 6), pick(1, 17), pick(1, 17)}, rng);
    if (multiscale_pool(maps, scales).values != oracle::oracle_msp(maps, scales).values) ++msp_mismatch;
  }

  std::size_t pr_mismatch = 0;
  for (int i = 0; i < 100; ++i) {
    std::vector<float> v(400);
    // Coarse values so ties between best matches occur.
    for (float& x : v) x = static_cast<float>(pick(0, 40)) / 8.0f;
    const ConfusionMatrix m(20, 20, v);
    GroundTruth gt;
    gt.tolerance_frames = pick(0, 2);
    for (std::size_t q = 0; q < 20; ++q) {
      if (pick(0, 9) == 0) gt.match.push_back(std::nullopt);
      else gt.match.push_back(pick(0, 19));
    }
    if (std::none_of(gt.match.begin(), gt.match.end(), [](auto& o) { return o.has_value(); })) gt.match[0] = 0;
    if (!(evaluate_pr(m, gt) == oracle::oracle_pr(m, gt))) ++pr_mismatch;
  }

  const double secs = seconds_since(t0);
  return {conv_err <= 1e-5 && msp_mismatch == 0 && pr_mismatch == 0 && secs < 120,
          fmt("conv max_abs_err=%.3g msp_mismatches=%zu/100 pr_mismatches=%zu/100 time=%.1fs", conv_err, msp_mismatch,
              pr_mismatch, secs)};
}

// 3 ---------------------------------------------------------------------------

Outcome architecture_shapes() {
  const NetworkSpec spec = amosnet_spec(10);
  const auto shapes = infer_shapes(spec);
  const Shape3 conv1 = shapes[spec.index_of("conv1")].shape;
  const ModelWeights w = init_weights(spec, 3);
  std::mt19937_64 rng(3);
  const auto tape = forward_with_tape(spec, w, random_tensor(spec.input, rng, 0, 1));
  std::size_t agree = 0;
  std::string first_bad;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape3 executed =
        i + 1 < spec.layers.size() ? tape.inputs[i + 1].shape() : Shape3{tape.probabilities.size(), 1, 1};
    if (executed == shapes[i].shape) ++agree;
    else if (first_bad.empty()) first_bad = spec.layers[i].name + " " + executed.str() + " vs " + shapes[i].shape.str();
  }
  const bool ok = conv1 == Shape3{96, 55, 55} && agree == spec.layers.size();
  return {ok, fmt("conv1=%s layers_agreeing=%zu/%zu%s", conv1.str().c_str(), agree, spec.layers.size(),
                  first_bad.empty() ? "" : (" first_mismatch=" + first_bad).c_str())};
}

// 4 ---------------------------------------------------------------------------

Outcome pooling_dimension() {
  std::mt19937_64 rng(4);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  const std::vector<std::size_t> scales{1, 2, 3, 4};
  std::size_t dim_ok = 0, slice_ok = 0;
  for (int i = 0; i < 50; ++i) {
    const Tensor3 maps = random_tensor({pick(1, 64), pick(1, 20), pick(1, 20)}, rng);
    const Descriptor ms = multiscale_pool(maps, scales);
    const Descriptor hm = holistic_pool(maps, HolisticMode::kMax);
    if (ms.dim() == maps.channels() * 30) ++dim_ok;
    bool same = hm.dim() == maps.channels();
    for (std::size_t c = 0; same && c < maps.channels(); ++c) same = ms.values[c * 30] == hm.values[c];
    if (same) ++slice_ok;
  }
  return {dim_ok == 50 && slice_ok == 50, fmt("dim=Cx30 on %zu/50 shapes, holistic_max==scale-1 slice on %zu/50",
                                              dim_ok, slice_ok)};
}

// 5 ---------------------------------------------------------------------------

Outcome lr_schedule() {
  const TrainConfig cfg;  // defaults: 0.01, /10 every 60000
  const double a = lr_at(0, cfg), b = lr_at(60000, cfg), c = lr_at(120000, cfg);
  auto near = [](double x, double y) { return std::abs(x - y) <= 1e-12 * y; };
  return {near(a, 0.01) && near(b, 0.001) && near(c, 0.0001), fmt("lr(0)=%.6g lr(60000)=%.6g lr(120000)=%.6g", a, b, c)};
}

// 6 ---------------------------------------------------------------------------

Outcome toy_overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  ScratchDir dir("overfit");
  std::size_t passed = 0;
  std::string per_seed;
  for (std::uint64_t s = 0; s < 5; ++s) {
    ToyConfig tc;  // 10 places x 50 images, 64 x 64
    tc.seed = 100 + s;
    tc.condition_seed = 1;
    const PlaceDataset ds = gen_toy(tc, dir.path / ("seed" + std::to_string(s)));
    const SplitResult parts = split(ds, 40, 10, s);
    const LabeledImages tr = load_images(parts.train), va = load_images(parts.val);
    const NetworkSpec spec = amosnet_mini_spec(tc.num_places);
    TrainConfig cfg;
    cfg.batch_size = 10;
    cfg.max_iters = 500;
    cfg.lr_step_iters = 100000;
    cfg.seed = s;
    cfg.log_every = cfg.max_iters;
    const AugmentConfig aug = default_augment_for(spec);
    const auto res = train(tr, va, spec, init_weights(spec, s, 0.05), cfg, aug);
    const double ta = accuracy(spec, res.weights, tr, aug), vaa = accuracy(spec, res.weights, va, aug);
    if (ta >= 0.99 && vaa >= 0.90) ++passed;
    per_seed += fmt(" s%llu=%.3f/%.3f", static_cast<unsigned long long>(s), ta, vaa);
  }
  const double secs = seconds_since(t0);
  return {passed >= 4 && secs < 600,
          fmt("seeds_passing=%zu/5 (train/val acc:%s) iters=500 time=%.0fs", passed, per_seed.c_str(), secs)};
}

// 7, 8 ------------------------------------------------------------------------

struct ToyBench {
  NetworkSpec spec;
  ModelWeights trained;
  ModelWeights untrained;
  LabeledImages reference;
  LabeledImages query;
};

// 50 places, 20 training images each; two single-image traverses rendered
// under independent condition draws.
ToyBench make_bench(const fs::path& root, std::uint64_t s, double hue, double brightness, double noise,
                    std::size_t shift) {
  ToyConfig tc;
  tc.num_places = 50;
  tc.images_per_place = 20;
  tc.seed = 100 + s;
  tc.condition_seed = 1;
  tc.hue_shift_range = hue;
  tc.brightness_range = brightness;
  tc.noise_std = noise;
  tc.shift_max = shift;
  const LabeledImages tr = load_images(gen_toy(tc, root / "train"));
  ToyConfig ref = tc;
  ref.images_per_place = 1;
  ref.condition_seed = 1000 + s;
  ToyConfig qry = ref;
  qry.condition_seed = 2000 + s;

  ToyBench b;
  b.spec = amosnet_mini_spec(tc.num_places);
  b.reference = load_images(gen_toy(ref, root / "reference"));
  b.query = load_images(gen_toy(qry, root / "query"));
  TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.max_iters = 1000;
  cfg.lr_step_iters = 100000;
  cfg.weight_decay = 0.005;
  cfg.seed = s;
  cfg.log_every = cfg.max_iters;
  b.trained = train(tr, LabeledImages{}, b.spec, init_weights(b.spec, s, 0.05), cfg, default_augment_for(b.spec))
                  .weights;
  b.untrained = init_weights(b.spec, s, 0.05);
  b.untrained.channel_mean = b.trained.channel_mean;
  return b;
}

double bench_auc(const ToyBench& b, const ModelWeights& w, const std::string& layer, EncoderKind kind) {
  const AugmentConfig aug = default_augment_for(b.spec);
  EncoderConfig ec;
  ec.kind = kind;
  auto describe = [&](const LabeledImages& set) {
    std::vector<Descriptor> out;
    for (const Tensor3& im : set.images) {
      const auto r = forward(b.spec, w, prepare_input(im, b.spec, w, aug), {layer});
      out.push_back(encode(r.trace, b.spec, layer, ec));
    }
    return out;
  };
  const ConfusionMatrix m = build_confusion(describe(b.query), describe(b.reference), Metric::kCosine);
  return evaluate_pr(m, identity_ground_truth(m.queries(), 0)).auc;
}

Outcome end_to_end() {
  ScratchDir dir("e2e");
  std::size_t passed = 0;
  std::string per_seed;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ToyBench b = make_bench(dir.path / std::to_string(s), s, 0.5, 0.3, 0.3, 0);
    const double trained = bench_auc(b, b.trained, "conv1", EncoderKind::kMultiscale);
    const double untrained = bench_auc(b, b.untrained, "conv1", EncoderKind::kMultiscale);
    if (trained >= 0.8 && trained > untrained) ++passed;
    per_seed += fmt(" s%llu=%.3f/%.3f", static_cast<unsigned long long>(s), trained, untrained);
  }
  return {passed >= 4, fmt("seeds_passing=%zu/5 (trained/untrained multiscale conv1 AUC:%s)", passed,
                           per_seed.c_str())};
}

Outcome encoder_ordering() {
  ScratchDir dir("encoders");
  std::size_t passed = 0;
  std::string per_seed;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ToyBench b = make_bench(dir.path / std::to_string(s), s, 0.25, 0.25, 0.03, 24);
    const double ms = bench_auc(b, b.trained, "conv2", EncoderKind::kMultiscale);
    const double hm = bench_auc(b, b.trained, "conv2", EncoderKind::kHolisticMax);
    const double raw = bench_auc(b, b.trained, "conv2", EncoderKind::kRawFlatten);
    if (ms >= hm && hm >= raw) ++passed;
    per_seed += fmt(" s%llu=%.3f/%.3f/%.3f", static_cast<unsigned long long>(s), ms, hm, raw);
  }
  return {passed >= 4, fmt("seeds_passing=%zu/5 (multiscale/holistic_max/raw_flatten AUC, shift 24:%s)", passed,
                           per_seed.c_str())};
}

// 9 ---------------------------------------------------------------------------

void run_pipeline(const fs::path& root) {
  using namespace vpr::cli;
  RunConfig cfg;
  cfg.set("seed", "7");
  cfg.set("num_places", "5");
  cfg.set("images_per_place", "12");
  cfg.set("max_iters", "30");
  cfg.set("batch_size", "6");
  cfg.set("init_std", "0.05");
  cmd_gen_toy(cfg, {(root / "toy").string(), false});
  cmd_split(cfg, {(root / "toy").string(), (root / "split").string()});
  std::ostringstream log;
  cmd_train(cfg, {(root / "split/train.txt").string(), (root / "split/val.txt").string(), (root / "model").string()},
            log);
  RunConfig ref = cfg, qry = cfg;
  ref.set("condition_seed", "11");
  qry.set("condition_seed", "12");
  cmd_gen_toy(ref, {(root / "ref").string(), true});
  cmd_gen_toy(qry, {(root / "qry").string(), true});
  const std::string model = (root / "model/model.spdn").string();
  cmd_extract(cfg, {model, (root / "ref").string(), (root / "ref_desc").string()});
  cmd_extract(cfg, {model, (root / "qry").string(), (root / "qry_desc").string()});
  cmd_match(cfg, {(root / "qry_desc/descriptors.spdd").string(), (root / "ref_desc/descriptors.spdd").string(),
                  (root / "match").string()});
  cmd_eval(cfg, {(root / "match/confusion.txt").string(), (root / "qry/ground_truth.txt").string(),
                 (root / "eval").string()});
}

Outcome determinism() {
  ScratchDir dir("determinism");
  run_pipeline(dir.path / "a");
  run_pipeline(dir.path / "b");
  std::size_t identical = 0;
  std::string differing;
  const char* files[] = {"model/model.spdn", "ref_desc/descriptors.spdd", "qry_desc/descriptors.spdd",
                         "match/confusion.txt", "eval/pr.txt"};
  for (const char* f : files) {
    const auto a = read_bytes(dir.path / "a" / f), b = read_bytes(dir.path / "b" / f);
    if (!a.empty() && a == b) ++identical;
    else differing += std::string(" ") + f;
  }

  // Round trips.
  const auto model_bytes = read_bytes(dir.path / "a/model/model.spdn");
  const LoadedModel model = deserialize_model(model_bytes);
  const bool model_rt = serialize_model(model.spec, model.weights) == model_bytes;
  const auto desc_bytes = read_bytes(dir.path / "a/ref_desc/descriptors.spdd");
  const DescriptorSet desc = deserialize_descriptors(desc_bytes);
  bool desc_rt = serialize_descriptors(desc) == desc_bytes;
  const DescriptorSet desc2 = deserialize_descriptors(serialize_descriptors(desc));
  for (std::size_t i = 0; desc_rt && i < desc.size(); ++i) {
    desc_rt = desc2.ids[i] == desc.ids[i] && std::memcmp(desc2.descriptors[i].values.data(),
                                                         desc.descriptors[i].values.data(),
                                                         desc.dim() * sizeof(float)) == 0;
  }

  // Single-byte corruption: every header byte, every trailer byte and a
  // seeded sample of payload bytes, each with a few different xor masks.
  std::size_t trials = 0, detected = 0;
  std::mt19937_64 rng(9);
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < std::min<std::size_t>(256, model_bytes.size()); ++i) positions.push_back(i);
  for (std::size_t i = model_bytes.size() - 4; i < model_bytes.size(); ++i) positions.push_back(i);
  std::uniform_int_distribution<std::size_t> any(0, model_bytes.size() - 1);
  for (int i = 0; i < 300; ++i) positions.push_back(any(rng));
  std::vector<std::uint8_t> bad = model_bytes;
  for (std::size_t pos : positions) {
    for (std::uint8_t mask : {std::uint8_t{0x01}, std::uint8_t{0x80}, std::uint8_t{0xFF}}) {
      bad[pos] ^= mask;
      ++trials;
      try {
        deserialize_model(bad);
      } catch (const FormatError&) {
        ++detected;
      }
      bad[pos] = model_bytes[pos];
    }
  }

  const bool ok = identical == std::size(files) && model_rt && desc_rt && detected == trials;
  return {ok, fmt("identical_files=%zu/%zu%s model_roundtrip=%s descriptor_roundtrip=%s corruption_detected=%zu/%zu",
                  identical, std::size(files), differing.c_str(), model_rt ? "exact" : "DIFFERS",
                  desc_rt ? "exact" : "DIFFERS", detected, trials)};
}

// 10 --------------------------------------------------------------------------

Outcome curation() {
  ScratchDir dir("curation");
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> byte(0, 255);
  auto noisy = [&] {
    Image8 im(32, 24, 3);
    for (auto& p : im.pixels) p = static_cast<std::uint8_t>(byte(rng));
    return im;
  };
  // 4 cameras; black, corrupt and normal frames interleaved across them.
  std::size_t n = 0;
  auto next_path = [&](const char* ext) {
    const fs::path cam = dir.path / "tree" / ("cam" + std::to_string(n % 4));
    fs::create_directories(cam);
    return cam / fmt("frame_%04zu.%s", n++, ext);
  };
  for (int i = 0; i < 100; ++i) {
    if (i % 2) write_png(next_path("png").string(), noisy());
    else write_jpeg(next_path("jpg").string(), noisy());
  }
  for (int i = 0; i < 20; ++i) {
    Image8 im(32, 24, 3, static_cast<std::uint8_t>(i % 8));  // mean luminance below 10/255
    if (i % 3 == 0) im.at(0, 0, 0) = 200;                     // not uniform, still black
    write_png(next_path("png").string(), im);
  }
  {
    const auto png = encode_png(noisy());
    std::ofstream(next_path("png"), std::ios::binary).write(reinterpret_cast<const char*>(png.data()), 40);
    const auto jpg = encode_jpeg(noisy());
    std::ofstream(next_path("jpg"), std::ios::binary).write(reinterpret_cast<const char*>(jpg.data()), jpg.size() / 3);
    std::ofstream(next_path("png"), std::ios::binary) << "this is not an image";
    write_png(next_path("png").string(), Image8(32, 24, 3, 128));  // frozen frame: zero variance
    std::ofstream(next_path("jpg"), std::ios::binary);              // empty file
  }

  const PlaceDataset ds = scan_dataset(dir.path / "tree");
  const CurationResult first = curate(ds);
  const CurationResult second = curate(first.dataset);
  const auto& r = first.report;
  const bool exact = r.scanned == 125 && r.removed_black == 20 && r.removed_corrupt == 5 && r.kept == 100;
  const bool idempotent = second.dataset == first.dataset && second.report.kept == 100 &&
                          second.report.removed_black == 0 && second.report.removed_corrupt == 0;
  return {exact && idempotent,
          fmt("scanned=%zu removed_black=%zu removed_corrupt=%zu kept=%zu second_pass kept=%zu removed=%zu", r.scanned,
              r.removed_black, r.removed_corrupt, r.kept, second.report.kept,
              second.report.removed_black + second.report.removed_corrupt)};
}

// 11 --------------------------------------------------------------------------

Outcome receptive_fields() {
  const NetworkSpec amos = amosnet_spec(10);
  const ReceptiveField c1 = receptive_field(amos, "conv1"), p1 = receptive_field(amos, "pool1");
  const bool rf_ok = c1.size == 11 && c1.jump == 4 && p1.size == 19 && p1.jump == 8;

  // Spike images through the mini network with all-positive kernels. Its conv1
  // (k5, s2, no pad) never sees pixel row/column 63, so spikes stay within 0..62.
  const NetworkSpec spec = amosnet_mini_spec(4);
  ModelWeights w = init_weights(spec, 11);
  for (float& v : w.at("conv1").weights) v = std::abs(v) + 0.01f;
  for (float& v : w.at("conv2").weights) v = std::abs(v) + 0.01f;
  AugmentConfig aug = default_augment_for(spec);
  aug.resize_to = aug.crop_to = spec.input.height;
  std::size_t trials = 0, inside = 0;
  for (const char* layer : {"conv1", "pool1", "conv2"}) {
    for (auto [y, x] : {std::pair<std::size_t, std::size_t>{31, 17}, {0, 0}, {62, 61}, {5, 58}, {40, 2}}) {
      Tensor3 im(spec.input, 0.0f);
      for (std::size_t c = 0; c < 3; ++c) im.at(c, y, x) = 255;
      const std::vector<Tensor3> images{im};
      const auto hits = top_k_patches(spec, w, images, layer, 0, 1, aug);
      ++trials;
      if (hits.size() == 1 && hits[0].activation > 0 && hits[0].box.contains(x, y)) ++inside;
    }
  }
  return {rf_ok && inside == trials, fmt("conv1=(%zu,%zu) pool1=(%zu,%zu) spike_inside_box=%zu/%zu", c1.size, c1.jump,
                                         p1.size, p1.jump, inside, trials)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"gradient correctness", gradient_correctness},
      {"kernel oracle equivalence", kernel_oracles},
      {"architecture shapes", architecture_shapes},
      {"pooling dimension law", pooling_dimension},
      {"learning-rate schedule", lr_schedule},
      {"toy overfit", toy_overfit},
      {"end-to-end place recognition", end_to_end},
      {"encoder ordering", encoder_ordering},
      {"determinism and persistence", determinism},
      {"curation", curation},
      {"receptive fields", receptive_fields},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const long n = std::strtol(argv[i], nullptr, 10);
    if (n < 1 || n > static_cast<long>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [criterion 1-%zu ...]\n", argv[0], criteria.size());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(n));
  }
  if (selected.empty()) {
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);
  }

  int failures = 0;
  for (std::size_t n : selected) {
    const Criterion& c = criteria[n - 1];
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2zu %-30s %s  %s\n", n, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
