#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "vpr/plot.hpp"

namespace vpr::cli {
namespace fs = std::filesystem;

Summary& Summary::add(std::string key, std::string value) {
  fields.emplace_back(std::move(key), std::move(value));
  return *this;
}

Summary& Summary::add(std::string key, double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  return add(std::move(key), std::string(buf));
}

Summary& Summary::add(std::string key, std::size_t value) { return add(std::move(key), std::to_string(value)); }

std::string Summary::str() const {
  std::string s;
  for (const auto& [k, v] : fields) {
    if (!s.empty()) s += ' ';
    s += k + '=' + v;
  }
  return s;
}

namespace {

fs::path ensure_dir(const std::string& out) {
  if (out.empty()) throw ArgumentError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out);
  return fs::path(out);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ArgumentError(std::string(what) + " is required");
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError(std::string(what) + " " + path + " does not exist");
}

std::string resolve_layer(const NetworkSpec& spec, const RunConfig& cfg) {
  const std::string& layer = cfg.get("layer");
  if (!layer.empty()) {
    spec.index_of(layer);
    return layer;
  }
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    if (std::holds_alternative<ConvLayer>(it->kind)) return it->name;
  }
  throw ArgumentError("network has no conv layer to extract from");
}

GroundTruth ground_truth_for(const RunConfig& cfg, const std::string& path, std::size_t queries) {
  GroundTruth gt = path.empty() ? identity_ground_truth(queries) : load_ground_truth(path, queries);
  if (!cfg.get("tolerance").empty()) gt.tolerance_frames = cfg.get_size("tolerance");
  return gt;
}

/// Captured maps of `layer` for every image of a traverse, in file order.
std::vector<ActivationTrace> capture_layer(const LoadedModel& model, const std::vector<std::string>& paths,
                                           const std::string& layer, const AugmentConfig& aug) {
  std::vector<ActivationTrace> traces;
  traces.reserve(paths.size());
  const std::set<std::string, std::less<>> capture{layer};
  for (const auto& path : paths) {
    const Tensor3 input = prepare_input(to_tensor(read_image(path)), model.spec, model.weights, aug);
    traces.push_back(forward(model.spec, model.weights, input, capture).trace);
  }
  return traces;
}

std::vector<Descriptor> encode_all(const std::vector<ActivationTrace>& traces, const NetworkSpec& spec,
                                   const std::string& layer, const EncoderConfig& enc) {
  std::vector<Descriptor> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(encode(t, spec, layer, enc));
  return out;
}

std::vector<std::string> traverse_images(const std::string& dir) {
  require_file(dir, "image directory");
  auto paths = list_traverse_images(dir);
  if (paths.empty()) throw IoError("no images found under " + dir);
  return paths;
}

}  // namespace

Summary cmd_gen_toy(const RunConfig& cfg, const GenToyArgs& args) {
  ToyConfig toy = cfg.toy();
  if (args.traverse) toy.images_per_place = 1;
  toy.validate();
  const fs::path out = ensure_dir(args.out);
  const PlaceDataset ds = gen_toy(toy, out);
  Summary s;
  s.add("images", ds.image_count()).add("places", ds.num_classes());
  if (args.traverse) {
    auto f = open_out(out / "ground_truth.txt");
    write_ground_truth(f, identity_ground_truth(ds.image_count()));
    s.add("ground_truth", (out / "ground_truth.txt").string());
  }
  return s.add("out", out.string());
}

Summary cmd_curate(const RunConfig& cfg, const CurateArgs& args) {
  require_file(args.dataset, "--dataset");
  const double threshold = cfg.get_double("black_threshold");
  const PlaceDataset ds = load_dataset(args.dataset);
  const fs::path out = ensure_dir(args.out);
  const CurationResult result = curate(ds, threshold);
  {
    auto f = open_out(out / "curation_report.txt");
    result.report.write(f);
  }
  {
    auto f = open_out(out / "curated.txt");
    write_dataset_list(f, result.dataset);
  }
  return Summary()
      .add("scanned", result.report.scanned)
      .add("kept", result.report.kept)
      .add("removed_black", result.report.removed_black)
      .add("removed_corrupt", result.report.removed_corrupt)
      .add("cameras", result.dataset.num_classes());
}

Summary cmd_split(const RunConfig& cfg, const SplitArgs& args) {
  require_file(args.dataset, "--dataset");
  const PlaceDataset ds = load_dataset(args.dataset);
  const fs::path out = ensure_dir(args.out);
  const SplitResult parts =
      split(ds, cfg.get_size("train_per_camera"), cfg.get_size("val_per_camera"), cfg.get_u64("seed"));
  {
    auto f = open_out(out / "train.txt");
    write_dataset_list(f, parts.train);
  }
  {
    auto f = open_out(out / "val.txt");
    write_dataset_list(f, parts.val);
  }
  return Summary()
      .add("train", parts.train.image_count())
      .add("val", parts.val.image_count())
      .add("proportional_cameras", parts.notes.size());
}

Summary cmd_train(const RunConfig& cfg, const TrainArgs& args, std::ostream& log) {
  require_file(args.train, "--train");
  if (!args.val.empty()) require_file(args.val, "--val");
  const TrainConfig tcfg = cfg.train();
  const PlaceDataset train_ds = load_dataset(args.train);
  const NetworkSpec spec = network_preset(cfg.get("network"), train_ds.num_classes());
  const AugmentConfig aug = cfg.augment(spec);
  const fs::path out = ensure_dir(args.out);

  const LabeledImages train_set = load_images(train_ds);
  LabeledImages val_set;
  if (!args.val.empty()) {
    const PlaceDataset val_ds = load_dataset(args.val);
    if (val_ds.num_classes() != train_ds.num_classes()) {
      throw ShapeError("validation set has " + std::to_string(val_ds.num_classes()) + " classes, training set " +
                       std::to_string(train_ds.num_classes()));
    }
    val_set = load_images(val_ds);
  }
  const std::size_t every = std::max<std::size_t>(tcfg.log_every, 1);
  const auto progress = [&](std::size_t iter, double loss) {
    if ((iter + 1) % every == 0) log << "iter=" << iter + 1 << " loss=" << loss << std::endl;
  };
  const TrainResult result =
      train(train_set, val_set, spec, init_weights(spec, tcfg.seed, cfg.get_double("init_std")), tcfg, aug, progress);
  save_model(result.weights, spec, (out / "model.spdn").string());
  {
    auto f = open_out(out / "train_log.txt");
    result.log.write(f, every);
  }
  Summary s;
  s.add("iterations", result.log.rows.size());
  s.add("final_loss", result.log.rows.empty() ? 0.0 : result.log.rows.back().loss);
  s.add("train_accuracy", accuracy(spec, result.weights, train_set, aug));
  if (val_set.size() > 0) s.add("val_accuracy", accuracy(spec, result.weights, val_set, aug));
  return s.add("model", (out / "model.spdn").string());
}

Summary cmd_extract(const RunConfig& cfg, const ExtractArgs& args) {
  require_file(args.model, "--model");
  const LoadedModel model = load_model(args.model);
  const std::string layer = resolve_layer(model.spec, cfg);
  const EncoderConfig enc = cfg.encoder();
  const auto paths = traverse_images(args.images);
  const fs::path out = ensure_dir(args.out);
  const auto traces = capture_layer(model, paths, layer, cfg.augment(model.spec));

  DescriptorSet set;
  set.descriptors = encode_all(traces, model.spec, layer, enc);
  set.paths = paths;
  for (std::size_t i = 0; i < paths.size(); ++i) set.ids.push_back(static_cast<std::uint32_t>(i));
  const fs::path file = out / "descriptors.spdd";
  save_descriptors(set, file.string());
  return Summary()
      .add("count", set.size())
      .add("dim", set.dim())
      .add("layer", layer)
      .add("encoder", enc.summary())
      .add("descriptors", file.string());
}

Summary cmd_match(const RunConfig& cfg, const MatchArgs& args) {
  require_file(args.query, "--query");
  require_file(args.reference, "--reference");
  const Metric metric = cfg.metric();
  const DescriptorSet q = load_descriptors(args.query);
  const DescriptorSet r = load_descriptors(args.reference);
  const fs::path out = ensure_dir(args.out);
  const ConfusionMatrix m = build_confusion(q.descriptors, r.descriptors, metric);
  auto f = open_out(out / "confusion.txt");
  write_confusion(f, m);
  return Summary()
      .add("queries", m.queries())
      .add("references", m.references())
      .add("metric", std::string(metric_name(metric)))
      .add("confusion", (out / "confusion.txt").string());
}

Summary cmd_eval(const RunConfig& cfg, const EvalArgs& args) {
  require_file(args.confusion, "--confusion");
  if (!args.ground_truth.empty()) require_file(args.ground_truth, "--ground-truth");
  std::ifstream in(args.confusion);
  if (!in) throw IoError("cannot open " + args.confusion);
  const ConfusionMatrix m = read_confusion(in);
  const GroundTruth gt = ground_truth_for(cfg, args.ground_truth, m.queries());
  const fs::path out = ensure_dir(args.out);
  const PRCurve curve = evaluate_pr(m, gt);
  {
    auto f = open_out(out / "pr.txt");
    write_pr_table(f, curve);
  }
  {
    auto f = open_out(out / "pr.svg");
    f << svg_pr_chart({{"query vs reference", curve}}, "Precision-recall");
  }
  return Summary().add("auc", curve.auc).add("queries", m.queries()).add("points", curve.points.size());
}

Summary cmd_compare_encoders(const RunConfig& cfg, const CompareArgs& args) {
  require_file(args.model, "--model");
  if (!args.ground_truth.empty()) require_file(args.ground_truth, "--ground-truth");
  const LoadedModel model = load_model(args.model);
  const std::string layer = resolve_layer(model.spec, cfg);
  const Metric metric = cfg.metric();
  const auto ref_paths = traverse_images(args.reference);
  const auto query_paths = traverse_images(args.query);
  const GroundTruth gt = ground_truth_for(cfg, args.ground_truth, query_paths.size());
  const fs::path out = ensure_dir(args.out);
  const AugmentConfig aug = cfg.augment(model.spec);
  const auto ref_traces = capture_layer(model, ref_paths, layer, aug);
  const auto query_traces = capture_layer(model, query_paths, layer, aug);
  const bool spatial = infer_shapes(model.spec)[model.spec.index_of(layer)].spatial;

  Summary s;
  s.add("layer", layer);
  std::vector<std::pair<std::string, double>> bars;
  auto table = open_out(out / "encoders.txt");
  table << "# encoder dim auc\n";
  for (EncoderKind kind : kAllEncoders) {
    if (!spatial && kind != EncoderKind::kRawFlatten) continue;
    EncoderConfig enc = cfg.encoder();
    enc.kind = kind;
    const auto refs = encode_all(ref_traces, model.spec, layer, enc);
    const auto queries = encode_all(query_traces, model.spec, layer, enc);
    const PRCurve curve = evaluate_pr(build_confusion(queries, refs, metric), gt);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %zu %.6f\n", std::string(encoder_name(kind)).c_str(), refs.front().dim(),
                  curve.auc);
    table << buf;
    bars.emplace_back(encoder_name(kind), curve.auc);
    s.add(std::string(encoder_name(kind)), curve.auc);
  }
  auto svg = open_out(out / "encoders.svg");
  svg << svg_bar_chart(bars, "AUC per encoder (" + layer + ")");
  return s;
}

Summary cmd_viz(const RunConfig& cfg, const VizArgs& args) {
  require_file(args.model, "--model");
  const LoadedModel model = load_model(args.model);
  const std::string layer = resolve_layer(model.spec, cfg);
  const auto paths = traverse_images(args.images);
  const fs::path out = ensure_dir(args.out);
  const AugmentConfig aug = cfg.augment(model.spec);

  Summary s;
  const std::string& first = model.spec.layers.front().name;
  write_png((out / "weights.png").string(), weight_mosaic(model.spec, model.weights, first));
  s.add("weights", (out / "weights.png").string());

  std::vector<Tensor3> images, views;
  for (const auto& p : paths) {
    images.push_back(to_tensor(read_image(p)));
    views.push_back(input_view(images.back(), aug));
  }
  const auto hits = top_k_patches(model.spec, model.weights, images, layer, cfg.get_size("filter"),
                                  cfg.get_size("top_k"), aug);
  write_png((out / "patches.png").string(), render_patches(hits, views, receptive_field(model.spec, layer)));
  {
    auto f = open_out(out / "patches.txt");
    write_patch_index(f, hits, paths);
  }
  s.add("patches", hits.size());

  const std::size_t n_heat = std::min(cfg.get_size("heatmap_count"), images.size());
  const std::set<std::string, std::less<>> capture{layer};
  for (std::size_t i = 0; i < n_heat; ++i) {
    const Tensor3 input = prepare_input(images[i], model.spec, model.weights, aug);
    const auto trace = forward(model.spec, model.weights, input, capture).trace;
    const Tensor3 heat =
        heatmap(trace, model.spec, layer, views[i].height(), views[i].width(), cfg.heatmap_mode());
    char name[64];
    std::snprintf(name, sizeof name, "heatmap_%04zu.png", i);
    write_png((out / name).string(), heatmap_image(heat));
    std::snprintf(name, sizeof name, "overlay_%04zu.png", i);
    write_png((out / name).string(), heatmap_overlay(to_image(views[i]), heat));
  }
  return s.add("heatmaps", n_heat).add("layer", layer);
}

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return 2;
  if (dynamic_cast<const IoError*>(&e)) return 3;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const ParseError*>(&e)) return 4;
  if (dynamic_cast<const ShapeError*>(&e)) return 5;
  if (dynamic_cast<const TrainingError*>(&e)) return 6;
  return 1;
}

}  // namespace vpr::cli
