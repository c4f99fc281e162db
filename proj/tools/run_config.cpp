#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace vpr::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_as(std::string_view key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "0", "global seed (toy scenes, init, shuffles, splits)"},
      {"network", "amosnet-mini", "network preset: amosnet, amosnet-mini, amosnet-mini-overlap"},
      {"metric", "cosine", "descriptor distance: cosine or euclidean"},
      {"layer", "", "feature layer (empty: last conv layer)"},
      {"encoder", "multiscale", "multiscale, holistic_max, holistic_sum or raw_flatten"},
      {"scales", "1,2,3,4", "pyramid grid sizes for the multiscale encoder"},
      {"normalize", "true", "L2-normalise descriptors"},
      {"tolerance", "", "ground-truth tolerance in frames (empty: the ground-truth file's value)"},
      {"num_places", "10", "toy: places (cameras)"},
      {"images_per_place", "50", "toy: images per place"},
      {"image_size", "64", "toy: image side in pixels"},
      {"brightness_range", "0.25", "toy: gain drawn from [1-r, 1+r]"},
      {"hue_shift_range", "0.25", "toy: hue rotation in radians drawn from [-r, r]"},
      {"noise_std", "0.03", "toy: gaussian pixel noise"},
      {"shift_max", "0", "toy: viewpoint shift in pixels drawn from [-s, s]"},
      {"condition_seed", "1", "toy: seed of the per-image conditions"},
      {"base_lr", "0.01", "initial learning rate"},
      {"lr_step_iters", "60000", "iterations between learning-rate drops"},
      {"lr_factor", "0.1", "learning-rate drop factor"},
      {"momentum", "0.9", "SGD momentum"},
      {"weight_decay", "0.005", "L2 weight decay"},
      {"batch_size", "50", "minibatch size"},
      {"max_iters", "120000", "training iterations"},
      {"log_every", "100", "iterations between validation measurements and log rows"},
      {"init_std", "0.01", "std of the Gaussian weight init"},
      {"resize_to", "0", "preprocessing resize side (0: network default)"},
      {"crop_to", "0", "preprocessing crop side (0: network input)"},
      {"train_crop", "random", "training crop: random or center"},
      {"horizontal_flip", "false", "random horizontal flips during training"},
      {"train_per_camera", "500", "split: training images per camera"},
      {"val_per_camera", "50", "split: validation images per camera"},
      {"black_threshold", "0.0392156863", "curation: mean-luminance threshold for black frames"},
      {"filter", "0", "viz: filter index for top-k patches"},
      {"top_k", "9", "viz: number of patches"},
      {"heatmap_mode", "sum", "viz: channel aggregation, sum or max"},
      {"heatmap_count", "4", "viz: heat maps for the first n images"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_.emplace(std::string(k.name), std::string(k.default_value));
}

void RunConfig::set(std::string_view key, std::string value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second = std::move(value);
}

void RunConfig::merge(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (!values_.contains(key)) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
    }
    set(key, trim(std::string_view(t).substr(eq + 1)));
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  merge(in, path);
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::uint64_t RunConfig::get_u64(std::string_view key) const { return parse_as<std::uint64_t>(key, get(key)); }
std::size_t RunConfig::get_size(std::string_view key) const { return parse_as<std::size_t>(key, get(key)); }
double RunConfig::get_double(std::string_view key) const { return parse_as<double>(key, get(key)); }

bool RunConfig::get_bool(std::string_view key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false, got '" + v + "'");
}

std::vector<std::size_t> RunConfig::get_list(std::string_view key) const {
  std::vector<std::size_t> out;
  std::string_view rest = get(key);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    out.push_back(parse_as<std::size_t>(key, trim(rest.substr(0, comma))));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  return out;
}

void RunConfig::write(std::ostream& out) const {
  for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
}

ToyConfig RunConfig::toy() const {
  ToyConfig t;
  t.num_places = get_size("num_places");
  t.images_per_place = get_size("images_per_place");
  t.image_size = get_size("image_size");
  t.brightness_range = get_double("brightness_range");
  t.hue_shift_range = get_double("hue_shift_range");
  t.noise_std = get_double("noise_std");
  t.shift_max = get_size("shift_max");
  t.seed = get_u64("seed");
  t.condition_seed = get_u64("condition_seed");
  return t;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.base_lr = get_double("base_lr");
  t.lr_step_iters = get_size("lr_step_iters");
  t.lr_factor = get_double("lr_factor");
  t.momentum = get_double("momentum");
  t.weight_decay = get_double("weight_decay");
  t.batch_size = get_size("batch_size");
  t.max_iters = get_size("max_iters");
  t.log_every = get_size("log_every");
  t.seed = get_u64("seed");
  t.validate();
  return t;
}

AugmentConfig RunConfig::augment(const NetworkSpec& spec) const {
  AugmentConfig a = default_augment_for(spec);
  if (const auto r = get_size("resize_to")) a.resize_to = r;
  if (const auto c = get_size("crop_to")) a.crop_to = c;
  const std::string& crop = get("train_crop");
  if (crop == "random") a.train_crop = CropMode::kRandom;
  else if (crop == "center") a.train_crop = CropMode::kCenter;
  else throw ConfigError("train_crop must be random or center, got '" + crop + "'");
  a.horizontal_flip = get_bool("horizontal_flip");
  a.validate();
  return a;
}

EncoderConfig RunConfig::encoder() const {
  EncoderConfig e;
  e.kind = parse_encoder(get("encoder"));
  e.scales = get_list("scales");
  e.normalize = get_bool("normalize");
  e.validate();
  return e;
}

Metric RunConfig::metric() const { return parse_metric(get("metric")); }

HeatmapMode RunConfig::heatmap_mode() const {
  const std::string& m = get("heatmap_mode");
  if (m == "sum") return HeatmapMode::kChannelSum;
  if (m == "max") return HeatmapMode::kChannelMax;
  throw ConfigError("heatmap_mode must be sum or max, got '" + m + "'");
}

}  // namespace vpr::cli
