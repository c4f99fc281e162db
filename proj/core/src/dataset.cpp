#include "vpr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace vpr {
namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> sorted_image_files(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path().string())) files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::size_t PlaceDataset::image_count() const noexcept {
  std::size_t n = 0;
  for (const auto& c : cameras) n += c.images.size();
  return n;
}

PlaceDataset scan_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("dataset root " + root.string() + " is not a readable directory");
  std::vector<fs::path> dirs;
  try {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory()) dirs.push_back(entry.path());
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot list " + root.string() + ": " + e.what());
  }
  std::sort(dirs.begin(), dirs.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  PlaceDataset ds;
  for (const auto& dir : dirs) {
    std::vector<std::string> files;
    try {
      files = sorted_image_files(dir);
    } catch (const fs::filesystem_error& e) {
      throw IoError("cannot list " + dir.string() + ": " + e.what());
    }
    if (files.empty()) {
      ds.warnings.push_back("camera '" + dir.filename().string() + "' has no image files; skipped");
      continue;
    }
    Camera cam{dir.filename().string(), ds.cameras.size(), {}};
    for (auto& f : files) cam.images.push_back({std::move(f), std::nullopt});
    ds.cameras.push_back(std::move(cam));
  }
  if (ds.cameras.empty()) throw IoError("dataset root " + root.string() + " contains no camera directories with images");
  return ds;
}

std::vector<std::string> list_traverse_images(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError(root.string() + " is not a readable directory");
  std::vector<std::string> flat = sorted_image_files(root);
  if (!flat.empty()) return flat;
  std::vector<std::string> out;
  for (const auto& cam : scan_dataset(root).cameras) {
    for (const auto& img : cam.images) out.push_back(img.path);
  }
  return out;
}

void write_dataset_list(std::ostream& out, const PlaceDataset& dataset) {
  for (const auto& cam : dataset.cameras) {
    for (const auto& img : cam.images) out << cam.label << ' ' << cam.id << ' ' << img.path << '\n';
  }
}

PlaceDataset read_dataset_list(std::istream& in) {
  PlaceDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream row(t);
    std::string label_text, id, path;
    row >> label_text >> id;
    std::getline(row >> std::ws, path);
    std::size_t label = 0;
    if (!parse_number(label_text, label) || id.empty() || path.empty()) {
      throw ParseError("dataset list line " + std::to_string(line_no) + ": expected '<label> <camera> <path>'");
    }
    if (ds.cameras.empty() || ds.cameras.back().id != id) {
      if (label != ds.cameras.size()) {
        throw ParseError("dataset list line " + std::to_string(line_no) + ": label " + std::to_string(label) +
                         " breaks the contiguous 0..C-1 order");
      }
      ds.cameras.push_back({id, label, {}});
    } else if (label != ds.cameras.back().label) {
      throw ParseError("dataset list line " + std::to_string(line_no) + ": camera '" + id + "' changes label");
    }
    ds.cameras.back().images.push_back({path, std::nullopt});
  }
  if (ds.cameras.empty()) throw ParseError("dataset list is empty");
  return ds;
}

PlaceDataset load_dataset(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return scan_dataset(path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return read_dataset_list(in);
}

void CurationReport::write(std::ostream& out) const {
  out << "scanned=" << scanned << " kept=" << kept << " removed_black=" << removed_black
      << " removed_corrupt=" << removed_corrupt << '\n';
  for (const auto& c : cameras) {
    out << "camera " << c.id << " kept=" << c.kept << " removed_black=" << c.removed_black
        << " removed_corrupt=" << c.removed_corrupt << '\n';
  }
  for (const auto& d : dropped_cameras) out << "dropped_camera " << d << '\n';
  for (const auto& r : removed) out << "removed " << r << '\n';
}

double mean_luminance(const Image8& image) {
  if (image.channels != 3) throw ShapeError("mean_luminance expects RGB");
  double sum = 0;
  const std::size_t n = image.width * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    sum += 0.299 * image.pixels[3 * i] + 0.587 * image.pixels[3 * i + 1] + 0.114 * image.pixels[3 * i + 2];
  }
  return n ? sum / (255.0 * static_cast<double>(n)) : 0.0;
}

double pixel_variance(const Image8& image) {
  if (image.pixels.empty()) return 0.0;
  double mean = 0;
  for (auto v : image.pixels) mean += v;
  mean /= static_cast<double>(image.pixels.size());
  double var = 0;
  for (auto v : image.pixels) var += (v - mean) * (v - mean);
  return var / static_cast<double>(image.pixels.size());
}

CurationResult curate(const PlaceDataset& dataset, double black_threshold) {
  CurationResult result;
  auto& report = result.report;
  for (const Camera& cam : dataset.cameras) {
    CameraCuration stats{cam.id};
    Camera kept{cam.id, result.dataset.cameras.size(), {}};
    for (const ImageRecord& rec : cam.images) {
      ++report.scanned;
      Image8 img;
      try {
        img = read_image(rec.path);
      } catch (const Error& e) {
        ++stats.removed_corrupt;
        report.removed.push_back("corrupt " + rec.path + ": " + e.what());
        continue;
      }
      if (img.width == 0 || img.height == 0) {
        ++stats.removed_corrupt;
        report.removed.push_back("corrupt " + rec.path + ": empty image");
        continue;
      }
      if (mean_luminance(img) < black_threshold) {
        ++stats.removed_black;
        report.removed.push_back("black " + rec.path);
        continue;
      }
      if (pixel_variance(img) == 0.0) {
        ++stats.removed_corrupt;
        report.removed.push_back("corrupt " + rec.path + ": zero pixel variance");
        continue;
      }
      ++stats.kept;
      kept.images.push_back(rec);
    }
    report.kept += stats.kept;
    report.removed_black += stats.removed_black;
    report.removed_corrupt += stats.removed_corrupt;
    report.cameras.push_back(stats);
    if (kept.images.empty()) {
      report.dropped_cameras.push_back(cam.id);
      result.dataset.warnings.push_back("camera '" + cam.id + "' has no usable images after curation; dropped");
    } else {
      result.dataset.cameras.push_back(std::move(kept));
    }
  }
  return result;
}

SplitResult split(const PlaceDataset& dataset, std::size_t train_per_camera, std::size_t val_per_camera,
                  std::uint64_t seed) {
  SplitResult out;
  const std::size_t want = train_per_camera + val_per_camera;
  for (const Camera& cam : dataset.cameras) {
    const std::size_t n = cam.images.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix(seed, cam.label));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_train = train_per_camera;
    std::size_t n_val = val_per_camera;
    if (n < want) {
      n_train = want == 0 ? 0 : static_cast<std::size_t>(std::llround(static_cast<double>(n * train_per_camera) / static_cast<double>(want)));
      if (train_per_camera > 0 && n_train == 0 && n > 0) n_train = 1;
      n_val = std::min(val_per_camera, n - n_train);
      out.notes.push_back("camera '" + cam.id + "' has " + std::to_string(n) + " images; split " +
                          std::to_string(n_train) + " train / " + std::to_string(n_val) + " val");
    }
    auto take = [&](std::size_t from, std::size_t count) {
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                   order.begin() + static_cast<std::ptrdiff_t>(from + count));
      std::sort(idx.begin(), idx.end());
      Camera c{cam.id, cam.label, {}};
      for (std::size_t i : idx) c.images.push_back(cam.images[i]);
      return c;
    };
    out.train.cameras.push_back(take(0, n_train));
    out.val.cameras.push_back(take(n_train, n_val));
  }
  return out;
}

LabeledImages load_images(const PlaceDataset& dataset) {
  LabeledImages data;
  for (const Camera& cam : dataset.cameras) {
    for (const ImageRecord& rec : cam.images) {
      data.images.push_back(to_tensor(read_image(rec.path)));
      data.labels.push_back(cam.label);
    }
  }
  return data;
}

void ToyConfig::validate() const {
  if (num_places < 1 || images_per_place < 1 || image_size < 1) {
    throw ArgumentError("toy dataset counts and image size must be >= 1");
  }
  if (2 * shift_max >= image_size) throw ArgumentError("toy viewpoint shift must be below half the image size");
  if (brightness_range < 0 || brightness_range >= 1 || hue_shift_range < 0 || noise_std < 0) {
    throw ArgumentError("toy condition ranges must be non-negative (brightness below 1)");
  }
}

Tensor3 render_scene(std::uint64_t scene_seed, std::size_t size) {
  std::mt19937_64 rng(scene_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto colour = [&] { return std::array<double, 3>{unit(rng), unit(rng), unit(rng)}; };
  Tensor3 scene(3, size, size);
  const auto s = static_cast<double>(size);

  const auto from = colour();
  const auto to = colour();
  const double angle = unit(rng) * 2.0 * std::numbers::pi;
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double u = ((static_cast<double>(x) / s - 0.5) * ca + (static_cast<double>(y) / s - 0.5) * sa) + 0.5;
      const double t = std::clamp(u, 0.0, 1.0);
      for (std::size_t c = 0; c < 3; ++c) scene.at(c, y, x) = static_cast<float>(from[c] * (1 - t) + to[c] * t);
    }
  }

  const int rects = 6 + static_cast<int>(unit(rng) * 5);
  for (int r = 0; r < rects; ++r) {
    const double w = (0.1 + 0.35 * unit(rng)) * s;
    const double h = (0.1 + 0.35 * unit(rng)) * s;
    const double x0 = unit(rng) * (s - w);
    const double y0 = unit(rng) * (s - h);
    const auto c = colour();
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double fx = static_cast<double>(x) + 0.5, fy = static_cast<double>(y) + 0.5;
        if (fx >= x0 && fx < x0 + w && fy >= y0 && fy < y0 + h) {
          for (std::size_t k = 0; k < 3; ++k) scene.at(k, y, x) = static_cast<float>(c[k]);
        }
      }
    }
  }

  const int discs = 2 + static_cast<int>(unit(rng) * 3);
  for (int d = 0; d < discs; ++d) {
    const double radius = (0.05 + 0.12 * unit(rng)) * s;
    const double cx = unit(rng) * s, cy = unit(rng) * s;
    const auto c = colour();
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx, dy = static_cast<double>(y) + 0.5 - cy;
        if (dx * dx + dy * dy <= radius * radius) {
          for (std::size_t k = 0; k < 3; ++k) scene.at(k, y, x) = static_cast<float>(c[k]);
        }
      }
    }
  }
  return scene;
}

Image8 render_toy_image(const ToyImageParams& p) {
  if (p.canvas_size < p.image_size || (p.canvas_size - p.image_size) % 2 != 0) {
    throw ArgumentError("toy canvas must exceed the image size by an even margin");
  }
  const Tensor3 base = render_scene(p.scene_seed, p.canvas_size);
  const auto size = static_cast<std::ptrdiff_t>(p.image_size);
  const auto canvas = static_cast<std::ptrdiff_t>(p.canvas_size);
  const std::ptrdiff_t margin = (canvas - size) / 2;

  // Rotation by `hue` about the gray axis (1,1,1)/sqrt(3).
  const double c = std::cos(p.hue), s = std::sin(p.hue), k = 1.0 / std::sqrt(3.0);
  const double a = c + (1 - c) / 3.0;
  const double b = (1 - c) / 3.0 - s * k;
  const double d = (1 - c) / 3.0 + s * k;
  const double rot[3][3] = {{a, b, d}, {d, a, b}, {b, d, a}};

  std::mt19937_64 rng(p.noise_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Image8 img(p.image_size, p.image_size, 3);
  for (std::ptrdiff_t y = 0; y < size; ++y) {
    for (std::ptrdiff_t x = 0; x < size; ++x) {
      const auto sy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y + margin + p.shift_y, 0, canvas - 1));
      const auto sx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x + margin + p.shift_x, 0, canvas - 1));
      const double in[3] = {base.at(0, sy, sx), base.at(1, sy, sx), base.at(2, sy, sx)};
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double v = rot[ch][0] * in[0] + rot[ch][1] * in[1] + rot[ch][2] * in[2];
        v *= p.brightness;
        if (p.noise_std > 0) v += p.noise_std * noise(rng);
        img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), ch) =
            static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return img;
}

std::vector<ToyImageParams> plan_toy(const ToyConfig& cfg) {
  cfg.validate();
  std::vector<ToyImageParams> plan;
  char name[64];
  for (std::size_t place = 0; place < cfg.num_places; ++place) {
    const std::uint64_t scene_seed = mix(cfg.seed, place);
    for (std::size_t i = 0; i < cfg.images_per_place; ++i) {
      std::mt19937_64 rng(mix(mix(cfg.condition_seed, 0xC0DE + place), i));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      ToyImageParams p;
      std::snprintf(name, sizeof name, "place_%04zu/img_%04zu.png", place, i);
      p.file = name;
      p.place = place;
      p.scene_seed = scene_seed;
      p.image_size = cfg.image_size;
      p.canvas_size = cfg.image_size + 2 * cfg.shift_max;
      p.brightness = static_cast<float>(1.0 + cfg.brightness_range * unit(rng));
      p.hue = static_cast<float>(cfg.hue_shift_range * unit(rng));
      p.noise_std = static_cast<float>(cfg.noise_std);
      p.noise_seed = rng();
      if (cfg.shift_max > 0) {
        std::uniform_int_distribution<int> shift(-static_cast<int>(cfg.shift_max), static_cast<int>(cfg.shift_max));
        p.shift_x = shift(rng);
        p.shift_y = shift(rng);
      }
      plan.push_back(std::move(p));
    }
  }
  return plan;
}

void write_toy_manifest(std::ostream& out, const std::vector<ToyImageParams>& images) {
  out << "# toy manifest v1: file place scene_seed size canvas brightness hue noise_std noise_seed shift_x shift_y\n";
  char buf[512];
  for (const auto& p : images) {
    std::snprintf(buf, sizeof buf,
                  "%s place=%zu scene_seed=%llu size=%zu canvas=%zu brightness=%.9g hue=%.9g noise_std=%.9g noise_seed=%llu "
                  "shift_x=%d shift_y=%d\n",
                  p.file.c_str(), p.place, static_cast<unsigned long long>(p.scene_seed), p.image_size, p.canvas_size,
                  static_cast<double>(p.brightness), static_cast<double>(p.hue), static_cast<double>(p.noise_std),
                  static_cast<unsigned long long>(p.noise_seed), p.shift_x, p.shift_y);
    out << buf;
  }
}

std::vector<ToyImageParams> read_toy_manifest(std::istream& in) {
  std::vector<ToyImageParams> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream row(t);
    ToyImageParams p;
    row >> p.file;
    std::string field;
    std::size_t seen = 0;
    auto bad = [&](const std::string& why) {
      throw ParseError("toy manifest line " + std::to_string(line_no) + ": " + why);
    };
    while (row >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) bad("expected key=value, got '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      bool ok = false;
      if (key == "place") ok = parse_number(value, p.place);
      else if (key == "scene_seed") ok = parse_number(value, p.scene_seed);
      else if (key == "size") ok = parse_number(value, p.image_size);
      else if (key == "canvas") ok = parse_number(value, p.canvas_size);
      else if (key == "brightness") ok = parse_number(value, p.brightness);
      else if (key == "hue") ok = parse_number(value, p.hue);
      else if (key == "noise_std") ok = parse_number(value, p.noise_std);
      else if (key == "noise_seed") ok = parse_number(value, p.noise_seed);
      else if (key == "shift_x") ok = parse_number(value, p.shift_x);
      else if (key == "shift_y") ok = parse_number(value, p.shift_y);
      else bad("unknown key '" + key + "'");
      if (!ok) bad("bad value for '" + key + "'");
      ++seen;
    }
    if (seen != 10) bad("expected 10 fields, got " + std::to_string(seen));
    out.push_back(std::move(p));
  }
  return out;
}

PlaceDataset gen_toy(const ToyConfig& cfg, const fs::path& out) {
  const auto plan = plan_toy(cfg);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create toy dataset directory " + out.string());
  PlaceDataset ds;
  for (const auto& p : plan) {
    if (ds.cameras.size() <= p.place) {
      char id[32];
      std::snprintf(id, sizeof id, "place_%04zu", p.place);
      ds.cameras.push_back({id, p.place, {}});
      fs::create_directories(out / id, ec);
      if (ec) throw IoError("cannot create " + (out / id).string());
    }
    const fs::path path = out / p.file;
    write_png(path.string(), render_toy_image(p));
    ds.cameras[p.place].images.push_back({path.string(), std::nullopt});
  }
  std::ofstream manifest(out / kToyManifestName, std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + (out / kToyManifestName).string());
  write_toy_manifest(manifest, plan);
  return ds;
}

GroundTruth parse_ground_truth(std::istream& in, std::optional<std::size_t> num_queries) {
  GroundTruth gt;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> seen_line;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_query = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("tolerance=", 0) == 0) {
      if (!parse_number(std::string_view(t).substr(10), gt.tolerance_frames)) {
        throw ParseError("ground truth line " + std::to_string(line_no) + ": bad tolerance '" + t + "'");
      }
      continue;
    }
    std::istringstream row(t);
    std::string q_text, r_text, extra;
    row >> q_text >> r_text;
    std::size_t q = 0, r = 0;
    if (!parse_number(q_text, q) || !parse_number(r_text, r) || (row >> extra)) {
      throw ParseError("ground truth line " + std::to_string(line_no) + ": expected '<query_index> <ref_index>', got '" +
                       t + "'");
    }
    if (num_queries && q >= *num_queries) {
      throw ParseError("ground truth line " + std::to_string(line_no) + ": query " + std::to_string(q) +
                       " outside " + std::to_string(*num_queries) + " queries");
    }
    pairs.emplace_back(q, r);
    seen_line.push_back(line_no);
    max_query = std::max(max_query, q);
  }
  const std::size_t n = num_queries ? *num_queries : (pairs.empty() ? 0 : max_query + 1);
  gt.match.assign(n, std::nullopt);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto& slot = gt.match[pairs[i].first];
    if (slot) {
      throw ParseError("ground truth line " + std::to_string(seen_line[i]) + ": duplicate query index " +
                       std::to_string(pairs[i].first));
    }
    slot = pairs[i].second;
  }
  return gt;
}

GroundTruth load_ground_truth(const fs::path& path, std::optional<std::size_t> num_queries) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ground truth " + path.string());
  try {
    return parse_ground_truth(in, num_queries);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_ground_truth(std::ostream& out, const GroundTruth& gt) {
  out << "tolerance=" << gt.tolerance_frames << '\n';
  for (std::size_t q = 0; q < gt.match.size(); ++q) {
    if (gt.match[q]) out << q << ' ' << *gt.match[q] << '\n';
  }
}

}  // namespace vpr
