#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vpr/image_io.hpp"
#include "vpr/placerec.hpp"
#include "vpr/training.hpp"

namespace vpr {

struct ImageRecord {
  std::string path;
  std::optional<std::int64_t> timestamp;

  bool operator==(const ImageRecord&) const = default;
};

struct Camera {
  std::string id;
  std::size_t label = 0;
  std::vector<ImageRecord> images;

  bool operator==(const Camera&) const = default;
};

/// Cameras in label order; labels are 0..C-1.
struct PlaceDataset {
  std::vector<Camera> cameras;
  std::vector<std::string> warnings;

  std::size_t num_classes() const noexcept { return cameras.size(); }
  std::size_t image_count() const noexcept;

  bool operator==(const PlaceDataset& other) const { return cameras == other.cameras; }
};

/// root/<camera_id>/<image files>. Cameras sorted lexicographically and
/// labelled in that order, images sorted by filename. Camera directories
/// without image files are skipped with a warning.
PlaceDataset scan_dataset(const std::filesystem::path& root);

/// Images in camera order then file order, e.g. a traverse with one camera
/// per place. A flat directory of images is also accepted.
std::vector<std::string> list_traverse_images(const std::filesystem::path& root);

/// Dataset list file: "<label> <camera_id> <path>" per line.
void write_dataset_list(std::ostream& out, const PlaceDataset& dataset);
PlaceDataset read_dataset_list(std::istream& in);  // throws ParseError
/// Directory -> scan_dataset, regular file -> read_dataset_list.
PlaceDataset load_dataset(const std::filesystem::path& path);

struct CameraCuration {
  std::string id;
  std::size_t kept = 0;
  std::size_t removed_black = 0;
  std::size_t removed_corrupt = 0;
};

struct CurationReport {
  std::size_t scanned = 0;
  std::size_t kept = 0;
  std::size_t removed_black = 0;
  std::size_t removed_corrupt = 0;
  std::vector<CameraCuration> cameras;
  std::vector<std::string> dropped_cameras;
  std::vector<std::string> removed;  // "black <path>" / "corrupt <path>: reason"

  void write(std::ostream& out) const;
};

inline constexpr double kDefaultBlackThreshold = 10.0 / 255.0;

/// Mean Rec.601 luminance in [0,1].
double mean_luminance(const Image8& image);
/// Population variance over every channel value.
double pixel_variance(const Image8& image);

struct CurationResult {
  PlaceDataset dataset;
  CurationReport report;
};

/// Drops undecodable images and zero-variance images as corrupt and images
/// with mean luminance strictly below the threshold as black (black is
/// checked first). Cameras left empty are dropped and labels re-packed.
CurationResult curate(const PlaceDataset& dataset, double black_threshold = kDefaultBlackThreshold);

struct SplitResult {
  PlaceDataset train;
  PlaceDataset val;
  std::vector<std::string> notes;  // cameras split proportionally for lack of images
};

/// Seeded per-camera sampling without replacement. Cameras with fewer than
/// train + val images are split proportionally.
SplitResult split(const PlaceDataset& dataset, std::size_t train_per_camera, std::size_t val_per_camera,
                  std::uint64_t seed);

/// Decodes every image of a dataset into labelled 0..255 tensors.
LabeledImages load_images(const PlaceDataset& dataset);

struct ToyConfig {
  std::size_t num_places = 10;
  std::size_t images_per_place = 50;
  std::size_t image_size = 64;
  double brightness_range = 0.25;  // multiplicative gain drawn from [1 - r, 1 + r]
  double hue_shift_range = 0.25;   // radians of rotation about the gray axis, drawn from [-r, r]
  double noise_std = 0.03;         // gaussian noise in [0,1] pixel units
  std::size_t shift_max = 0;       // viewpoint proxy: window offset drawn from [-s, s] pixels
  std::uint64_t seed = 0;          // picks the base scenes
  std::uint64_t condition_seed = 0;  // picks the per-image perturbations

  void validate() const;
};

/// Perturbation parameters of one toy image.
struct ToyImageParams {
  std::string file;  // relative to the dataset root
  std::size_t place = 0;
  std::uint64_t scene_seed = 0;
  std::size_t image_size = 64;
  std::size_t canvas_size = 64;  // base scene extent; image_size + 2 shift_max
  float brightness = 1.0f;
  float hue = 0.0f;
  float noise_std = 0.0f;
  std::uint64_t noise_seed = 0;
  int shift_x = 0;
  int shift_y = 0;

  bool operator==(const ToyImageParams&) const = default;
};

/// Base scene (random gradient plus coloured rectangles and discs), 3 x S x S in [0,1].
Tensor3 render_scene(std::uint64_t scene_seed, std::size_t size);
/// Crops the image_size window at (margin + shift) from the canvas-sized base
/// scene, then applies hue rotation, gain and noise.
Image8 render_toy_image(const ToyImageParams& params);

/// Draws the perturbations for every image without rendering.
std::vector<ToyImageParams> plan_toy(const ToyConfig& cfg);

inline constexpr const char* kToyManifestName = "toy_manifest.txt";

/// Writes root/place_XXXX/img_XXXX.png plus toy_manifest.txt.
PlaceDataset gen_toy(const ToyConfig& cfg, const std::filesystem::path& out);

void write_toy_manifest(std::ostream& out, const std::vector<ToyImageParams>& images);
std::vector<ToyImageParams> read_toy_manifest(std::istream& in);  // throws ParseError

/// Two-column "query_index ref_index" table with an optional
/// "tolerance=<n>" line. Missing queries have no truth.
GroundTruth load_ground_truth(const std::filesystem::path& path, std::optional<std::size_t> num_queries = {});
GroundTruth parse_ground_truth(std::istream& in, std::optional<std::size_t> num_queries = {});
void write_ground_truth(std::ostream& out, const GroundTruth& gt);

}  // namespace vpr
