#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vpr/dataset.hpp"
#include "vpr/encoding.hpp"
#include "vpr/placerec.hpp"
#include "vpr/training.hpp"
#include "vpr/viz.hpp"

namespace vpr::cli {

/// Unknown keys, bad values and malformed config lines.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

struct ConfigKey {
  std::string_view name;
  std::string_view default_value;
  std::string_view help;
};

/// Every key the tool understands, with its default.
const std::vector<ConfigKey>& config_keys();

/// Merged key=value settings: defaults, then a config file, then flags.
class RunConfig {
 public:
  RunConfig();

  /// "key = value" lines; '#' starts a comment. Unknown keys are errors.
  void merge(std::istream& in, const std::string& source);
  void merge_file(const std::string& path);
  void set(std::string_view key, std::string value);

  const std::string& get(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<std::size_t> get_list(std::string_view key) const;

  /// Effective settings, one "key=value" per line in key order.
  void write(std::ostream& out) const;

  ToyConfig toy() const;
  TrainConfig train() const;
  AugmentConfig augment(const NetworkSpec& spec) const;
  EncoderConfig encoder() const;
  Metric metric() const;
  HeatmapMode heatmap_mode() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace vpr::cli
