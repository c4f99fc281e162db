#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "run_config.hpp"

namespace vpr::cli {

/// One-line "key=value ..." summary printed on stdout.
struct Summary {
  std::vector<std::pair<std::string, std::string>> fields;

  Summary& add(std::string key, std::string value);
  Summary& add(std::string key, double value, int precision = 6);
  Summary& add(std::string key, std::size_t value);
  std::string str() const;
};

struct GenToyArgs {
  std::string out;
  bool traverse = false;  // one image per place plus identity ground truth
};
Summary cmd_gen_toy(const RunConfig& cfg, const GenToyArgs& args);

struct CurateArgs {
  std::string dataset;
  std::string out;
};
Summary cmd_curate(const RunConfig& cfg, const CurateArgs& args);

struct SplitArgs {
  std::string dataset;
  std::string out;
};
Summary cmd_split(const RunConfig& cfg, const SplitArgs& args);

struct TrainArgs {
  std::string train;
  std::string val;  // optional
  std::string out;
};
Summary cmd_train(const RunConfig& cfg, const TrainArgs& args, std::ostream& log);

struct ExtractArgs {
  std::string model;
  std::string images;
  std::string out;
};
Summary cmd_extract(const RunConfig& cfg, const ExtractArgs& args);

struct MatchArgs {
  std::string query;
  std::string reference;
  std::string out;
};
Summary cmd_match(const RunConfig& cfg, const MatchArgs& args);

struct EvalArgs {
  std::string confusion;
  std::string ground_truth;  // optional: identity when empty
  std::string out;
};
Summary cmd_eval(const RunConfig& cfg, const EvalArgs& args);

struct CompareArgs {
  std::string model;
  std::string reference;
  std::string query;
  std::string ground_truth;  // optional: identity when empty
  std::string out;
};
Summary cmd_compare_encoders(const RunConfig& cfg, const CompareArgs& args);

struct VizArgs {
  std::string model;
  std::string images;
  std::string out;
};
Summary cmd_viz(const RunConfig& cfg, const VizArgs& args);

/// Process exit code for an exception escaping a command.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace vpr::cli
