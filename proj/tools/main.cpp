// vpr: command line front end. Every subcommand prints one key=value summary
// line on stdout; progress goes to stderr.

#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using vpr::cli::RunConfig;

struct KeyFlag {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_file;
  std::vector<std::string> overrides;  // --set key=value
  std::vector<std::unique_ptr<KeyFlag>> flags;

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) cfg.merge_file(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw vpr::cli::ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& f : flags) {
      if (f->option->count() > 0) cfg.set(f->key, f->value);
    }
    return cfg;
  }
};

const vpr::cli::ConfigKey& key_info(std::string_view name) {
  for (const auto& k : vpr::cli::config_keys()) {
    if (k.name == name) return k;
  }
  throw std::logic_error("no config key " + std::string(name));
}

Subcommand& add_subcommand(CLI::App& root, std::vector<std::unique_ptr<Subcommand>>& all, const std::string& name,
                           const std::string& description, std::initializer_list<std::string_view> keys) {
  auto sub = std::make_unique<Subcommand>();
  sub->app = root.add_subcommand(name, description);
  sub->app->add_option("--config", sub->config_file, "key=value config file (flags win over it)");
  sub->app->add_option("--set", sub->overrides, "override any config key: --set key=value (repeatable)");
  for (std::string_view common : {"seed", "metric", "layer", "encoder", "tolerance"}) {
    auto flag = std::make_unique<KeyFlag>();
    flag->key = common;
    const auto& info = key_info(common);
    std::string opt = "--" + std::string(common);
    flag->option = sub->app->add_option(opt, flag->value, std::string(info.help))->default_str(std::string(info.default_value));
    sub->flags.push_back(std::move(flag));
  }
  for (std::string_view key : keys) {
    auto flag = std::make_unique<KeyFlag>();
    flag->key = key;
    const auto& info = key_info(key);
    std::string opt = "--" + std::string(key);
    std::replace(opt.begin() + 2, opt.end(), '_', '-');
    flag->option = sub->app->add_option(opt, flag->value, std::string(info.help))->default_str(std::string(info.default_value));
    sub->flags.push_back(std::move(flag));
  }
  all.push_back(std::move(sub));
  return *all.back();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual place recognition toolkit: toy data, training, descriptors, matching and evaluation"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(36);
  std::vector<std::unique_ptr<Subcommand>> subs;

  vpr::cli::GenToyArgs gen_args;
  auto& gen = add_subcommand(app, subs, "gen-toy", "Render a seeded synthetic place dataset",
                             {"num_places", "images_per_place", "image_size", "brightness_range", "hue_shift_range",
                              "noise_std", "shift_max", "condition_seed"});
  gen.app->add_option("--out", gen_args.out, "output dataset directory")->required();
  gen.app->add_flag("--traverse", gen_args.traverse, "one image per place plus identity ground_truth.txt");

  vpr::cli::CurateArgs curate_args;
  auto& cur = add_subcommand(app, subs, "curate", "Remove black and corrupt images", {"black_threshold"});
  cur.app->add_option("--dataset", curate_args.dataset, "dataset directory or list file")->required();
  cur.app->add_option("--out", curate_args.out, "output directory (curated.txt, curation_report.txt)")->required();

  vpr::cli::SplitArgs split_args;
  auto& spl = add_subcommand(app, subs, "split", "Sample per-camera train/val lists",
                             {"train_per_camera", "val_per_camera"});
  spl.app->add_option("--dataset", split_args.dataset, "dataset directory or list file")->required();
  spl.app->add_option("--out", split_args.out, "output directory (train.txt, val.txt)")->required();

  vpr::cli::TrainArgs train_args;
  auto& trn = add_subcommand(app, subs, "train", "Train a place-classification network",
                             {"network", "base_lr", "lr_step_iters", "lr_factor", "momentum", "weight_decay",
                              "batch_size", "max_iters", "log_every", "init_std", "resize_to", "crop_to",
                              "train_crop", "horizontal_flip"});
  trn.app->add_option("--train", train_args.train, "training dataset directory or list file")->required();
  trn.app->add_option("--val", train_args.val, "validation dataset directory or list file");
  trn.app->add_option("--out", train_args.out, "output directory (model.spdn, train_log.txt)")->required();

  vpr::cli::ExtractArgs extract_args;
  auto& ext = add_subcommand(app, subs, "extract", "Encode a traverse into a descriptor file",
                             {"scales", "normalize", "resize_to", "crop_to"});
  ext.app->add_option("--model", extract_args.model, "model file")->required();
  ext.app->add_option("--images", extract_args.images, "traverse directory")->required();
  ext.app->add_option("--out", extract_args.out, "output directory (descriptors.spdd + manifest)")->required();

  vpr::cli::MatchArgs match_args;
  auto& mat = add_subcommand(app, subs, "match", "Build the query x reference distance matrix", {});
  mat.app->add_option("--query", match_args.query, "query descriptor file")->required();
  mat.app->add_option("--reference", match_args.reference, "reference descriptor file")->required();
  mat.app->add_option("--out", match_args.out, "output directory (confusion.txt)")->required();

  vpr::cli::EvalArgs eval_args;
  auto& evl = add_subcommand(app, subs, "eval", "Precision-recall sweep and AUC", {});
  evl.app->add_option("--confusion", eval_args.confusion, "confusion matrix file")->required();
  evl.app->add_option("--ground-truth", eval_args.ground_truth, "ground-truth table (default: identity)");
  evl.app->add_option("--out", eval_args.out, "output directory (pr.txt, pr.svg)")->required();

  vpr::cli::CompareArgs compare_args;
  auto& cmp = add_subcommand(app, subs, "compare-encoders", "AUC of every encoder on identical features",
                             {"scales", "normalize", "resize_to", "crop_to"});
  cmp.app->add_option("--model", compare_args.model, "model file")->required();
  cmp.app->add_option("--reference", compare_args.reference, "reference traverse directory")->required();
  cmp.app->add_option("--query", compare_args.query, "query traverse directory")->required();
  cmp.app->add_option("--ground-truth", compare_args.ground_truth, "ground-truth table (default: identity)");
  cmp.app->add_option("--out", compare_args.out, "output directory (encoders.txt, encoders.svg)")->required();

  vpr::cli::VizArgs viz_args;
  auto& viz = add_subcommand(app, subs, "viz", "Weight mosaic, top-k patches and heat maps",
                             {"filter", "top_k", "heatmap_mode", "heatmap_count", "resize_to", "crop_to"});
  viz.app->add_option("--model", viz_args.model, "model file")->required();
  viz.app->add_option("--images", viz_args.images, "image directory")->required();
  viz.app->add_option("--out", viz_args.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    vpr::cli::Summary summary;
    for (const auto& sub : subs) {
      if (!sub->app->parsed()) continue;
      const RunConfig cfg = sub->resolve();
      if (sub.get() == &gen) summary = vpr::cli::cmd_gen_toy(cfg, gen_args);
      else if (sub.get() == &cur) summary = vpr::cli::cmd_curate(cfg, curate_args);
      else if (sub.get() == &spl) summary = vpr::cli::cmd_split(cfg, split_args);
      else if (sub.get() == &trn) summary = vpr::cli::cmd_train(cfg, train_args, std::cerr);
      else if (sub.get() == &ext) summary = vpr::cli::cmd_extract(cfg, extract_args);
      else if (sub.get() == &mat) summary = vpr::cli::cmd_match(cfg, match_args);
      else if (sub.get() == &evl) summary = vpr::cli::cmd_eval(cfg, eval_args);
      else if (sub.get() == &cmp) summary = vpr::cli::cmd_compare_encoders(cfg, compare_args);
      else if (sub.get() == &viz) summary = vpr::cli::cmd_viz(cfg, viz_args);
    }
    std::cout << summary.str() << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return vpr::cli::exit_code_for(e);
  }
  return 0;
}
