// glosskit command line: one subcommand per pipeline stage, all driven by a
// flat key = value config file plus a few overrides.

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "glosskit/error.hpp"
#include "glosskit/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;  // config key -> raw value
  glosskit::SubcommandOptions options;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "config file (key = value lines)")->required()->check(CLI::ExistingFile);
  const auto over = [&](const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&o, key](const std::string& v) { o.values[key] = v; }, help);
  };
  over("--output-dir", "output_dir", "artifact directory");
  over("--lambda", "lambda", "minimum neighbor similarity");
  over("--top-n", "top_n", "contrastive neighbors per class");
  over("--k", "k", "generations per neighbor");
  over("--metric", "metric", "wup or path");
  over("--backend", "backend", "mock or remote");
  over("--seed", "seed", "generation seed");
  over("--in-flight", "in_flight", "concurrent generation requests");
  over("--descriptions", "descriptions", "combined, normal, contrastive or silver");
  over("--provider", "provider", "aligned, mock, file or remote");
}

const std::map<std::string, std::string> kHelp{
    {"import-wordnet", "convert data.noun/index.noun into skb.jsonl"},
    {"map-classes", "map dataset labels to synsets and print the mapping report"},
    {"simmatrix", "compute the class similarity matrix"},
    {"select-contrastive", "list contrastive neighbors per class"},
    {"gen-normal", "generate the normal description ensemble"},
    {"gen-contrastive", "generate contrastive descriptions"},
    {"build-silver", "one greedy description per class"},
    {"prototypes", "embed descriptions and write class prototypes"},
    {"classify", "predict a class for every image"},
    {"eval", "top-1 accuracy and confusion report"},
    {"report-fp", "top false positives versus contrastive neighbors"},
    {"export-zscig-prompts", "descriptions as prompts for image generation"},
    {"config-hash", "print the hash of the effective config"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glosskit: knowledge-base descriptions for zero-shot image classification"};
  app.set_version_flag("--version", std::string(glosskit::tool_version()));
  app.require_subcommand(1);

  Overrides o;
  for (const auto& name : glosskit::subcommand_names()) {
    auto* sub = app.add_subcommand(name, kHelp.at(name));
    add_common(sub, o);
    if (name == "report-fp") {
      sub->add_option("--class", o.options.fp_classes, "class ids to report (default: all)");
      sub->add_option("--top-m", o.options.top_m, "false positives per class")->check(CLI::PositiveNumber);
    }
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    auto cfg = glosskit::PipelineConfig::load(o.config);
    for (const auto& [key, value] : o.values) cfg.set(key, value);
    if (o.values.contains("top_n") || o.values.contains("k")) {
      cfg.ensemble.n_contrastive_total = cfg.ensemble.top_n * cfg.ensemble.k;
    }
    return glosskit::run_subcommand(name, cfg, o.options, std::cout);
  } catch (const std::exception& e) {
    std::cerr << glosskit::format_error_record(name, e) << '\n';
    return 2;
  }
}
