// stsgcn: synthesize data, train, evaluate and inspect space-time separable
// graph convolutional pose forecasters from a single JSON config.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stsgcn/commands.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::size_t> epochs;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->required();
  cmd->add_option("--seed", f.seed, "override train.seed and synth.seed");
  cmd->add_option("--variant", f.variant, "override model.variant")
      ->check(CLI::IsMember({"separable", "full", "distinct", "shared"}));
  cmd->add_option("--epochs", f.epochs, "override train.epochs");
  cmd->add_option("--out", f.out, "override output.dir");
}

stsgcn::RunConfig resolve(const CommonFlags& f) {
  stsgcn::RunConfig rc = stsgcn::load_run_config(f.config);
  if (f.seed) {
    rc.train.seed = *f.seed;
    rc.synth.seed = *f.seed;
  }
  if (f.variant) rc.model.variant = stsgcn::parse_variant(*f.variant);
  if (f.epochs) rc.train.epochs = *f.epochs;
  if (f.out) rc.output_dir = *f.out;
  return rc;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time separable GCN for human pose forecasting"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string checkpoint, sequence, output, kind = "space";
  std::size_t layer = 0;

  auto* synth = app.add_subcommand("synth", "write a synthetic periodic-motion dataset");
  add_common(synth, flags);

  auto* train = app.add_subcommand("train", "train a model and write checkpoint.txt and train_report.csv");
  add_common(train, flags);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval, flags);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file (default <out>/checkpoint.txt)");

  auto* predict = app.add_subcommand("predict", "forecast the frames following a sequence");
  add_common(predict, flags);
  predict->add_option("--checkpoint", checkpoint, "checkpoint file (default <out>/checkpoint.txt)");
  predict->add_option("--sequence", sequence, "observed sequence file")->required();
  predict->add_option("--output", output, "output file (default <out>/prediction.pose)");

  auto* graph = app.add_subcommand("export-graph", "write one layer's learnt adjacency as CSV");
  add_common(graph, flags);
  graph->add_option("--checkpoint", checkpoint, "checkpoint file (default <out>/checkpoint.txt)");
  graph->add_option("--layer", layer, "encoder layer index");
  graph->add_option("--kind", kind, "space or time")->check(CLI::IsMember({"space", "time"}));

  auto* count = app.add_subcommand("count-params", "print the itemized parameter count");
  add_common(count, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    const stsgcn::RunConfig rc = resolve(flags);
    if (synth->parsed()) stsgcn::cmd_synth(rc, std::cout);
    else if (train->parsed()) stsgcn::cmd_train(rc, std::cout);
    else if (eval->parsed()) stsgcn::cmd_eval(rc, checkpoint, std::cout);
    else if (predict->parsed()) stsgcn::cmd_predict(rc, checkpoint, sequence, output, std::cout);
    else if (graph->parsed())
      stsgcn::cmd_export_graph(rc, checkpoint, layer, stsgcn::parse_adjacency_kind(kind), std::cout);
    else if (count->parsed()) stsgcn::cmd_count_params(rc, std::cout);
  } catch (const stsgcn::Error& e) {
    std::cerr << "error: " << e.code() << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 2;
  }
  return 0;
}
