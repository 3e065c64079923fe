#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "cinerecon/harness/harness.hpp"

namespace {

using cinerecon::harness::RunConfig;

struct CommonArgs {
  std::optional<std::filesystem::path> config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_file, "JSON run configuration file");
  cmd->add_option("--set", args.overrides,
                  "override a config value, e.g. --set model.cascades=2 "
                  "(repeatable; dotted keys; values parsed as JSON)");
}

RunConfig load_config(const CommonArgs& args) {
  return RunConfig::load(args.config_file, args.overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cine cardiac MRI reconstruction toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, rec_args;

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic cine phantom dataset");
  add_common(gen, gen_args);

  CLI::App* train = app.add_subcommand("train", "train a reconstruction model");
  add_common(train, train_args);

  CLI::App* eval = app.add_subcommand("eval", "evaluate checkpoints against a dataset split");
  add_common(eval, eval_args);

  CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct k-space container files");
  add_common(rec, rec_args);
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> references;
  rec->add_option("inputs", inputs, "k-space container files")->required();
  rec->add_option("--reference", references,
                  "reference image containers for error maps (one per input)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      cinerecon::harness::cmd_gen_data(load_config(gen_args));
    } else if (train->parsed()) {
      cinerecon::harness::cmd_train(load_config(train_args));
    } else if (eval->parsed()) {
      auto table = cinerecon::harness::cmd_eval(load_config(eval_args));
      std::cout << table.to_text();
    } else if (rec->parsed()) {
      cinerecon::harness::cmd_reconstruct(load_config(rec_args), inputs, references);
    }
  } catch (const cinerecon::Error& e) {
    nlohmann::json err{{"error", {{"category", e.category_name()}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"category", "internal"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
