#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "exwarp/commands.hpp"
#include "exwarp/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Temporal supersampling simulator: scene generation, scheduling, training"};
  app.require_subcommand(1);

  exwarp::CommandOptions options;
  std::string config_path, out_path, policy;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (nested or dotted keys)");
    cmd->add_option("--seed", seed, "Master seed (overrides the config)");
    cmd->add_option("--out", out_path, "Output directory (overrides the config)");
    cmd->add_option("--policy", policy, "S1..S6, oracle, or trained:<checkpoint>");
  };
  CLI::App* generate = app.add_subcommand("generate", "Render scene families to dataset directories");
  CLI::App* run = app.add_subcommand("run", "Run one policy and write traces and reports");
  CLI::App* train = app.add_subcommand("train", "Train the Q-network and write a checkpoint");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Leave-one-family-out cross-validation");
  CLI::App* compare = app.add_subcommand("compare", "Compare policies across scenes");
  for (CLI::App* cmd : {generate, run, train, evaluate, compare}) add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (!config_path.empty()) options.config = config_path;
    if (cmd->count("--seed") > 0) options.seed = seed;
    if (!out_path.empty()) options.out = out_path;
    if (!policy.empty()) options.policy = policy;
    const exwarp::RunConfig config = exwarp::resolve_config(options);

    if (cmd == generate) exwarp::cmd_generate(config);
    else if (cmd == run) exwarp::cmd_run(config);
    else if (cmd == train) exwarp::cmd_train(config);
    else if (cmd == evaluate) exwarp::cmd_evaluate(config);
    else exwarp::cmd_compare(config);
    std::cout << "wrote " << config.out.string() << "\n";
    return 0;
  } catch (const exwarp::ValidationError& e) {
    std::cerr << "config error:\n";
    for (const std::string& v : e.violations()) std::cerr << "  " << v << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
