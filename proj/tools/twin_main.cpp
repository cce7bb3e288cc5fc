// Digital-twin CLI: map a trajectory log over a terrain into platform
// commands, or validate a command file against the platform limits.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "lhop/config.hpp"
#include "lhop/trajlog.hpp"
#include "lhop/twin.hpp"

using namespace lhop;

int main(int argc, char** argv) {
  CLI::App app{"MATRIX digital-twin command mapper"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "produce tilt/treadmill commands");
  std::string terrain_path, trajectory_path, out = "commands.csv";
  run->add_option("--terrain", terrain_path, ".lhf heightfield")->required();
  run->add_option("--trajectory", trajectory_path, "trajectory log CSV")->required();
  run->add_option("--out", out, "output command file");

  auto* check = app.add_subcommand("check", "validate a command file");
  std::string commands_path;
  check->add_option("--commands", commands_path, "command file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      terrain::Heightfield field = terrain::load_lhf(terrain_path);
      std::vector<trajlog::StepRecord> records = trajlog::read_csv(trajectory_path);
      twin::TwinMapper mapper;
      std::vector<twin::TwinCommand> commands;
      commands.reserve(records.size());
      std::size_t saturated = 0;
      for (const auto& r : records) {
        twin::TwinCommand cmd = mapper.tick(r.state, field);
        if (cmd.saturated) ++saturated;
        commands.push_back(cmd);
      }
      std::string out_path = config::resolve_output(out);
      twin::write_commands(commands, out_path);
      std::printf("wrote %zu commands to %s (%zu saturated)\n", commands.size(),
                  out_path.c_str(), saturated);
    } else if (check->parsed()) {
      std::vector<twin::TwinCommand> commands = twin::read_commands(commands_path);
      twin::CommandCheck result = twin::check_commands(commands);
      if (result.ok) {
        std::printf("OK: %zu commands within limits\n", commands.size());
      } else {
        std::printf("FAIL: %zu violations\n%s", result.violations,
                    result.message.c_str());
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
