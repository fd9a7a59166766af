// Command-line front end.
//
//   sulph <subcommand> [--scenario FILE] [--seed N] [--out DIR] [--ensemble K]
//         [--quiet] [--section.key VALUE ...]
//
// Exit status: 0 success, 1 failed acceptance criteria, 2 invalid input or
// invariant violation, 3 solver non-convergence.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "sulph/app.hpp"
#include "sulph/io.hpp"
#include "sulph/validation.hpp"

namespace {

int run_validate(const std::vector<int>& only, bool quiet) {
  sulph::validation::Suite suite;
  std::vector<int> ids = only;
  if (ids.empty())
    for (int id = 1; id <= sulph::validation::Suite::count; ++id) ids.push_back(id);
  int failed = 0;
  for (int id : ids) {
    const auto r = suite.run(id);
    if (!quiet || !r.passed) std::printf("%s\n", sulph::validation::line(r).c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  }
  if (!quiet) std::printf("%zu of %zu criteria passed\n", ids.size() - failed, ids.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Boundary-driven reaction-diffusion solver"};
  cli.fallthrough();
  cli.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> ensemble;
  bool quiet = false;
  cli.add_option("--scenario", scenario_path, "scenario file (key = value)")->check(CLI::ExistingFile);
  cli.add_option("--seed", seed, "master seed");
  cli.add_option("--out", out, "output directory");
  cli.add_option("--ensemble", ensemble, "ensemble size");
  cli.add_flag("--quiet", quiet, "print nothing on success");

  // One flag per dotted scenario key, applied after the file.
  std::map<std::string, std::optional<std::string>> overrides;
  auto* keys = cli.add_option_group("scenario keys", "override any scenario key");
  for (const auto& k : sulph::scenario_keys()) {
    if (k.name.find('.') == std::string::npos) continue;
    keys->add_option("--" + k.name, overrides[k.name], k.help);
  }

  const std::pair<const char*, sulph::app::Command> commands[] = {
      {"sample-boundary", sulph::app::Command::SampleBoundary},
      {"solve-heat", sulph::app::Command::SolveHeat},
      {"solve-system", sulph::app::Command::SolveSystem},
      {"solve-fd", sulph::app::Command::SolveFd},
      {"compare", sulph::app::Command::Compare},
  };
  const char* help[] = {"sample the boundary signal", "solve the boundary-driven heat problem",
                        "solve the coupled system (mild formulation)", "solve the coupled system by finite differences",
                        "mild vs finite-difference error norms"};
  std::optional<sulph::app::Command> chosen;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    const auto cmd = commands[i].second;
    cli.add_subcommand(commands[i].first, help[i])->callback([&chosen, cmd] { chosen = cmd; });
  }
  std::vector<int> only;
  auto* validate = cli.add_subcommand("validate", "run the acceptance suite");
  validate->add_option("--only", only, "criterion ids to run")->check(CLI::Range(1, sulph::validation::Suite::count));

  try {
    cli.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return 2;
  }

  try {
    if (validate->parsed()) return run_validate(only, quiet);

    sulph::ScenarioEntries entries;
    for (const auto& [name, value] : overrides)
      if (value) entries.emplace_back(name, *value);
    if (seed) entries.emplace_back("seed", std::to_string(*seed));
    if (ensemble) entries.emplace_back("ensemble", std::to_string(*ensemble));
    if (out) entries.emplace_back("outputs", *out);
    const auto sc = sulph::load_scenario(scenario_path, entries);
    const auto reports = sulph::app::run(*chosen, sc, sc.outputs);
    if (!quiet)
      for (const auto& r : reports) std::cout << r.str() << (reports.size() > 1 ? "\n" : "");
    return 0;
  } catch (const sulph::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
