// genbound <experiment> --config <path> [--out <path>] [--format csv|json] [--seed <int>]
//
// Exit status: 0 when every row passes, 1 when any row fails, 2 on config or
// I/O errors.

#include "genbound/experiments.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <string>
#include <vector>

namespace {

int run_cli(genbound::ExperimentKind kind, const std::string& config_path,
            const std::string& out_override, const std::string& format_override,
            bool seed_given, unsigned long long seed_override) {
  genbound::ExperimentConfig config = genbound::load_config(config_path, kind);
  if (!out_override.empty()) config.output_path = out_override;
  if (!format_override.empty()) config.format = genbound::parse_format(format_override);
  if (seed_given) config.seeds = {static_cast<std::uint64_t>(seed_override)};

  const std::vector<genbound::ResultRow> rows = genbound::run(config);
  if (config.output_path.empty())
    std::fputs(genbound::emit_string(rows, config.format).c_str(), stdout);

  std::size_t failed = 0;
  for (const genbound::ResultRow& row : rows) failed += row.pass ? 0 : 1;
  std::fprintf(stderr, "%s: %zu rows, %zu failed%s%s\n", genbound::experiment_name(kind),
               rows.size(), failed, config.output_path.empty() ? "" : ", wrote ",
               config.output_path.c_str());
  if (failed) {
    std::size_t shown = 0;
    for (const genbound::ResultRow& row : rows) {
      if (row.pass || shown >= 10) continue;
      std::string where;
      for (const auto& [key, value] : row.params) where += " " + key + "=" + value;
      std::fprintf(stderr, "  FAIL%s measured=%s theoretical=%s\n", where.c_str(),
                   genbound::format_double(row.measured).c_str(),
                   genbound::format_double(row.theoretical).c_str());
      ++shown;
    }
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-dependent covering and Rademacher bound workbench"};
  app.require_subcommand(1);

  std::string config_path, out_override, format_override;
  unsigned long long seed_override = 0;

  const std::pair<const char*, const char*> suites[] = {
      {"bounds_eval", "evaluate the closed-form covering bounds over a grid"},
      {"covering_verify", "empirical greedy covers vs closed forms at eps/2"},
      {"maurey_verify", "random sparsifications vs the Maurey error guarantee"},
      {"rademacher_verify", "Monte-Carlo estimates vs the attention-class bounds"},
      {"decay_study", "decay/growth rates of the closed-form bounds"},
      {"compare_trauger", "our bound vs the sequence-length-independent comparator"},
      {"gap_study", "train/holdout gap vs the two-sided deviation bound"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, description] : suites) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_override, "output path (overrides the config)");
    sub->add_option("--format", format_override, "csv or json (overrides the config)");
    sub->add_option("--seed", seed_override, "replace the config seed list with one seed");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      return run_cli(genbound::parse_experiment(suites[i].first), config_path, out_override,
                     format_override, subs[i]->count("--seed") > 0, seed_override);
    }
    std::fputs("no experiment selected\n", stderr);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
