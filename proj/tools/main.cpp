#include <iostream>

#include <CLI11.hpp>

#include "pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2 };

}  // namespace

int main(int argc, char** argv) {
  using namespace engage;
  CLI::App app{"Interpretable engagement analytics: ingest, correlate, train, topics, report"};
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  cli::Overrides overrides;
  std::uint64_t seed = 0;
  std::string out, slices, profile;
  unsigned threads = 0;
  app.add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides config)");
  auto* out_opt = app.add_option("--out", out, "Output directory (overrides config)");
  auto* slices_opt = app.add_option(
      "--slices", slices, "Comma list of Category/Tier/metric patterns, '*' wildcards, or 'all'");
  auto* profile_opt = app.add_option("--profile", profile, "Grid profile")
                          ->check(CLI::IsMember({"fast", "full"}));
  auto* threads_opt = app.add_option("--threads", threads, "Worker threads, 0 = all cores");
  app.fallthrough();
  app.require_subcommand(1, 1);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"ingest", "Validate, filter and persist posts with a per-slice manifest"},
      {"correlate", "Spearman feature rankings, likes-vs-comments and MANOVA"},
      {"train", "Grid-searched decision trees, evaluation and guidelines per slice"},
      {"topics", "Purity curves and hot-topic neighbourhoods per slice"},
      {"report", "Consolidated Markdown report"},
      {"run", "All of the above in order"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  if (*seed_opt) overrides.seed = seed;
  if (*out_opt) overrides.out = out;
  if (*slices_opt) overrides.slices = slices;
  if (*profile_opt) overrides.profile = profile;
  if (*threads_opt) overrides.threads = threads;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto config = cli::load_config(config_path, overrides);
    cli::RunLock lock(config.out);
    auto& log = std::cerr;
    if (command == "ingest" || command == "run") cli::cmd_ingest(config, log);
    if (command == "correlate" || command == "run") cli::cmd_correlate(config, log);
    if (command == "train" || command == "run") cli::cmd_train(config, log);
    if (command == "topics" || command == "run") cli::cmd_topics(config, log);
    if (command == "report" || command == "run") cli::cmd_report(config, log);
  } catch (const ValidationError& e) {
    std::cerr << "engage " << command << ": " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "engage " << command << ": " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
