#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "floodtwin/error.hpp"
#include "floodtwin/pipeline.hpp"

using namespace floodtwin;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

using Command = void (*)(const RunConfig&, const CommandOptions&, std::ostream&);

std::string check_date(const std::string& s) {
  static const std::regex date(R"(\d{4}-\d{2}-\d{2})");
  if (!std::regex_match(s, date)) return "issue date must be YYYY-MM-DD";
  try {
    parse_iso8601(s);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"floodtwin: hazard datacube, ensemble flood forecasts and particle-filter assimilation"};
  app.require_subcommand(1, 1);

  const std::vector<std::pair<std::string, std::pair<std::string, Command>>> commands = {
      {"build-datacube", {"run the scenario ladder through the solver and store the datacube", cmd_build_datacube}},
      {"forecast", {"open-loop inundation forecast from an ensemble", cmd_forecast}},
      {"assimilate", {"particle-filter forecast conditioned on flood-probability maps", cmd_assimilate}},
      {"verify", {"score runs against gauge series and observed extents", cmd_verify}},
      {"calibrate", {"Latin hypercube calibration of the solver parameters", cmd_calibrate}},
      {"twin", {"write a synthetic identical-twin dataset", cmd_twin}},
  };

  std::string config;
  std::optional<std::string> issue_date;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::vector<std::pair<CLI::App*, Command>> handlers;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config, "run configuration JSON")->required();
    sub->add_option("--issue-date", issue_date, "forecast issue date, YYYY-MM-DD")->check(CLI::Validator(check_date, "DATE"));
    sub->add_option("--seed", seed, "seed of the run's random generator");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    handlers.emplace_back(sub, entry.second);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  CommandOptions options;
  options.issue_date = issue_date;
  options.seed = seed;
  if (out) options.out = *out;
  options.threads = threads;
  try {
    const RunConfig cfg = load_run_config(config);
    for (const auto& [sub, run] : handlers)
      if (sub->parsed()) run(cfg, options, std::cout);
  } catch (const NumericalError& e) {
    std::cerr << "floodtwin: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "floodtwin: error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
