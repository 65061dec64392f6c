// Command-line front end: simulate, encode, decode, stats, budget-sweep.
//
// Failures print one line "error code=<CODE> detail=<n> message=<text>" on
// stderr and exit with status 1 (2 for usage errors).

#include "faiv/error.hpp"
#include "faiv/image_io.hpp"
#include "faiv/rate.hpp"
#include "faiv/runtime.hpp"
#include "faiv/sim.hpp"
#include "faiv/wire.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

faiv::SimConfig loadConfig(const std::string& path) {
  if (path.empty()) return faiv::SimConfig{};
  return faiv::SimConfig::load(path);
}

void writeText(const std::filesystem::path& path, const std::string& text) {
  faiv::writeFileBytes(path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

void printError(std::string_view code, int64_t detail, const std::string& message) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error code=" << code << " detail=" << detail << " message=" << flat << '\n';
}

} // namespace

int main(int argc, char** argv) {
  faiv::configureAllocator();
  CLI::App app{"FAIVConf semantic video conferencing codec"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string in;
  std::string frames;
  std::string budgets;

  auto* simulate = app.add_subcommand("simulate", "Render, encode and decode a synthetic session");
  simulate->add_option("--config", config, "Key-value config file")->required();
  simulate->add_option("--out", out, "Output directory")->required();

  auto* encode = app.add_subcommand("encode", "Encode a directory of PNG frames");
  encode->add_option("--frames", frames, "Input frame directory")->required();
  encode->add_option("--config", config, "Key-value config file")->required();
  encode->add_option("--out", out, "Output .fvc file")->required();

  auto* decode = app.add_subcommand("decode", "Decode a .fvc bitstream to PNG frames");
  decode->add_option("--in", in, "Input .fvc file")->required();
  decode->add_option("--out", out, "Output frame directory")->required();
  decode->add_option("--config", config, "Key-value config file (avatar, codec)");

  auto* stats = app.add_subcommand("stats", "Rate summary of a .fvc bitstream");
  stats->add_option("--in", in, "Input .fvc file")->required();

  auto* sweep = app.add_subcommand("budget-sweep", "Quality at descending per-frame byte budgets");
  sweep->add_option("--config", config, "Key-value config file")->required();
  sweep->add_option("--budgets", budgets, "Descending budgets in bytes, e.g. 1000,500,150")
      ->required();
  sweep->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    printError("Usage", e.get_exit_code(), e.what());
    return 2;
  }

  try {
    if (*simulate) {
      const auto cfg = loadConfig(config);
      faiv::SimOptions options;
      options.keepOutputs = cfg.writeFrames;
      const auto result = faiv::runSimulation(cfg, options);
      faiv::writeSimulationArtifacts(cfg, result, out);
      std::cout << faiv::describeStats(result.stats);
    } else if (*encode) {
      const auto bytes = faiv::encodeFrames(frames, loadConfig(config));
      faiv::writeFileBytes(out, bytes);
      std::cout << faiv::describeStats(faiv::rateStatsOf(faiv::parseFvc(bytes)));
    } else if (*decode) {
      const auto bytes = faiv::readFileBytes(in);
      const auto count = faiv::decodeToFrames(bytes, loadConfig(config), out);
      std::cout << "frames=" << count << '\n';
    } else if (*stats) {
      const auto bytes = faiv::readFileBytes(in);
      std::cout << faiv::describeStats(faiv::rateStatsOf(faiv::parseFvc(bytes)));
    } else if (*sweep) {
      const auto rows = faiv::budgetSweep(loadConfig(config), faiv::parseBudgets(budgets));
      const std::string csv = faiv::budgetCsv(rows);
      writeText(out, csv);
      std::cout << csv;
    }
  } catch (const faiv::Error& e) {
    printError(faiv::errorCodeName(e.code()), e.detail(), e.what());
    return 1;
  } catch (const std::exception& e) {
    printError("Internal", -1, e.what());
    return 1;
  }
  return 0;
}
