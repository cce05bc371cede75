// Command line front end: synth, preprocess, profile, attack, eval, ablate
// and end2end over the file formats of the library.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wasmleak/config.h"
#include "wasmleak/error.h"
#include "wasmleak/metrics.h"
#include "wasmleak/pipeline.h"

namespace {

using wasmleak::ExitCode;
namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
};

wasmleak::RunConfig ResolveConfig(const Globals& g) {
  wasmleak::RunConfig config;
  if (!g.config_path.empty()) config = wasmleak::RunConfig::Load(g.config_path);
  if (g.seed) config.SetSeed(*g.seed);
  for (const auto& kv : g.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw wasmleak::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    config.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.Validate();
  return config;
}

void PrintWritten(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

int EvalCounts(const std::string& counts) {
  std::vector<size_t> v;
  size_t start = 0;
  while (start <= counts.size()) {
    size_t comma = counts.find(',', start);
    if (comma == std::string::npos) comma = counts.size();
    const std::string item = counts.substr(start, comma - start);
    try {
      size_t used = 0;
      v.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw wasmleak::ConfigError("--counts expects N,E,M,I integers");
    }
    start = comma + 1;
  }
  if (v.size() != 4) throw wasmleak::ConfigError("--counts expects N,E,M,I");
  const double r = wasmleak::Recall(v[0], v[1], v[2], v[3]);
  std::printf("regions = %zu\nerrors = %zu\nmisses = %zu\ninsertions = %zu\n"
              "recall = %.6f\nrecall_percent = %.3f\n",
              v[0], v[1], v[2], v[3], r, 100.0 * r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opcode recovery from page-fault side-channel traces of a Wasm "
               "interpreter"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration file (key = value)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Layout, noise and mitigation seed");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--set", g.overrides, "Override one config key (key=value)");
  app.fallthrough();

  auto* synth = app.add_subcommand("synth", "Interpret a module and emit its trace");
  std::string module;
  bool markers = false;
  std::optional<uint64_t> steps;
  synth->add_option("--module", module, "Built-in module name or module file");
  synth->add_flag("--markers", markers,
                  "Profiling run: stock handlers and marker writes");
  synth->add_option("--steps", steps, "Retired-opcode limit");

  std::string trace_csv;
  std::string truth_csv;
  std::string db_file;
  std::string predictions_csv;

  auto* pre = app.add_subcommand("preprocess", "Detect pages and segment a trace");
  pre->add_option("--trace", trace_csv, "Trace CSV")->required();

  auto* profile = app.add_subcommand("profile", "Build the fingerprint database");
  std::string marker_page;
  profile->add_option("--trace", trace_csv, "Profiling trace CSV")->required();
  profile->add_option("--truth", truth_csv, "Profiling truth CSV")->required();
  profile->add_option("--marker-page", marker_page,
                      "Marker page frame (hex); default from the trace header");

  auto* attack = app.add_subcommand("attack", "Match a victim trace");
  std::string channels;
  attack->add_option("--trace", trace_csv, "Victim trace CSV")->required();
  attack->add_option("--db", db_file, "Fingerprint database")->required();
  attack->add_option("--channels", channels, "Channel list, e.g. all,-latency");

  auto* eval = app.add_subcommand("eval", "Score predictions against truth");
  bool strict = false;
  bool force = false;
  std::string counts;
  eval->add_option("--predictions", predictions_csv, "Predictions CSV");
  eval->add_option("--truth", truth_csv, "Truth CSV");
  eval->add_flag("--strict", strict, "Compare opcodes instead of families");
  eval->add_flag("--force", force, "Compare artifacts with differing layout seeds");
  eval->add_option("--counts", counts, "Compute recall from N,E,M,I directly");

  auto* ablate = app.add_subcommand("ablate", "Recall per channel subset");
  std::string subsets;
  ablate->add_option("--trace", trace_csv, "Victim trace CSV")->required();
  ablate->add_option("--truth", truth_csv, "Victim truth CSV")->required();
  ablate->add_option("--db", db_file, "Fingerprint database")->required();
  ablate->add_option("--subsets", subsets,
                     "Subsets separated by ';', e.g. \"all;all,-latency\"");

  auto* e2e = app.add_subcommand("end2end", "Profile, attack and evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kConfig);
  }

  try {
    wasmleak::RunConfig config = ResolveConfig(g);
    const fs::path out(g.out_dir);
    if (synth->parsed()) {
      if (!module.empty()) {
        (markers ? config.profile : config.victim) = module;
      }
      if (steps) (markers ? config.profile_steps : config.victim_steps) = *steps;
      config.Validate();
      PrintWritten(wasmleak::CmdSynth(config, markers, out));
    } else if (pre->parsed()) {
      PrintWritten(wasmleak::CmdPreprocess(config, trace_csv, out));
    } else if (profile->parsed()) {
      std::optional<wasmleak::PageFrame> page;
      if (!marker_page.empty()) page = wasmleak::ParsePageFrame(marker_page);
      PrintWritten(wasmleak::CmdProfile(config, trace_csv, truth_csv, page, out));
    } else if (attack->parsed()) {
      if (!channels.empty()) config.Set("match.channels", channels);
      config.Validate();
      PrintWritten(wasmleak::CmdAttack(config, trace_csv, db_file, out));
    } else if (eval->parsed()) {
      if (!counts.empty()) return EvalCounts(counts);
      if (predictions_csv.empty() || truth_csv.empty()) {
        throw wasmleak::ConfigError("eval needs --predictions and --truth, or --counts");
      }
      if (strict) config.strict = true;
      auto [report, files] =
          wasmleak::CmdEval(config, predictions_csv, truth_csv, force, out);
      std::cout << report;
      PrintWritten(files);
    } else if (ablate->parsed()) {
      if (!subsets.empty()) config.ablate_subsets = subsets;
      std::vector<std::string> dups;
      const auto files =
          wasmleak::CmdAblate(config, trace_csv, truth_csv, db_file, out, &dups);
      for (const auto& d : dups) {
        std::cerr << "warning: duplicate channel subset '" << d << "' ignored\n";
      }
      PrintWritten(files);
    } else if (e2e->parsed()) {
      const auto files = wasmleak::CmdEnd2End(config, out);
      std::cout << wasmleak::ReadFile(out / "report.txt");
      PrintWritten(files);
    }
  } catch (const wasmleak::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kPrecondition);
  }
  return 0;
}
