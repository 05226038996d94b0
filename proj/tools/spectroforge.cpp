// tools/spectroforge.cpp

// Copyright 2026 The SpectroForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end:
//   spectroforge featurize     --in DIR --out DIR
//   spectroforge augment       --in DIR --out DIR --preset NAME --seed N --copies N
//   spectroforge inspect       --in WAV --frame N [--format json|csv]
//   spectroforge formant-stats --in DIR_A --in DIR_B
// Exit status is 0 when the run completes (per-file failures are recorded in
// the manifest) and 1 for invalid configuration or input.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spectroforge/spectroforge.hpp"

namespace sf = spectroforge;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> copies;
  std::optional<int> jobs;
  std::vector<std::string> inputs;
  std::string out;
  bool no_mask = false;
  std::size_t frame = 0;
  std::string format = "json";
};

sf::AugmentConfig resolve_config(const Options& o) {
  sf::AugmentConfig c;
  c.jobs = sf::jobs_from_environment();
  if (!o.config_path.empty()) c = sf::load_config(o.config_path, c);
  if (o.preset) c.preset_name = *o.preset;
  if (o.seed) c.global_seed = *o.seed;
  if (o.copies) c.augment_copies = *o.copies;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.no_mask) c.mask = sf::MaskSpec::none();
  sf::validate(c);
  return c;
}

void summarize(const sf::CorpusManifest& m, const std::string& out_dir) {
  std::cerr << "wrote " << m.count(sf::EntryStatus::kOk) << " archives to " << out_dir << " ("
            << m.count(sf::EntryStatus::kSkippedDegenerate) << " skipped-degenerate, "
            << m.count(sf::EntryStatus::kError) << " errors)\n";
  for (const auto& e : m.entries) {
    if (e.status == sf::EntryStatus::kError) std::cerr << "  " << e.utterance_id << ": " << e.message << '\n';
  }
}

/// Writes to --out when given, stdout otherwise.
template <typename Fn>
void emit(const std::string& out, Fn&& write) {
  if (out.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw sf::IoError("cannot open " + out + " for writing");
  write(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Children-like spectral augmentation for speech features"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config file (flags override it)")->check(CLI::ExistingFile);
    sub->add_option("--preset", o.preset, "augmentation preset");
    sub->add_option("--seed", o.seed, "global seed");
    sub->add_option("--jobs", o.jobs, "worker threads (default: SPECTROFORGE_JOBS or 1)");
  };

  CLI::App* featurize = app.add_subcommand("featurize", "plain log-mel features for a directory of WAVs");
  add_common(featurize);
  featurize->add_option("--in", o.inputs, "input directory")->required()->expected(1);
  featurize->add_option("--out", o.out, "output directory")->required();

  CLI::App* augment = app.add_subcommand("augment", "perturbed log-mel features for a directory of WAVs");
  add_common(augment);
  augment->add_option("--in", o.inputs, "input directory")->required()->expected(1);
  augment->add_option("--out", o.out, "output directory")->required();
  augment->add_option("--copies", o.copies, "augmented copies per utterance");
  augment->add_flag("--no-mask", o.no_mask, "disable frequency/time masking");

  CLI::App* inspect = app.add_subcommand("inspect", "dump the augmentation chain for one frame");
  add_common(inspect);
  inspect->add_option("--in", o.inputs, "WAV file")->required()->expected(1);
  inspect->add_option("--frame", o.frame, "frame index")->required();
  inspect->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  inspect->add_option("--out", o.out, "report file (default stdout)");

  CLI::App* stats = app.add_subcommand("formant-stats", "compare F1-F3 statistics of two corpora");
  add_common(stats);
  stats->add_option("--in", o.inputs, "corpus directories A then B")->required()->expected(2);
  stats->add_option("--out", o.out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const sf::AugmentConfig config = resolve_config(o);
    if (featurize->parsed()) {
      summarize(sf::run_featurize(config, o.inputs.at(0), o.out), o.out);
    } else if (augment->parsed()) {
      summarize(sf::run_augment(config, o.inputs.at(0), o.out), o.out);
    } else if (inspect->parsed()) {
      const sf::InspectReport r = sf::run_inspect(config, sf::load_audio(o.inputs.at(0)), o.frame);
      emit(o.out, [&](std::ostream& os) {
        if (o.format == "csv") {
          sf::write_csv(os, r);
        } else {
          os << sf::to_json(r).dump(2) << '\n';
        }
      });
    } else if (stats->parsed()) {
      const sf::FormantStatsTable t = sf::run_formant_stats(config, o.inputs.at(0), o.inputs.at(1));
      emit(o.out, [&](std::ostream& os) { sf::write_csv(os, t); });
    }
  } catch (const std::exception& e) {
    std::cerr << "spectroforge: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
