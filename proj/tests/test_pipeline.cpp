// tests/test_pipeline.cpp

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

#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "spectroforge/spectroforge.hpp"
#include "support/testing.hpp"

using namespace spectroforge;
using Catch::Approx;

namespace {

std::vector<sftest::Resonator> scaled(const std::vector<sftest::Resonator>& rs, double s) {
  std::vector<sftest::Resonator> out = rs;
  for (auto& r : out) r.frequency_hz *= s;
  return out;
}

/// n half-second vowels with different pitch and a glottal source tilt.
void write_corpus(const std::filesystem::path& dir, int n, double formant_scale = 1.0) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    const auto rs = scaled(i % 2 ? sftest::kVowel4 : sftest::kVowelA, formant_scale);
    char name[32];
    std::snprintf(name, sizeof name, "utt%02d.wav", i);
    sftest::write_wav(dir / name, sftest::synthesize_vowel(rs, 16000.0, 8000, 97.0 + 13.0 * i,
                                                           sftest::Excitation::kPulseTrain, 1 + i, 0.5, 0.97));
  }
}

AugmentConfig no_mask(std::string preset) {
  AugmentConfig c;
  c.preset_name = std::move(preset);
  c.mask = MaskSpec::none();
  return c;
}

AudioClip clip_of(std::vector<double> samples, std::string id = "clip") {
  AudioClip c;
  c.samples = std::move(samples);
  c.sample_rate = 16000;
  c.source_id = std::move(id);
  return c;
}

}  // namespace

TEST_CASE("featurize writes one archive per WAV", "[pipeline]") {
  sftest::TempDir dir;
  write_corpus(dir / "in", 3);
  const CorpusManifest m = run_featurize(AugmentConfig{}, dir / "in", dir / "out");
  REQUIRE(m.entries.size() == 3);
  CHECK(m.count(EntryStatus::kOk) == 3);
  for (const ManifestEntry& e : m.entries) {
    const FeatureMatrix fm = read_features(dir / "out" / e.feature_path);
    CHECK(fm.n_filters == 80);
    CHECK(fm.n_frames == 48);  // (8000 - 400) / 160 + 1
    CHECK(fm.n_frames == e.n_frames);
    CHECK(fm.meta.source_id == e.utterance_id);
    CHECK(std::all_of(fm.values.begin(), fm.values.end(), [](float v) { return std::isfinite(v); }));
  }
  CHECK(read_manifest(dir / "out" / kManifestName).entries.size() == 3);
}

TEST_CASE("a corrupt file is recorded and the run continues", "[pipeline]") {
  sftest::TempDir dir;
  write_corpus(dir / "in", 2);
  sftest::write_bytes(dir / "in" / "bad.wav", {'R', 'I', 'F', 'F', 0, 0});
  const CorpusManifest m = run_featurize(AugmentConfig{}, dir / "in", dir / "out");
  CHECK(m.count(EntryStatus::kOk) == 2);
  CHECK(m.count(EntryStatus::kError) == 1);
  const ManifestEntry& bad = m.entries.front();  // "bad" sorts first
  CHECK(bad.utterance_id == "bad");
  CHECK(bad.status == EntryStatus::kError);
  CHECK(bad.feature_path.empty());
  CHECK_FALSE(bad.message.empty());
}

TEST_CASE("corpus listing", "[pipeline]") {
  sftest::TempDir dir;
  CHECK_THROWS_AS(list_wavs(dir.path()), InvalidArgument);
  CHECK_THROWS_AS(list_wavs(dir / "missing"), IoError);
  sftest::write_wav(dir / "b.WAV", {0.0});
  sftest::write_wav(dir / "a.wav", {0.0});
  sftest::write_bytes(dir / "notes.txt", {'x'});
  std::filesystem::create_directories(dir / "sub");
  sftest::write_wav(dir / "sub" / "c.wav", {0.0});
  const auto files = list_wavs(dir.path());
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.wav");
  CHECK(files[1].filename() == "b.WAV");
}

TEST_CASE("runs are byte-identical across repeats and job counts", "[pipeline]") {
  sftest::TempDir dir;
  write_corpus(dir / "in", 4);
  AugmentConfig c;
  c.global_seed = 11;
  c.augment_copies = 2;
  run_augment(c, dir / "in", dir / "a");
  c.jobs = 3;
  run_augment(c, dir / "in", dir / "b");
  for (const auto& de : std::filesystem::directory_iterator(dir / "a")) {
    const auto name = de.path().filename();
    INFO(name);
    CHECK(sftest::read_bytes(de.path()) == sftest::read_bytes(dir / "b" / name));
  }
  run_featurize(c, dir / "in", dir / "f1");
  run_featurize(c, dir / "in", dir / "f2");
  CHECK(sftest::read_bytes(dir / "f1" / "utt00.sfg") == sftest::read_bytes(dir / "f2" / "utt00.sfg"));
}

TEST_CASE("augment records factors inside the preset ranges", "[pipeline]") {
  sftest::TempDir dir;
  write_corpus(dir / "in", 3);
  AugmentConfig c;  // lpc-swp-exp3+fep
  c.global_seed = 5;
  const CorpusManifest m = run_augment(c, dir / "in", dir / "out");
  REQUIRE(m.count(EntryStatus::kOk) == 3);
  const Preset& p = find_preset("lpc-swp-exp3+fep");
  for (const ManifestEntry& e : m.entries) {
    CHECK(e.utterance_id.ends_with("-aug0"));
    CHECK(e.seed == utterance_seed(5, e.utterance_id.substr(0, 5), 0));
    REQUIRE(e.alphas.size() == 4);
    REQUIRE(e.betas.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK((e.alphas[k] >= p.alpha[k].lo && e.alphas[k] <= p.alpha[k].hi));
      CHECK((e.betas[k] >= 0.7 && e.betas[k] <= 1.3));
    }
    const FeatureMatrix fm = read_features(dir / "out" / e.feature_path);
    CHECK(fm.meta.alphas == e.alphas);
    CHECK(fm.meta.betas == e.betas);
    CHECK(fm.meta.rng_seed == e.seed);
    CHECK(fm.meta.preset_name == "lpc-swp-exp3+fep");
  }
}

TEST_CASE("identity preset reproduces plain features", "[pipeline]") {
  sftest::TempDir dir;
  write_corpus(dir / "in", 3);
  const AugmentConfig c = no_mask("identity");
  run_featurize(c, dir / "in", dir / "plain");
  run_augment(c, dir / "in", dir / "aug");
  for (const char* id : {"utt00", "utt01", "utt02"}) {
    const FeatureMatrix a = read_features(dir / "plain" / (std::string(id) + ".sfg"));
    const FeatureMatrix b = read_features(dir / "aug" / (std::string(id) + "-aug0.sfg"));
    REQUIRE(a.values.size() == b.values.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(a.values[i]) - b.values[i]));
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("copies of one utterance differ", "[pipeline]") {
  sftest::TempDir dir;
  write_corpus(dir / "in", 1);
  AugmentConfig c = no_mask("lpc-swp-exp3");
  c.augment_copies = 2;
  const CorpusManifest m = run_augment(c, dir / "in", dir / "out");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].alphas != m.entries[1].alphas);
  CHECK(read_features(dir / "out" / "utt00-aug0.sfg").values != read_features(dir / "out" / "utt00-aug1.sfg").values);
  CHECK(m.entries[1].copy_index == 1);
}

TEST_CASE("masking only touches cells within the configured bound", "[pipeline]") {
  const FrontEnd masked(AugmentConfig{});
  const FrontEnd plain([] {
    AugmentConfig c;
    c.mask = MaskSpec::none();
    return c;
  }());
  const AudioClip clip = clip_of(sftest::synthesize_vowel(sftest::kVowelA, 16000.0, 16000));
  const FeatureMatrix a = augment_clip(clip, plain, 9).features;
  const FeatureMatrix b = augment_clip(clip, masked, 9).features;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) changed += a.values[i] != b.values[i];
  CHECK(changed > 0);
  CHECK(changed <= 2 * 30 * a.n_frames + 2 * 40 * a.n_filters);
}

TEST_CASE("short clips get masks clamped to their axes", "[pipeline]") {
  const FrontEnd fe(AugmentConfig{});
  const AudioClip clip = clip_of(sftest::synthesize_vowel(sftest::kVowelA, 16000.0, 1000));
  const AugmentedClip a = augment_clip(clip, fe, 1);
  CHECK(a.features.n_frames == 4);
}

TEST_CASE("degenerate input", "[pipeline]") {
  sftest::TempDir dir;
  std::filesystem::create_directories(dir / "in");
  sftest::write_wav(dir / "in" / "silence.wav", std::vector<double>(16000, 0.0));
  sftest::write_wav(dir / "in" / "tiny.wav", {0.5});
  std::vector<double> clipped = sftest::synthesize_vowel(sftest::kVowelA, 16000.0, 16000, 120.0,
                                                         sftest::Excitation::kPulseTrain, 1, 8.0);
  sftest::write_wav(dir / "in" / "clipped.wav", clipped);

  AugmentConfig c;
  const CorpusManifest m = run_augment(c, dir / "in", dir / "out");
  REQUIRE(m.entries.size() == 3);
  const auto find = [&](const std::string& id) {
    return *std::find_if(m.entries.begin(), m.entries.end(),
                         [&](const ManifestEntry& e) { return e.utterance_id == id + "-aug0"; });
  };
  CHECK(find("silence").status == EntryStatus::kSkippedDegenerate);
  CHECK(find("silence").degenerate_frames == 98);
  CHECK(find("silence").feature_path.empty());
  CHECK(find("tiny").status == EntryStatus::kError);
  CHECK(find("clipped").status == EntryStatus::kOk);

  // Plain features of silence are the log floor everywhere.
  const CorpusManifest f = run_featurize(c, dir / "in", dir / "plain");
  const FeatureMatrix s = read_features(dir / "plain" / "silence.sfg");
  CHECK(std::all_of(s.values.begin(), s.values.end(),
                    [](float v) { return v == static_cast<float>(std::log(kLogEnergyFloor)); }));
}

TEST_CASE("per-frame factor draws", "[pipeline]") {
  AugmentConfig c = no_mask("lpc-swp-exp3");
  c.factor_granularity = FactorGranularity::kPerFrame;
  const FrontEnd fe(c);
  const AudioClip clip = clip_of(sftest::synthesize_vowel(sftest::kVowelA, 16000.0, 4000));
  const AugmentedClip a = augment_clip(clip, fe, 3);
  CHECK(a.features.meta.alphas.empty());
  CHECK(augment_clip(clip, fe, 3).features.values == a.features.values);

  const InspectReport r0 = run_inspect(c, clip, 0);
  const InspectReport r1 = run_inspect(c, clip, 1);
  CHECK(r0.factors.alphas != r1.factors.alphas);
}

TEST_CASE("sample rate mismatch is an error", "[pipeline]") {
  const FrontEnd fe(AugmentConfig{});
  AudioClip clip = clip_of(std::vector<double>(8000, 0.1));
  clip.sample_rate = 8000;
  CHECK_THROWS_AS(featurize_clip(clip, fe), InvalidArgument);
}

TEST_CASE("inspect", "[pipeline]") {
  const AudioClip vowel = clip_of(sftest::synthesize_vowel(sftest::kVowel4, 16000.0, 8000), "v4");

  SECTION("four-resonator vowel gives four segments and four envelope peaks") {
    AugmentConfig c = no_mask("lpc-swp-exp3");
    c.pre_emphasis = 0.0;
    const InspectReport r = run_inspect(c, vowel, 20);
    CHECK_FALSE(r.degenerate);
    CHECK(r.segment_count() == 4);
    CHECK(r.envelope_peaks_hz.size() == 4);
    CHECK(r.warped_boundaries_hz.size() == 5);
    CHECK(r.envelope.size() == 257);
    CHECK(r.modified_spectrum.size() == 257);
    CHECK(r.factors.rng_seed == utterance_seed(0, "v4", 0));
  }
  SECTION("identity leaves the envelope unchanged") {
    const InspectReport r = run_inspect(no_mask("identity"), vowel, 10);
    CHECK(r.warped_envelope == r.envelope);
    CHECK(r.fep_envelope == r.envelope);
    for (const WarpAnchor& a : r.anchors) CHECK(a.source_hz == a.target_hz);
  }
  SECTION("silence is reported as degenerate") {
    const InspectReport r = run_inspect(AugmentConfig{}, clip_of(std::vector<double>(4000, 0.0)), 3);
    CHECK(r.degenerate);
    CHECK(r.envelope.empty());
    CHECK(r.raw_fft.size() == 257);
  }
  SECTION("frame index out of range") {
    CHECK_THROWS_AS(run_inspect(AugmentConfig{}, vowel, 48), InvalidArgument);
  }
  SECTION("serialization") {
    const InspectReport r = run_inspect(AugmentConfig{}, vowel, 5);
    const auto j = to_json(r);
    CHECK(j.at("source_id") == "v4");
    CHECK(j.at("alphas").size() == 4);
    std::ostringstream csv;
    write_csv(csv, r);
    CHECK(csv.str().starts_with("bin,frequency_hz,"));
    CHECK(csv.str().find("\r\n") != std::string::npos);
  }
  SECTION("vtlp still plots an LPC envelope") {
    const InspectReport r = run_inspect(no_mask("vtlp"), vowel, 10);
    CHECK(r.envelope.size() == 257);
    CHECK(r.boundaries_hz == std::vector<double>{0.0, 6400.0});
  }
}

TEST_CASE("formant statistics", "[pipeline]") {
  sftest::TempDir dir;
  const AugmentConfig c;

  SECTION("a corpus compared with itself has ratio one") {
    write_corpus(dir / "a", 4);
    const FormantStatsTable t = run_formant_stats(c, dir / "a", dir / "a");
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(t.ratio(k) == 1.0);
      CHECK(t.a.formants[k].n > 0);
    }
  }
  SECTION("formants scaled by 1.25 give ratio 1.25") {
    write_corpus(dir / "a", 8, 1.0);
    write_corpus(dir / "b", 8, 1.25);
    const FormantStatsTable t = run_formant_stats(c, dir / "a", dir / "b");
    for (std::size_t k = 0; k < 3; ++k) {
      INFO("F" << k + 1 << " a " << t.a.formants[k].mean << " b " << t.b.formants[k].mean);
      CHECK(t.ratio(k) == Approx(1.25).margin(0.03));
    }
    std::ostringstream csv;
    write_csv(csv, t);
    CHECK(csv.str().starts_with(
        "formant,a_mean_hz,a_std_hz,a_frames,b_mean_hz,b_std_hz,b_frames,ratio_b_over_a\r\n"));
  }
  SECTION("a silent corpus has no voiced frames") {
    std::filesystem::create_directories(dir / "s");
    sftest::write_wav(dir / "s" / "z.wav", std::vector<double>(8000, 0.0));
    CHECK_THROWS_AS(run_formant_stats(c, dir / "s", dir / "s"), InvalidArgument);
  }
}

TEST_CASE("running statistics", "[pipeline]") {
  RunningStats s;
  for (const double x : {2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) s.add(x);
  CHECK(s.mean == 5.0);
  CHECK(s.stddev() == Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("configuration", "[pipeline]") {
  SECTION("defaults are valid") { CHECK_NOTHROW(validate(AugmentConfig{})); }
  SECTION("JSON overlay") {
    const auto j = nlohmann::json::parse(R"({"preset": "vtlp", "n_mel": 40, "global_seed": 18446744073709551615,
                                             "mask": {"n_time_masks": 0}, "window": "hann"})");
    const AugmentConfig c = config_from_json(j);
    CHECK(c.preset_name == "vtlp");
    CHECK(c.n_mel == 40);
    CHECK(c.global_seed == 18446744073709551615ULL);
    CHECK(c.mask.n_time_masks == 0);
    CHECK(c.mask.n_freq_masks == 2);
    CHECK(c.window == WindowKind::kHann);
  }
  SECTION("round trip through to_json") {
    AugmentConfig c;
    c.preset_name = "fep";
    c.factor_granularity = FactorGranularity::kPerFrame;
    c.jobs = 4;
    const AugmentConfig back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
    CHECK(to_json(back) == to_json(c));
  }
  SECTION("invalid values") {
    const auto bad = [](const char* text) { return validate(config_from_json(nlohmann::json::parse(text))); };
    CHECK_THROWS_AS(bad(R"({"preset_name": "nope"})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"fft_size": 500})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"fft_size": 256})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"pre_emphasis": 1.0})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"hop_ms": 30})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"jobs": 0})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"n_mel": "many"})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"colour": "red"})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"({"window": "kaiser"})"), InvalidArgument);
    CHECK_THROWS_AS(bad(R"([1, 2])"), InvalidArgument);
  }
  SECTION("config files") {
    sftest::TempDir dir;
    std::ofstream(dir / "c.json") << R"({"lpc_order": 12})";
    CHECK(load_config(dir / "c.json").lpc_order == 12);
    std::ofstream(dir / "broken.json") << "{ nope";
    CHECK_THROWS_AS(load_config(dir / "broken.json"), InvalidArgument);
    CHECK_THROWS_AS(load_config(dir / "absent.json"), IoError);
  }
  SECTION("job count from the environment") {
    ::setenv("SPECTROFORGE_JOBS", "3", 1);
    CHECK(jobs_from_environment() == 3);
    ::setenv("SPECTROFORGE_JOBS", "zero", 1);
    CHECK(jobs_from_environment() == 1);
    ::unsetenv("SPECTROFORGE_JOBS");
    CHECK(jobs_from_environment() == 1);
  }
}

TEST_CASE("manifest round trip", "[pipeline]") {
  sftest::TempDir dir;
  CorpusManifest m;
  ManifestEntry e;
  e.utterance_id = "a-aug1";
  e.audio_path = "a.wav";
  e.feature_path = "a-aug1.sfg";
  e.preset = "fep";
  e.seed = 0xDEADBEEFCAFEF00DULL;
  e.copy_index = 1;
  e.alphas = {1, 1, 1, 1};
  e.betas = {0.7000000000000001, 1.2, 0.9, 1.3};
  e.n_frames = 98;
  m.entries.push_back(e);
  e.status = EntryStatus::kError;
  e.message = "line one\n\"two\"";
  m.entries.push_back(e);
  write_manifest(m, dir / "m.jsonl");
  const CorpusManifest back = read_manifest(dir / "m.jsonl");
  REQUIRE(back.entries.size() == 2);
  CHECK(back.entries[0].betas == m.entries[0].betas);
  CHECK(back.entries[0].seed == e.seed);
  CHECK(back.entries[1].status == EntryStatus::kError);
  CHECK(back.entries[1].message == e.message);
  CHECK(std::count(std::istreambuf_iterator<char>(std::ifstream(dir / "m.jsonl").rdbuf()), {}, '\n') == 2);
}

TEST_CASE("csv quoting", "[pipeline]") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  std::ostringstream os;
  write_csv_row(os, {"x", "y,z"});
  CHECK(os.str() == "x,\"y,z\"\r\n");
}

TEST_CASE("parallel_for visits every index once", "[pipeline]") {
  for (const int jobs : {1, 2, 7}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i].fetch_add(1); });
    CHECK(std::all_of(hits.begin(), hits.end(), [](const std::atomic<int>& h) { return h.load() == 1; }));
  }
}
