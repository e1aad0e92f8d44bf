// Copyright 2026 The pmqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pmqa: batch workflows for degrading audio, building and rating the segment
// dataset, training the GAN and scoring and evaluating quality measures.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pmqa/audio.hpp"
#include "pmqa/csv.hpp"
#include "pmqa/dataset.hpp"
#include "pmqa/degradations.hpp"
#include "pmqa/error.hpp"
#include "pmqa/evaluation.hpp"
#include "pmqa/gan/config.hpp"
#include "pmqa/gan/synthetic.hpp"
#include "pmqa/gan/trainer.hpp"
#include "pmqa/scoring.hpp"
#include "pmqa/spectral.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingInput = 3,
  kBadData = 4,
  kHalted = 5,
};

class MissingInput : public pmqa::Error {
 public:
  using pmqa::Error::Error;
};

const fs::path& require(const fs::path& path) {
  if (!fs::exists(path)) throw MissingInput("no such file: " + path.string());
  return path;
}

// Relative output paths land under PMQA_OUTPUT_DIR when it is set.
fs::path output_path(const fs::path& path) {
  const char* dir = std::getenv("PMQA_OUTPUT_DIR");
  if (dir == nullptr || *dir == '\0' || path.is_absolute()) return path;
  return fs::path(dir) / path;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

int thread_count() {
  const char* env = std::getenv("PMQA_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) {
    throw pmqa::InvalidArgument(std::string("PMQA_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(n);
}

// Runs fn(i) for i in [0, n) on PMQA_THREADS workers. Results must be
// written by index so output order never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string fmt(double v, const char* spec = "%.9g") {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

fs::path segment_audio(const fs::path& manifest, const pmqa::dataset::SegmentRecord& s) {
  if (s.audio_path.empty()) {
    throw pmqa::FormatError("segment " + s.segment_id + " has no audio_path; build the dataset with audio");
  }
  return s.audio_path.is_relative() ? manifest.parent_path() / s.audio_path : s.audio_path;
}

// Long-form measure values: segment_id, genre, measure, value.
using ScoreMap = std::map<std::string, std::map<pmqa::Measure, double>>;

void write_scores(const fs::path& path, const std::vector<pmqa::dataset::SegmentRecord>& segments,
                  const std::vector<std::pair<pmqa::Measure, std::vector<double>>>& columns) {
  pmqa::csv::Table t;
  t.header = {"segment_id", "genre", "measure", "value"};
  for (std::size_t i = 0; i < segments.size(); ++i) {
    for (const auto& [measure, values] : columns) {
      t.rows.push_back({segments[i].segment_id, segments[i].genre, pmqa::to_string(measure),
                        fmt(values[i], "%.10g")});
    }
  }
  ensure_parent(path);
  pmqa::csv::write(path, t);
}

void read_scores(const fs::path& path, ScoreMap& scores) {
  const auto t = pmqa::csv::read(require(path));
  const auto c_id = t.column("segment_id"), c_m = t.column("measure"), c_v = t.column("value");
  for (const auto& row : t.rows) {
    const pmqa::Measure m = pmqa::parse_measure(row[c_m]);
    if (m == pmqa::Measure::kRating || m == pmqa::Measure::kIntensity) {
      throw pmqa::FormatError(path.string() + ": measure " + row[c_m] + " comes from the manifest");
    }
    char* end = nullptr;
    const double v = std::strtod(row[c_v].c_str(), &end);
    if (row[c_v].empty() || *end != '\0') {
      throw pmqa::FormatError(path.string() + ": bad value '" + row[c_v] + "'");
    }
    if (!scores[row[c_id]].emplace(m, v).second) {
      throw pmqa::FormatError(path.string() + ": duplicate " + row[c_m] + " for " + row[c_id]);
    }
  }
}

struct Population {
  std::vector<pmqa::RatedSegment> segments;
  std::vector<pmqa::Measure> measures;  // besides R, in enum order
};

Population load_population(const fs::path& manifest, const std::vector<std::string>& score_files) {
  ScoreMap scores;
  for (const auto& f : score_files) read_scores(f, scores);
  std::set<pmqa::Measure> present{pmqa::Measure::kIntensity};
  for (const auto& [id, m] : scores) {
    for (const auto& kv : m) present.insert(kv.first);
  }
  Population pop;
  pop.measures.assign(present.begin(), present.end());
  std::size_t unrated = 0;
  for (const auto& s : pmqa::dataset::read_manifest(require(manifest))) {
    if (!s.median_rating) {
      ++unrated;
      continue;
    }
    pmqa::RatedSegment r{s.segment_id, s.track_id, s.genre, s.degradation, *s.median_rating, {}};
    auto it = scores.find(s.segment_id);
    if (it != scores.end()) r.measures = it->second;
    for (pmqa::Measure m : pop.measures) {
      if (!r.has(m)) {
        throw pmqa::FormatError("segment " + s.segment_id + " has no " + pmqa::to_string(m) + " value");
      }
    }
    pop.segments.push_back(std::move(r));
  }
  if (unrated) std::cerr << "note: skipped " << unrated << " unrated segments\n";
  if (pop.segments.empty()) throw pmqa::FormatError(manifest.string() + " has no rated segments");
  return pop;
}

// ---------------------------------------------------------------- commands

struct DegradeArgs {
  std::string kind;
  double intensity = 0.0;
  std::uint64_t seed = 0;
  int bit_depth = 16;
  std::string input, output;
};

int run_degrade(const DegradeArgs& a) {
  pmqa::DegradationSpec spec{pmqa::parse_degradation_kind(a.kind), a.intensity, a.seed};
  spec.validate();
  const auto audio = pmqa::read_wav(require(a.input));
  const auto out = output_path(a.output);
  ensure_parent(out);
  pmqa::write_wav(pmqa::apply(audio, spec), out, a.bit_depth);
  return kOk;
}

struct SpectrogramArgs {
  int bands = 256;
  int frames = 0;
  std::string input, output;
};

int run_spectrogram(const SpectrogramArgs& a) {
  const auto audio = pmqa::read_wav(require(a.input));
  pmqa::MelSpectrogram mel;
  if (a.frames > 0) {
    mel = pmqa::score_input(audio, a.bands, a.frames);
  } else {
    pmqa::FrontendConfig fc;
    fc.n_mels = a.bands;
    mel = pmqa::mel_spectrogram(pmqa::resample(pmqa::downmix_to_mono(audio), fc.sample_rate), fc);
  }
  const auto out = output_path(a.output);
  ensure_parent(out);
  if (out.extension() == ".csv") {
    pmqa::csv::Table t;
    t.header.push_back("band");
    for (std::size_t f = 0; f < mel.frames; ++f) t.header.push_back("f" + std::to_string(f));
    for (std::size_t b = 0; b < mel.bands; ++b) {
      pmqa::csv::Row row{std::to_string(b)};
      for (std::size_t f = 0; f < mel.frames; ++f) row.push_back(fmt(mel.at(b, f), "%.7g"));
      t.rows.push_back(std::move(row));
    }
    pmqa::csv::write(out, t);
  } else {
    pmqa::write_mel(mel, out);
  }
  std::cout << mel.bands << " bands x " << mel.frames << " frames\n";
  return kOk;
}

struct BuildDatasetArgs {
  std::string tracks, out_dir;
  std::uint64_t seed = 0;
  int windows = 3;
  double window_s = 4.0;
  int bit_depth = 24;
  bool no_audio = false;
};

int run_build_dataset(const BuildDatasetArgs& a) {
  namespace ds = pmqa::dataset;
  const auto tracks = ds::read_tracks(require(a.tracks));
  auto segments = ds::build_segments(tracks, a.seed, {a.windows, a.window_s});
  const fs::path dir = output_path(a.out_dir);
  fs::create_directories(dir);
  if (!a.no_audio) {
    fs::create_directories(dir / "segments");
    std::map<std::string, const ds::SourceTrack*> by_id;
    for (const auto& t : tracks) by_id[t.track_id] = &t;
    for (auto& s : segments) s.audio_path = fs::path("segments") / (s.segment_id + ".wav");
    // Each track is decoded once and all of its variants rendered from it.
    std::size_t i = 0;
    while (i < segments.size()) {
      std::size_t j = i;
      while (j < segments.size() && segments[j].track_id == segments[i].track_id) ++j;
      const auto audio = pmqa::read_wav(by_id.at(segments[i].track_id)->audio_path);
      parallel_for(j - i, [&](std::size_t k) {
        const auto& s = segments[i + k];
        pmqa::write_wav(ds::render_segment(audio, s), dir / s.audio_path, a.bit_depth);
      });
      i = j;
    }
  }
  ds::write_manifest(dir / "manifest.csv", segments);
  std::cout << tracks.size() << " tracks -> " << segments.size() << " segments in "
            << (dir / "manifest.csv").string() << '\n';
  return kOk;
}

struct AssignArgs {
  std::string manifest, output;
  int task_size = 10;
  int coverage = 5;
  std::uint64_t seed = 0;
};

int run_assign(const AssignArgs& a) {
  namespace ds = pmqa::dataset;
  const auto segments = ds::read_manifest(require(a.manifest));
  std::vector<std::string> ids;
  for (const auto& s : segments) ids.push_back(s.segment_id);
  const auto tasks = ds::assign_tasks(ids, a.task_size, a.coverage, a.seed);
  const auto out = output_path(a.output);
  ensure_parent(out);
  ds::write_tasks(out, tasks);
  std::cout << tasks.size() << " tasks x " << a.task_size << " slots\n";
  return kOk;
}

struct SimulateArgs {
  std::string manifest, tasks, output;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  namespace ds = pmqa::dataset;
  const auto segments = ds::read_manifest(require(a.manifest));
  const auto tasks = ds::read_tasks(require(a.tasks));
  const auto subs = ds::simulate_submissions(tasks, ds::SegmentCatalog(segments), a.seed);
  const auto out = output_path(a.output);
  ensure_parent(out);
  ds::write_submissions(out, subs);
  return kOk;
}

struct ValidateArgs {
  std::string manifest, tasks, submissions, verdicts, accepted, prior;
};

int run_validate(const ValidateArgs& a) {
  namespace ds = pmqa::dataset;
  const auto segments = ds::read_manifest(require(a.manifest));
  const auto tasks = ds::read_tasks(require(a.tasks));
  const auto subs = ds::read_submissions(require(a.submissions));
  std::set<std::string> prior;
  if (!a.prior.empty()) {
    std::ifstream in(require(a.prior));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) prior.insert(line);
    }
  }
  const auto verdicts = ds::validate_batch(subs, tasks, ds::SegmentCatalog(segments), prior);
  pmqa::csv::Table t;
  t.header = {"task_id", "participant_id", "accepted", "reason", "detail"};
  std::vector<ds::Submission> accepted;
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    t.rows.push_back({subs[i].task_id, subs[i].participant_id, verdicts[i].accepted ? "1" : "0",
                      ds::to_string(verdicts[i].reason), verdicts[i].detail});
    ++counts[ds::to_string(verdicts[i].reason)];
    if (verdicts[i].accepted) accepted.push_back(subs[i]);
  }
  const auto out = output_path(a.verdicts);
  ensure_parent(out);
  pmqa::csv::write(out, t);
  if (!a.accepted.empty()) {
    const auto acc = output_path(a.accepted);
    ensure_parent(acc);
    ds::write_submissions(acc, accepted);
  }
  for (const auto& [reason, n] : counts) std::cout << reason << ": " << n << '\n';
  return kOk;
}

struct AggregateArgs {
  std::string manifest, submissions, output;
};

int run_aggregate(const AggregateArgs& a) {
  namespace ds = pmqa::dataset;
  const auto segments = ds::read_manifest(require(a.manifest));
  const auto subs = ds::read_submissions(require(a.submissions));
  const ds::SegmentCatalog catalog(segments);
  for (const auto& s : subs) {
    for (const auto& [id, r] : s.ratings) catalog.at(id);
  }
  auto agg = ds::aggregate_submissions(subs, segments);
  // Audio paths stay valid when the rated manifest lands elsewhere.
  const auto out = output_path(a.output);
  const fs::path src_dir = fs::absolute(fs::path(a.manifest)).parent_path();
  const fs::path dst_dir = fs::absolute(out).parent_path();
  if (src_dir != dst_dir) {
    for (auto& s : agg.segments) {
      if (!s.audio_path.empty() && s.audio_path.is_relative()) {
        s.audio_path = (src_dir / s.audio_path).lexically_relative(dst_dir);
      }
    }
  }
  ensure_parent(out);
  ds::write_manifest(out, agg.segments);
  std::cout << agg.segments.size() - agg.unrated.size() << " rated, " << agg.unrated.size()
            << " unrated\n";
  return kOk;
}

struct TrainArgs {
  std::string profile = "toy";
  std::string config_file, tracks, out_dir = "train_out";
  std::optional<std::int64_t> steps, checkpoint_every;
  std::optional<std::uint64_t> seed;
  int synthetic_tracks = 12;
  double synthetic_seconds = 20.0;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  pmqa::gan::GanConfig config = pmqa::gan::profile_config(a.profile);
  if (a.steps) config.steps = *a.steps;
  if (a.checkpoint_every) config.checkpoint_every = *a.checkpoint_every;
  if (a.seed) config.seed = *a.seed;
  if (!a.config_file.empty()) {
    std::ifstream in(require(a.config_file));
    std::stringstream text;
    text << in.rdbuf();
    pmqa::gan::apply_key_values(config, text.str());
  }
  config.validate();

  std::vector<pmqa::gan::TrainingTrack> tracks;
  if (a.tracks.empty()) {
    if (config.n_genres != pmqa::gan::kSyntheticGenres) {
      throw pmqa::InvalidArgument("the synthetic corpus has 2 genres; pass --tracks for profile " +
                                  config.profile);
    }
    tracks = pmqa::gan::synthetic_corpus(a.synthetic_tracks, a.synthetic_seconds, config.seed);
  } else {
    for (const auto& t : pmqa::dataset::read_tracks(require(a.tracks))) {
      tracks.push_back({t.track_id, pmqa::resolve_genre(config, t.genre), pmqa::read_wav(t.audio_path)});
    }
  }
  const fs::path dir = output_path(a.out_dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.txt", std::ios::trunc);
    cfg << pmqa::gan::to_key_values(config);
  }
  pmqa::gan::TrainOptions options;
  options.output_dir = dir;
  if (!a.quiet) {
    options.on_step = [&](std::int64_t step, const pmqa::gan::LossRecord& rec) {
      if (step % config.log_every != 0 && step != config.steps) return;
      double d = 0.0;
      for (double l : rec.d_losses) d += l;
      std::fprintf(stderr, "step %lld  L_D %.4f  L_G %.4f\n", static_cast<long long>(step),
                   d / static_cast<double>(rec.d_losses.size()), rec.g_loss);
    };
  }
  const auto result = pmqa::gan::train(config, tracks, options);
  std::cout << result.steps << " steps, final checkpoint " << result.final_checkpoint.string() << '\n';
  return kOk;
}

struct ScoreArgs {
  std::string checkpoint, manifest, output, genre;
  std::vector<std::string> inputs;
};

int run_score(const ScoreArgs& a) {
  const auto scorer = pmqa::Scorer::from_checkpoint(require(a.checkpoint));
  if (a.manifest.empty()) {
    if (a.inputs.empty()) throw pmqa::InvalidArgument("score needs --manifest or WAV inputs");
    if (a.genre.empty()) throw pmqa::InvalidArgument("scoring WAV inputs needs --genre");
    const int genre = pmqa::resolve_genre(scorer.config(), a.genre);
    for (const auto& in : a.inputs) {
      std::cout << in << ',' << fmt(scorer.score(pmqa::read_wav(require(in)), genre), "%.10g") << '\n';
    }
    return kOk;
  }
  const fs::path manifest = require(a.manifest);
  const auto segments = pmqa::dataset::read_manifest(manifest);
  std::vector<double> values(segments.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t begin = 0; begin < segments.size(); begin += kChunk) {
    const std::size_t end = std::min(segments.size(), begin + kChunk);
    std::vector<pmqa::AudioBuffer> clips;
    std::vector<int> genres;
    for (std::size_t i = begin; i < end; ++i) {
      clips.push_back(pmqa::read_wav(require(segment_audio(manifest, segments[i]))));
      genres.push_back(pmqa::resolve_genre(scorer.config(), segments[i].genre));
    }
    const auto d = scorer.score_batch(clips, genres);
    std::copy(d.begin(), d.end(), values.begin() + static_cast<std::ptrdiff_t>(begin));
  }
  write_scores(output_path(a.output), segments, {{pmqa::Measure::kD, values}});
  return kOk;
}

struct MeasureArgs {
  std::string manifest, output;
};

int run_measure(const MeasureArgs& a) {
  const fs::path manifest = require(a.manifest);
  const auto segments = pmqa::dataset::read_manifest(manifest);
  // The reference of every variant is the original of the same window.
  std::map<std::pair<std::string, double>, std::size_t> originals;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].degradation.kind == pmqa::DegradationKind::kNone) {
      originals[{segments[i].track_id, segments[i].start_s}] = i;
    }
  }
  std::vector<double> mse(segments.size()), sf(segments.size()), sf16(segments.size());
  parallel_for(segments.size(), [&](std::size_t i) {
    const auto& s = segments[i];
    const auto clip = pmqa::read_wav(require(segment_audio(manifest, s)));
    auto it = originals.find({s.track_id, s.start_s});
    if (it == originals.end()) {
      throw pmqa::FormatError("segment " + s.segment_id + " has no original in the manifest");
    }
    if (it->second == i) {
      mse[i] = 0.0;
    } else {
      mse[i] = pmqa::mse_measure(pmqa::read_wav(require(segment_audio(manifest, segments[it->second]))), clip);
    }
    sf[i] = pmqa::spectral_flatness(clip, clip.sample_rate());
    sf16[i] = pmqa::spectral_flatness(clip, 16000);
  });
  write_scores(output_path(a.output), segments,
               {{pmqa::Measure::kMse, mse}, {pmqa::Measure::kSf, sf}, {pmqa::Measure::kSf16k, sf16}});
  return kOk;
}

struct EvaluateArgs {
  std::string manifest, output;
  std::vector<std::string> scores;
  std::vector<std::string> measures;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto pop = load_population(a.manifest, a.scores);
  std::vector<pmqa::Measure> measures;
  if (a.measures.empty()) {
    measures = pop.measures;
  } else {
    for (const auto& m : a.measures) measures.push_back(pmqa::parse_measure(m));
  }
  std::string csv_text;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto report = pmqa::evaluate(pop.segments, measures[i]);
    std::cout << pmqa::report_table(report) << '\n';
    std::string part = pmqa::report_csv(report);
    if (i > 0) part.erase(0, part.find('\n') + 1);
    csv_text += part;
  }
  if (!a.output.empty()) {
    const auto out = output_path(a.output);
    ensure_parent(out);
    pmqa::csv::write(out, pmqa::csv::parse(csv_text));
  }
  return kOk;
}

struct ReportArgs {
  std::string manifest, out_dir;
  std::vector<std::string> scores;
};

void write_subset_table(const fs::path& path, const std::vector<pmqa::RatedSegment>& segments,
                        const std::vector<pmqa::Measure>& measures, const std::string& group) {
  pmqa::csv::Table t;
  t.header = {"subset"};
  std::vector<std::string> subsets;
  std::map<std::string, std::map<pmqa::Measure, double>> cells;
  for (pmqa::Measure m : measures) {
    t.header.push_back(pmqa::to_string(m));
    for (const auto& row : pmqa::evaluate(segments, m).rows) {
      if (row.group != group) continue;
      if (!cells.count(row.subset)) subsets.push_back(row.subset);
      cells[row.subset][m] = row.rho;
    }
  }
  for (const auto& s : subsets) {
    pmqa::csv::Row row{s};
    for (pmqa::Measure m : measures) row.push_back(fmt(cells[s][m], "%.6f"));
    t.rows.push_back(std::move(row));
  }
  pmqa::csv::write(path, t);
}

int run_report(const ReportArgs& a) {
  const auto pop = load_population(a.manifest, a.scores);
  const fs::path dir = output_path(a.out_dir);
  fs::create_directories(dir);
  const bool has_d = std::count(pop.measures.begin(), pop.measures.end(), pmqa::Measure::kD) > 0;

  if (has_d) {
    pmqa::csv::write(dir / "correlations.csv",
                     pmqa::csv::parse(pmqa::report_csv(pmqa::evaluate(pop.segments, pmqa::Measure::kD))));
    // Score distribution per rating bucket, one row per segment.
    std::vector<const pmqa::RatedSegment*> order;
    for (const auto& s : pop.segments) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(), [](auto* x, auto* y) {
      return x->median_rating < y->median_rating;
    });
    pmqa::csv::Table t;
    t.header = {"rating", "segment_id", "genre", "degradation", "D"};
    for (const auto* s : order) {
      t.rows.push_back({fmt(s->median_rating, "%g"), s->segment_id, s->genre,
                        pmqa::to_string(s->degradation.kind), fmt(s->value(pmqa::Measure::kD), "%.10g")});
    }
    pmqa::csv::write(dir / "d_by_rating.csv", t);
  } else {
    std::cerr << "note: no D scores given; skipping correlations.csv and d_by_rating.csv\n";
  }
  const auto matrix = pmqa::pairwise_correlations(pop.segments, pop.measures);
  pmqa::csv::write(dir / "pairwise.csv", pmqa::csv::parse(pmqa::matrix_csv(matrix)));
  write_subset_table(dir / "pairwise_by_degradation.csv", pop.segments, pop.measures, "Degradation");
  write_subset_table(dir / "pairwise_by_genre.csv", pop.segments, pop.measures, "Genre");
  std::cout << "wrote report CSVs to " << dir.string() << '\n';
  return kOk;
}

struct SplitArgs {
  std::string tracks;
  std::string out_dir;
  std::uint64_t seed = 0;
  double train = 0.80;
  double test = 0.03;
};

int run_split(const SplitArgs& a) {
  const auto tracks = pmqa::dataset::read_tracks(require(a.tracks));
  const auto split = pmqa::dataset::split_tracks(tracks, a.seed, a.train, a.test);
  const fs::path dir = output_path(a.out_dir);
  fs::create_directories(dir);
  pmqa::dataset::write_tracks(dir / "train.csv", split.train);
  pmqa::dataset::write_tracks(dir / "test.csv", split.test);
  pmqa::dataset::write_tracks(dir / "reserved.csv", split.reserved);
  std::cout << split.train.size() << " train, " << split.test.size() << " test, " << split.reserved.size()
            << " reserved tracks in " << dir.string() << '\n';
  return kOk;
}

struct SynthArgs {
  std::string out_dir;
  int tracks_per_genre = 4;
  double seconds = 20.0;
  std::uint64_t seed = 0;
  int sample_rate = 48000;
};

int run_synth(const SynthArgs& a) {
  const fs::path dir = output_path(a.out_dir);
  fs::create_directories(dir / "audio");
  const auto corpus = pmqa::gan::synthetic_corpus(a.tracks_per_genre, a.seconds, a.seed, a.sample_rate);
  pmqa::csv::Table t;
  t.header = {"track_id", "genre", "audio_path"};
  for (const auto& track : corpus) {
    const fs::path rel = fs::path("audio") / (track.id + ".wav");
    pmqa::write_wav(track.audio, dir / rel, 24);
    t.rows.push_back({track.id, pmqa::gan::synthetic_genre_name(track.genre), rel.generic_string()});
  }
  pmqa::csv::write(dir / "tracks.csv", t);
  std::cout << corpus.size() << " tracks in " << (dir / "tracks.csv").string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pmqa: no-reference music quality assessment toolkit"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "pmqa 0.1.0");
  std::function<int()> action;

  DegradeArgs degrade;
  auto* c = app.add_subcommand("degrade", "Apply one degradation to a WAV file");
  c->add_option("--kind", degrade.kind, "none, distortion, lowpass, limiter or noise")->required();
  c->add_option("--intensity", degrade.intensity, "Intensity in [0, 100]")->required();
  c->add_option("--seed", degrade.seed, "Noise seed")->capture_default_str();
  c->add_option("--bit-depth", degrade.bit_depth, "Output PCM bits")->check(CLI::IsMember({16, 24}))->capture_default_str();
  c->add_option("input", degrade.input, "Input WAV")->required();
  c->add_option("output", degrade.output, "Output WAV")->required();
  c->callback([&] { action = [&] { return run_degrade(degrade); }; });

  SpectrogramArgs spectrogram;
  c = app.add_subcommand("spectrogram", "Normalized log-mel spectrogram of a WAV file (.mel or .csv)");
  c->add_option("--bands", spectrogram.bands, "Mel bands")->capture_default_str();
  c->add_option("--frames", spectrogram.frames, "Crop or pad to this many frames (0 keeps all)")->capture_default_str();
  c->add_option("input", spectrogram.input, "Input WAV")->required();
  c->add_option("output", spectrogram.output, "Output .mel or .csv")->required();
  c->callback([&] { action = [&] { return run_spectrogram(spectrogram); }; });

  BuildDatasetArgs build;
  c = app.add_subcommand("build-dataset", "Cut windows from tracks and render degraded variants");
  c->add_option("--tracks", build.tracks, "Tracks CSV (track_id, genre, audio_path)")->required();
  c->add_option("--out-dir", build.out_dir, "Output directory")->required();
  c->add_option("--seed", build.seed, "Placement and intensity seed")->capture_default_str();
  c->add_option("--windows", build.windows, "Windows per track")->capture_default_str();
  c->add_option("--window-seconds", build.window_s, "Window length")->capture_default_str();
  c->add_option("--bit-depth", build.bit_depth, "Segment PCM bits")->check(CLI::IsMember({16, 24}))->capture_default_str();
  c->add_flag("--no-audio", build.no_audio, "Write the manifest only");
  c->callback([&] { action = [&] { return run_build_dataset(build); }; });

  AssignArgs assign;
  c = app.add_subcommand("assign-tasks", "Pack segments into rating tasks");
  c->add_option("--manifest", assign.manifest, "Segment manifest")->required();
  c->add_option("--out", assign.output, "Tasks CSV")->required();
  c->add_option("--task-size", assign.task_size, "Segments per task")->capture_default_str();
  c->add_option("--coverage", assign.coverage, "Minimum tasks per segment")->capture_default_str();
  c->add_option("--seed", assign.seed, "Shuffle seed")->capture_default_str();
  c->callback([&] { action = [&] { return run_assign(assign); }; });

  SimulateArgs simulate;
  c = app.add_subcommand("simulate-ratings", "Simulated listener submissions for testing the rating pipeline");
  c->add_option("--manifest", simulate.manifest, "Segment manifest")->required();
  c->add_option("--tasks", simulate.tasks, "Tasks CSV")->required();
  c->add_option("--out", simulate.output, "Submissions (.csv or .jsonl)")->required();
  c->add_option("--seed", simulate.seed, "Listener seed")->capture_default_str();
  c->callback([&] { action = [&] { return run_simulate(simulate); }; });

  ValidateArgs validate;
  c = app.add_subcommand("validate", "Apply the rejection rules to rating submissions");
  c->add_option("--manifest", validate.manifest, "Segment manifest")->required();
  c->add_option("--tasks", validate.tasks, "Tasks CSV")->required();
  c->add_option("--submissions", validate.submissions, "Submissions (.csv or .jsonl)")->required();
  c->add_option("--out", validate.verdicts, "Verdicts CSV")->required();
  c->add_option("--accepted", validate.accepted, "Write accepted submissions here");
  c->add_option("--prior", validate.prior, "Participant ids from earlier batches, one per line");
  c->callback([&] { action = [&] { return run_validate(validate); }; });

  AggregateArgs aggregate;
  c = app.add_subcommand("aggregate", "Median rating per segment from accepted submissions");
  c->add_option("--manifest", aggregate.manifest, "Segment manifest")->required();
  c->add_option("--submissions", aggregate.submissions, "Accepted submissions")->required();
  c->add_option("--out", aggregate.output, "Rated manifest")->required();
  c->callback([&] { action = [&] { return run_aggregate(aggregate); }; });

  TrainArgs train;
  std::int64_t steps = 0, checkpoint_every = 0;
  std::uint64_t train_seed = 0;
  c = app.add_subcommand("train", "Train the conditional GAN");
  c->add_option("--profile", train.profile, "toy or paper")->check(CLI::IsMember({"toy", "paper"}))->capture_default_str();
  auto* steps_opt = c->add_option("--steps", steps, "Generator steps");
  auto* ckpt_opt = c->add_option("--checkpoint-every", checkpoint_every, "Steps between checkpoints");
  auto* seed_opt = c->add_option("--seed", train_seed, "Training seed");
  c->add_option("--config", train.config_file, "key = value file; overrides flags");
  c->add_option("--tracks", train.tracks, "Tracks CSV; the synthetic corpus is used when absent");
  c->add_option("--out-dir", train.out_dir, "Checkpoint and log directory")->capture_default_str();
  c->add_option("--synthetic-tracks", train.synthetic_tracks, "Synthetic tracks per genre")->capture_default_str();
  c->add_option("--synthetic-seconds", train.synthetic_seconds, "Synthetic track length")->capture_default_str();
  c->add_flag("--quiet", train.quiet, "No progress on stderr");
  c->callback([&] {
    if (*steps_opt) train.steps = steps;
    if (*ckpt_opt) train.checkpoint_every = checkpoint_every;
    if (*seed_opt) train.seed = train_seed;
    action = [&] { return run_train(train); };
  });

  ScoreArgs score;
  c = app.add_subcommand("score", "Discriminator score of segments or WAV files");
  c->add_option("--checkpoint", score.checkpoint, "Trained checkpoint")->required();
  c->add_option("--manifest", score.manifest, "Segment manifest");
  c->add_option("--out", score.output, "Scores CSV (with --manifest)");
  c->add_option("--genre", score.genre, "Genre of the WAV inputs");
  c->add_option("inputs", score.inputs, "WAV files");
  c->callback([&] {
    if (!score.manifest.empty() && score.output.empty()) throw CLI::RequiredError("--out");
    action = [&] { return run_score(score); };
  });

  MeasureArgs measure;
  c = app.add_subcommand("measure", "MSE and spectral flatness of every segment");
  c->add_option("--manifest", measure.manifest, "Segment manifest")->required();
  c->add_option("--out", measure.output, "Scores CSV")->required();
  c->callback([&] { action = [&] { return run_measure(measure); }; });

  EvaluateArgs evaluate;
  c = app.add_subcommand("evaluate", "Spearman correlation with the median rating per subset");
  c->add_option("--manifest", evaluate.manifest, "Rated manifest")->required();
  c->add_option("--scores", evaluate.scores, "Scores CSVs")->required();
  c->add_option("--measure", evaluate.measures, "Measures to report (default: all present)");
  c->add_option("--out", evaluate.output, "Report CSV");
  c->callback([&] { action = [&] { return run_evaluate(evaluate); }; });

  ReportArgs report;
  c = app.add_subcommand("report", "Plot-ready CSVs: table, score by rating, correlation matrices");
  c->add_option("--manifest", report.manifest, "Rated manifest")->required();
  c->add_option("--scores", report.scores, "Scores CSVs")->required();
  c->add_option("--out-dir", report.out_dir, "Output directory")->required();
  c->callback([&] { action = [&] { return run_report(report); }; });

  SplitArgs split;
  c = app.add_subcommand("split", "Per-genre train / test / reserved split of a tracks CSV");
  c->add_option("--tracks", split.tracks, "Tracks CSV")->required();
  c->add_option("--out-dir", split.out_dir, "Writes train.csv, test.csv, reserved.csv")->required();
  c->add_option("--seed", split.seed, "Seed")->capture_default_str();
  c->add_option("--train", split.train, "Training fraction")->capture_default_str();
  c->add_option("--test", split.test, "Listening-test fraction")->capture_default_str();
  c->callback([&] { action = [&] { return run_split(split); }; });

  SynthArgs synth;
  c = app.add_subcommand("synth-corpus", "Write the procedural two-genre corpus as WAV files");
  c->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  c->add_option("--tracks-per-genre", synth.tracks_per_genre, "Tracks per genre")->capture_default_str();
  c->add_option("--seconds", synth.seconds, "Track length")->capture_default_str();
  c->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  c->add_option("--sample-rate", synth.sample_rate, "Sample rate")->capture_default_str();
  c->callback([&] { action = [&] { return run_synth(synth); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  try {
    return action();
  } catch (const MissingInput& e) {
    std::cerr << "pmqa: " << e.what() << '\n';
    return kMissingInput;
  } catch (const pmqa::WavError& e) {
    std::cerr << "pmqa: " << e.what() << '\n';
    return e.code() == pmqa::WavErrc::kIo ? kMissingInput : kBadData;
  } catch (const pmqa::TrainingHalted& e) {
    std::cerr << "pmqa: training halted: " << e.what() << '\n';
    return kHalted;
  } catch (const pmqa::IoError& e) {
    std::cerr << "pmqa: " << e.what() << '\n';
    return kFailure;
  } catch (const pmqa::Error& e) {
    std::cerr << "pmqa: " << e.what() << '\n';
    return kBadData;
  } catch (const std::exception& e) {
    std::cerr << "pmqa: " << e.what() << '\n';
    return kFailure;
  }
}
