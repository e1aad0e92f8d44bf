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

// Acceptance gate: runs criteria 1-9 and prints one PASS/FAIL line each.
//
//   pmqa_acceptance [--cli PATH] [--only N] [--gan-steps N] [--gan-seeds a,b,c]
//                   [--work-dir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grad_check.hpp"
#include "oracles.hpp"
#include "pmqa/ad/ops.hpp"
#include "pmqa/audio.hpp"
#include "pmqa/dataset.hpp"
#include "pmqa/degradations.hpp"
#include "pmqa/evaluation.hpp"
#include "pmqa/gan/config.hpp"
#include "pmqa/gan/synthetic.hpp"
#include "pmqa/gan/trainer.hpp"
#include "pmqa/scoring.hpp"
#include "pmqa/spectral.hpp"

namespace pmqa {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Options {
  std::string cli;
  int only = 0;
  std::int64_t gan_steps = 500;
  std::vector<std::uint64_t> gan_seeds{1, 2, 3};
  fs::path work_dir = fs::temp_directory_path() / "pmqa_acceptance";
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

AudioBuffer sine(double hz, double seconds, int rate, double amp) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  }
  return AudioBuffer::Mono(std::move(x), rate);
}

std::vector<double> tied(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(0, static_cast<int>(n / 3) + 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// 1. Finite-difference gradients of every primitive.
Outcome gradients() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_case;
  int shapes = 0;
  std::mt19937_64 rng(1);
  for (const auto& c : testing::gradient_cases()) {
    for (int draw = 0; draw < 3; ++draw) {
      const auto problem = c.make(rng);
      const auto r = testing::check_gradients(problem, rng());
      ++shapes;
      if (r.max_rel_error > worst) {
        worst = r.max_rel_error;
        worst_case = c.name + " " + problem.shape;
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  o.pass = worst < 1e-4 && shapes >= 20 && secs < 120.0;
  o.detail = std::to_string(shapes) + " shapes, max rel err " + fmt("%.2e", worst) + " (" + worst_case +
             "), " + fmt("%.1f", secs) + " s";
  return o;
}

// 2. Power-iteration sigma against a dense SVD.
Outcome spectral_norm() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t rows = 1 + static_cast<std::int64_t>(rng() % 64);
    const std::int64_t cols = 1 + static_cast<std::int64_t>(rng() % 64);
    std::vector<double> w(static_cast<std::size_t>(rows * cols));
    for (auto& v : w) v = n(rng);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(w.data(), rows, cols);
    const double oracle = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    ad::SpectralNormState<double> st;
    const double sigma = ad::power_iteration<double>(w, rows, cols, st, 100);
    worst = std::max(worst, std::abs(sigma / oracle - 1.0));
  }
  return {worst < 0.01, "50 matrices, max relative error " + fmt("%.2e", worst)};
}

double lowpass_gain_db(double hz, double cutoff, int rate) {
  const AudioBuffer out = butterworth_lowpass_hz(sine(hz, 1.0, rate, 1.0), cutoff);
  const auto tail = out.channel(0).subspan(static_cast<std::size_t>(rate / 2));
  return 20.0 * std::log10(testing::sine_amplitude(tail, hz, rate));
}

// 3. DSP operators against analytic and measurement oracles.
Outcome dsp() {
  Outcome o;
  std::ostringstream d;
  // Lowest cutoff of the intensity range, where the bilinear warp is small.
  const double at_cutoff = lowpass_gain_db(1000.0, 1000.0, 48000);
  const double at_octave = lowpass_gain_db(2000.0, 1000.0, 48000);
  const bool bw = std::abs(at_cutoff + 3.01) <= 0.3 && std::abs(at_octave + 24.1) <= 0.5;
  d << "butterworth " << fmt("%.2f", at_cutoff) << "/" << fmt("%.2f", at_octave) << " dB";

  const double slope = testing::spectral_slope_db_per_octave(pink_noise(48000 * 8, 0.1, 42), 48000, 100.0, 5000.0);
  const bool pink = std::abs(slope + 3.0) <= 1.0;
  d << ", pink slope " << fmt("%.2f", slope) << " dB/oct";

  double resample_err = 0.0;
  for (const int source : {48000, 44100, 22050}) {
    for (const double hz : {100.0, 1000.0, 5000.0}) {
      const AudioBuffer out = resample(sine(hz, 1.0, source, 0.5), 16000);
      const double a = testing::sine_amplitude(out.channel(0).subspan(2000, 12000), hz, 16000);
      resample_err = std::max(resample_err, std::abs(a / 0.5 - 1.0));
    }
  }
  const bool rs = resample_err <= 0.01;
  d << ", resampler err " << fmt("%.2e", resample_err);

  bool thd_up = true;
  double previous = -1.0;
  const AudioBuffer tone = sine(1000.0, 0.1, 48000, 0.5);
  for (double intensity = 0.0; intensity <= 100.0; intensity += 5.0) {
    const double t = testing::thd(waveshape_distortion(tone, intensity).channel(0), 1000.0, 48000);
    thd_up = thd_up && t > previous;
    previous = t;
  }
  d << ", THD " << (thd_up ? "increasing" : "NOT increasing");
  o.pass = bw && pink && rs && thd_up;
  o.detail = d.str();
  return o;
}

// 4. Frontend shapes and invariances.
Outcome frontend() {
  std::mt19937_64 rng(4);
  bool count_ok = true;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200000)(rng);
    const int hop = std::uniform_int_distribution<int>(1, 1024)(rng);
    count_ok = count_ok && stft_frame_count(n, hop) == 1 + n / static_cast<std::size_t>(hop);
  }
  // The formula must also describe what the STFT actually returns.
  for (std::size_t n : {1025u, 4097u, 16000u}) {
    count_ok = count_ok && stft_magnitude(sine(440, static_cast<double>(n) / 16000, 16000, 0.5).channel(0)).cols ==
                               stft_frame_count(n, 256);
  }

  const Matrix m = stft_magnitude(sine(1000.0, 1.0, 16000, 1.0).channel(0), 2048, 256);
  bool bin_ok = true;
  for (std::size_t t = 4; t + 4 < m.cols; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.rows; ++k) {
      if (m(k, t) > m(best, t)) best = k;
    }
    bin_ok = bin_ok && best == 128;
  }

  const Matrix fb = build_mel_filterbank(256, 2048, 16000, 0.0, 8000.0);
  bool fb_ok = fb.rows == 256 && fb.cols == 1025;
  for (std::size_t r = 0; fb_ok && r < fb.rows; ++r) {
    std::size_t first = fb.cols, last = 0, nonzero = 0;
    for (std::size_t k = 0; k < fb.cols; ++k) {
      fb_ok = fb_ok && fb(r, k) >= 0.0;
      if (fb(r, k) > 0.0) {
        first = std::min(first, k);
        last = k;
        ++nonzero;
      }
    }
    fb_ok = fb_ok && nonzero > 0 && last - first + 1 == nonzero;
  }

  std::vector<double> x(16000);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : x) v = n(rng);
  auto scaled = [&](double g) {
    std::vector<double> y = x;
    for (auto& v : y) v *= g;
    return mel_spectrogram(AudioBuffer::Mono(std::move(y), 16000));
  };
  const auto a = scaled(0.05), b = scaled(0.6);
  double gain_err = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    gain_err = std::max(gain_err, static_cast<double>(std::abs(a.values[i] - b.values[i])));
  }
  std::ostringstream d;
  d << "frame count " << (count_ok ? "exact" : "WRONG") << ", 1 kHz bin " << (bin_ok ? "128" : "WRONG")
    << ", filterbank " << fb.rows << "x" << fb.cols << (fb_ok ? "" : " BAD") << ", gain err "
    << fmt("%.1e", gain_err);
  return {count_ok && bin_ok && fb_ok && gain_err <= 1e-5, d.str()};
}

// 5. Spearman against a brute-force oracle.
Outcome rank_statistics() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  int compared = 0;
  while (compared < 1000) {
    const std::size_t n = 20 + rng() % 80;  // asymptotic p path keeps this fast
    const auto x = tied(rng, n), y = tied(rng, n);
    const double oracle = testing::spearman_oracle(x, y);
    if (!std::isfinite(oracle)) continue;
    worst = std::max(worst, std::abs(spearman(x, y).rho - oracle));
    ++compared;
  }
  bool monotone = true, invariant = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = tied(rng, 30 + trial);
    std::vector<double> up(x.size()), down(x.size()), sorted_x = x;
    std::vector<double> ys = tied(rng, x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      up[i] = std::exp(0.2 * x[i]) + x[i];
      down[i] = -std::pow(x[i] + 1.0, 3.0);
    }
    monotone = monotone && std::abs(spearman(x, up).rho - 1.0) < 1e-12 &&
               std::abs(spearman(x, down).rho + 1.0) < 1e-12;
    invariant = invariant && std::abs(spearman(up, ys).rho - spearman(x, ys).rho) < 1e-12;
  }
  std::ostringstream d;
  d << compared << " tie-bearing pairs, max |drho| " << fmt("%.1e", worst) << ", monotone "
    << (monotone ? "ok" : "BAD") << ", transform invariance " << (invariant ? "ok" : "BAD");
  return {worst <= 1e-12 && monotone && invariant, d.str()};
}

// 6. Dataset construction at the 65-track scale.
Outcome dataset_shape() {
  using namespace dataset;
  std::vector<SourceTrack> tracks;
  for (const auto genre : gan::kGenreNames) {
    for (int i = 0; i < 5; ++i) {
      tracks.push_back({std::string(genre).substr(0, 3) + std::to_string(tracks.size()), std::string(genre),
                        25.0 + 11.0 * i, {}});
    }
  }
  const auto segs = build_segments(tracks, 6);
  const auto originals = std::count_if(segs.begin(), segs.end(), [](const SegmentRecord& s) {
    return s.degradation.kind == DegradationKind::kNone;
  });
  std::vector<std::string> ids;
  for (const auto& s : segs) ids.push_back(s.segment_id);
  const auto tasks = assign_tasks(ids, 10, 5, 6);
  std::map<std::string, int> coverage;
  bool slots_ok = true;
  for (const auto& t : tasks) {
    slots_ok = slots_ok && t.segment_ids.size() == 10 &&
               std::set<std::string>(t.segment_ids.begin(), t.segment_ids.end()).size() == 10;
    for (const auto& id : t.segment_ids) ++coverage[id];
  }
  int min_cover = coverage.size() == segs.size() ? 1 << 30 : 0;
  for (const auto& [id, c] : coverage) min_cover = std::min(min_cover, c);

  // One violation of each rule against a task of 10 segments spanning intensities.
  SegmentCatalog catalog(segs);
  RatingTask task{"t0001", {}};
  for (std::size_t i = 0; i < 10; ++i) task.segment_ids.push_back(segs[i].segment_id);
  Submission good{"t0001", "alice", "headphones", 120.0, {}};
  for (std::size_t i = 0; i < 10; ++i) good.ratings[task.segment_ids[i]] = 1 + static_cast<int>(i % 5);
  double lo = 100.0, hi = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    lo = std::min(lo, segs[i].degradation.intensity);
    hi = std::max(hi, segs[i].degradation.intensity);
  }
  std::set<RejectReason> fired;
  auto check = [&](Submission s, const std::set<std::string>& history) {
    fired.insert(validate_submission(s, task, history, catalog).reason);
  };
  check(good, {"alice"});
  Submission s = good;
  s.device = "phone speaker";
  check(s, {});
  s = good;
  s.elapsed_s = 39.0;
  check(s, {});
  s = good;
  for (auto& [id, r] : s.ratings) r = 4;
  check(s, {});
  const bool accepts = validate_submission(good, task, {}, catalog).accepted;
  const bool rules = accepts && hi - lo >= kUniformRatingSpan && fired.count(RejectReason::kRepeatParticipant) &&
                     fired.count(RejectReason::kDevice) && fired.count(RejectReason::kTooFast) &&
                     fired.count(RejectReason::kUniformRatings);
  std::ostringstream d;
  d << originals << " originals, " << segs.size() << " segments, " << tasks.size() << " tasks x 10"
    << (slots_ok ? "" : " (BAD slots)") << ", min coverage " << min_cover << ", rejection rules "
    << (rules ? "all fire" : "MISSING");
  return {originals == 195 && segs.size() == 975 && tasks.size() == 488 && slots_ok && min_cover >= 5 && rules,
          d.str()};
}

// 7. Desk-scale GAN: does D rank added noise as lower quality?
struct GanRun {
  bool pass = false;
  double rho = 0.0, p = 1.0, clean = 0.0, worst = 0.0, seconds = 0.0;
};

GanRun gan_run(std::uint64_t seed, std::int64_t steps, const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  gan::GanConfig config = gan::toy_config();
  config.seed = seed;
  config.steps = steps;
  config.checkpoint_every = steps;
  config.log_every = 100;
  const auto corpus = gan::synthetic_corpus(12, 20.0, seed);
  gan::TrainOptions options;
  options.output_dir = dir;
  const auto result = gan::train(config, corpus, options);
  const Scorer scorer = Scorer::from_checkpoint(result.final_checkpoint);

  // Held-out clips from a seed range the corpus never uses.
  std::vector<AudioBuffer> clean;
  std::vector<int> genres;
  for (int i = 0; i < 100; ++i) {
    genres.push_back(i % 2);
    clean.push_back(gan::synth_clip(i % 2, 2.0, 48000, 0x5000000 + seed * 1000 + static_cast<std::uint64_t>(i)));
  }
  GanRun run;
  const auto clean_scores = scorer.score_batch(clean, genres);
  for (double v : clean_scores) run.clean += v / 100.0;
  std::vector<double> scores, intensities;
  for (const double intensity : {0.0, 25.0, 50.0, 75.0, 100.0}) {
    std::vector<AudioBuffer> noisy;
    for (int i = 0; i < 100; ++i) {
      noisy.push_back(apply(clean[static_cast<std::size_t>(i)],
                            {DegradationKind::kNoise, intensity, 77 + static_cast<std::uint64_t>(i)}));
    }
    const auto s = scorer.score_batch(noisy, genres);
    scores.insert(scores.end(), s.begin(), s.end());
    intensities.insert(intensities.end(), s.size(), intensity);
    if (intensity == 100.0) {
      for (double v : s) run.worst += v / 100.0;
    }
  }
  const auto r = spearman(scores, intensities);
  run.rho = r.rho;
  run.p = r.p;
  run.pass = r.rho < 0.0 && r.p < 0.05 && run.clean > run.worst;
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

Outcome end_to_end(const Options& opt) {
  int passed = 0;
  std::ostringstream d;
  d << opt.gan_steps << " steps;";
  for (const auto seed : opt.gan_seeds) {
    const auto run = gan_run(seed, opt.gan_steps, opt.work_dir / ("gan_seed" + std::to_string(seed)));
    passed += run.pass;
    d << " seed " << seed << ": rho " << fmt("%.3f", run.rho) << " p " << fmt("%.1e", run.p) << " D clean "
      << fmt("%.3f", run.clean) << " D@100 " << fmt("%.3f", run.worst) << " " << fmt("%.0f", run.seconds) << " s"
      << (run.pass ? " ok;" : " FAIL;");
    std::fprintf(stderr, "  criterion 7 seed %llu done (%s)\n", static_cast<unsigned long long>(seed),
                 run.pass ? "pass" : "fail");
  }
  const int needed = std::min<int>(2, static_cast<int>(opt.gan_seeds.size()));
  return {opt.gan_steps <= 2000 && passed >= needed, d.str() + " " + std::to_string(passed) + "/" +
                                                         std::to_string(opt.gan_seeds.size()) + " seeds"};
}

// 8. Report layout on a synthetic rated population.
Outcome report_shape() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::normal_distribution<double> n(0.0, 0.7);
  std::vector<RatedSegment> pop;
  for (const auto genre : gan::kGenreNames) {
    for (int t = 0; t < 15; ++t) {
      for (DegradationKind k : {DegradationKind::kNone, DegradationKind::kDistortion, DegradationKind::kLowpass,
                                DegradationKind::kLimiter, DegradationKind::kNoise}) {
        RatedSegment s;
        s.genre = std::string(genre);
        s.track_id = s.genre + std::to_string(t / 3);
        s.segment_id = s.track_id + "_" + std::to_string(t) + to_string(k);
        s.degradation = {k, k == DegradationKind::kNone ? 0.0 : u(rng), 0};
        s.median_rating = std::clamp(std::round(4.5 - 0.03 * s.degradation.intensity + n(rng)), 1.0, 5.0);
        s.measures[Measure::kD] = s.median_rating;
        s.measures[Measure::kSf] = -2.0 * s.median_rating;
        s.measures[Measure::kMse] = 1e-3 * s.degradation.intensity;
        pop.push_back(s);
      }
    }
  }
  bool layout = true, exact = true;
  for (const Measure m : {Measure::kD, Measure::kSf}) {
    const auto report = evaluate(pop, m);
    layout = layout && report.rows.size() == 18 && report.rows[17].subset == "All";
    for (std::size_t i = 0; layout && i < 18; ++i) {
      layout = layout && (i < 13 ? report.rows[i].group == "Genre" : i < 17 ? report.rows[i].group == "Degradation"
                                                                              : report.rows[i].group == "All");
    }
    const double want = m == Measure::kD ? 1.0 : -1.0;
    for (const auto& r : report.rows) exact = exact && r.sufficient && std::abs(r.rho - want) < 1e-12;
  }
  const std::vector<Measure> ms{Measure::kIntensity, Measure::kMse, Measure::kD, Measure::kSf};
  const auto mat = pairwise_correlations(pop, ms);
  bool symmetric = mat.rho.size() == ms.size() + 1;
  for (std::size_t i = 0; symmetric && i < mat.rho.size(); ++i) {
    symmetric = symmetric && mat.rho[i][i] == 1.0;
    for (std::size_t j = 0; j < mat.rho.size(); ++j) symmetric = symmetric && mat.rho[i][j] == mat.rho[j][i];
  }
  std::ostringstream d;
  d << "18-row layout " << (layout ? "ok" : "BAD") << ", sanity rows " << (exact ? "exact" : "INEXACT")
    << ", pairwise matrix " << (symmetric ? "symmetric, unit diagonal" : "BAD");
  return {layout && exact && symmetric, d.str()};
}

// 9. CLI byte reproducibility.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Drops the last (wall clock) column of a training log.
std::string without_wall_time(const std::string& log) {
  std::istringstream in(log);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Outcome determinism(const Options& opt) {
  if (opt.cli.empty()) return {false, "no --cli given"};
  const fs::path base = opt.work_dir / "determinism";
  fs::remove_all(base);
  auto sh = [](const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()) == 0; };
  const std::string cli = "\"" + opt.cli + "\"";
  bool ran = true;
  for (const std::string run : {"a", "b"}) {
    const fs::path dir = base / run;
    fs::create_directories(dir);
    write_wav(gan::synth_clip(0, 3.0, 44100, 5), dir / "in.wav");
    ran = ran && sh(cli + " degrade --kind noise --intensity 60 --seed 9 " + (dir / "in.wav").string() + " " +
                    (dir / "noisy.wav").string());
    ran = ran && sh(cli + " synth-corpus --tracks-per-genre 2 --seconds 13 --seed 4 --out-dir " +
                    (dir / "corpus").string());
    ran = ran && sh(cli + " build-dataset --tracks " + (dir / "corpus" / "tracks.csv").string() +
                    " --seed 4 --out-dir " + (dir / "dataset").string());
    ran = ran && sh(cli + " train --profile toy --steps 4 --checkpoint-every 2 --seed 4 --quiet"
                          " --synthetic-tracks 4 --synthetic-seconds 6 --out-dir " +
                    (dir / "train").string());
  }
  if (!ran) return {false, "a CLI invocation failed"};
  std::size_t files = 0;
  std::vector<std::string> differ;
  for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), base / "a");
    const fs::path other = base / "b" / rel;
    std::string x = slurp(entry.path()), y = fs::exists(other) ? slurp(other) : std::string("\x01missing");
    if (rel.filename() == "train_log.csv") {
      x = without_wall_time(x);
      y = without_wall_time(y);
    }
    ++files;
    if (x != y) differ.push_back(rel.string());
  }
  std::ostringstream d;
  d << files << " files compared (degrade, build-dataset, train)";
  if (!differ.empty()) d << ", differing: " << differ.front() << (differ.size() > 1 ? " ..." : "");
  return {differ.empty() && files > 0, d.str()};
}

Options parse_args(int argc, char** argv) {
  Options o;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) throw std::runtime_error("missing value for " + a);
      return argv[++i];
    };
    if (a == "--cli") {
      o.cli = next();
    } else if (a == "--only") {
      o.only = std::stoi(next());
    } else if (a == "--gan-steps") {
      o.gan_steps = std::stoll(next());
    } else if (a == "--gan-seeds") {
      o.gan_seeds.clear();
      std::istringstream in(next());
      for (std::string tok; std::getline(in, tok, ',');) o.gan_seeds.push_back(std::stoull(tok));
    } else if (a == "--work-dir") {
      o.work_dir = next();
    } else {
      throw std::runtime_error("unknown argument " + a);
    }
  }
  return o;
}

}  // namespace
}  // namespace pmqa

int main(int argc, char** argv) {
  using namespace pmqa;
  Options opt;
  try {
    opt = parse_args(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }
  fs::create_directories(opt.work_dir);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient checks", gradients},
      {"spectral normalization", spectral_norm},
      {"DSP oracles", dsp},
      {"frontend exactness", frontend},
      {"rank statistics", rank_statistics},
      {"dataset shape", dataset_shape},
      {"desk-scale GAN", [&] { return end_to_end(opt); }},
      {"report shape", report_shape},
      {"determinism", [&] { return determinism(opt); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (opt.only && opt.only != static_cast<int>(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %zu %s: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
