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

#include "pmqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pmqa/csv.hpp"
#include "pmqa/error.hpp"
#include "pmqa/evaluation.hpp"

namespace pmqa::dataset {

namespace {

// Divides by the integer scale so the result is the double nearest the
// decimal, which is what a %.3f round trip reads back.
double round_to(double v, double scale) { return std::round(v * scale) / scale; }

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t idx = 0;
    const double v = std::stod(s, &idx);
    if (idx != s.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw FormatError("cannot parse " + what + " '" + s + "'");
  }
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t idx = 0;
    const unsigned long long v = std::stoull(s, &idx);
    if (idx != s.size() || (!s.empty() && s[0] == '-')) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw FormatError("cannot parse " + what + " '" + s + "'");
  }
}

bool is_json_lines(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json";
}

double intensity_or_zero(const DegradationSpec& d) {
  return d.kind == DegradationKind::kNone ? 0.0 : d.intensity;
}

}  // namespace

std::vector<SegmentRecord> build_segments(std::span<const SourceTrack> tracks, std::uint64_t seed,
                                          const SegmentOptions& options) {
  if (options.windows_per_track < 1 || !(options.window_s > 0)) {
    throw InvalidArgument("build_segments: need at least one window of positive length");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SegmentRecord> out;
  out.reserve(tracks.size() * static_cast<std::size_t>(options.windows_per_track) * 5);
  const double needed = options.windows_per_track * options.window_s;
  for (const auto& track : tracks) {
    if (track.duration_s < needed) {
      throw InvalidArgument("track '" + track.track_id + "' lasts " + fixed3(track.duration_s) +
                            " s; " + std::to_string(options.windows_per_track) +
                            " non-overlapping windows need " + fixed3(needed) + " s");
    }
    // Sorted offsets in the slack, shifted by the windows already placed,
    // give uniformly distributed non-overlapping windows.
    const double slack = track.duration_s - needed;
    std::vector<double> offsets(static_cast<std::size_t>(options.windows_per_track));
    for (auto& o : offsets) o = unit(rng) * slack;
    std::sort(offsets.begin(), offsets.end());
    for (std::size_t w = 0; w < offsets.size(); ++w) {
      double start = offsets[w] + static_cast<double>(w) * options.window_s;
      // Rounding down keeps the window inside the track.
      start = std::floor(start * 1000.0) / 1000.0;
      const std::string base = track.track_id + "_s" + std::to_string(w);
      SegmentRecord original{base + "_none", track.track_id, track.genre, start, options.window_s,
                             DegradationSpec{}, {}, std::nullopt};
      out.push_back(original);
      for (DegradationKind kind : kDegradationKinds) {
        SegmentRecord r = original;
        r.segment_id = base + "_" + to_string(kind);
        r.degradation.kind = kind;
        r.degradation.intensity = std::min(100.0, round_to(unit(rng) * 100.0, 1000.0));
        const std::uint64_t noise_seed = rng();
        r.degradation.seed = kind == DegradationKind::kNoise ? noise_seed : 0;
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

AudioBuffer render_segment(const AudioBuffer& track, const SegmentRecord& record) {
  return apply(extract_segment(track, record.start_s, record.duration_s), record.degradation);
}

std::vector<RatingTask> assign_tasks(std::span<const std::string> segment_ids, int task_size,
                                     int min_coverage, std::uint64_t seed) {
  if (task_size < 1 || min_coverage < 1) {
    throw InvalidArgument("assign_tasks: task_size and min_coverage must be positive");
  }
  const std::set<std::string> distinct(segment_ids.begin(), segment_ids.end());
  if (distinct.size() != segment_ids.size()) throw InvalidArgument("assign_tasks: duplicate segment ids");
  const std::size_t n = segment_ids.size();
  const auto size = static_cast<std::size_t>(task_size);
  if (size > n) {
    throw InvalidArgument("assign_tasks: task size " + std::to_string(task_size) + " exceeds the " +
                          std::to_string(n) + " available segments");
  }
  std::mt19937_64 rng(seed);
  const std::size_t required = n * static_cast<std::size_t>(min_coverage);
  const std::size_t task_count = (required + size - 1) / size;

  std::vector<std::size_t> slots;
  slots.reserve(task_count * size);
  std::vector<std::size_t> copy(n);
  for (int c = 0; c < min_coverage; ++c) {
    std::iota(copy.begin(), copy.end(), 0);
    std::shuffle(copy.begin(), copy.end(), rng);
    slots.insert(slots.end(), copy.begin(), copy.end());
  }
  // Every segment has the same coverage here, so the least covered are a
  // random subset; taking distinct ones keeps the top-up balanced.
  std::iota(copy.begin(), copy.end(), 0);
  std::shuffle(copy.begin(), copy.end(), rng);
  slots.insert(slots.end(), copy.begin(), copy.begin() + static_cast<std::ptrdiff_t>(task_count * size - required));

  std::vector<std::vector<std::size_t>> tasks(task_count);
  std::vector<std::map<std::size_t, int>> counts(task_count);
  for (std::size_t t = 0; t < task_count; ++t) {
    tasks[t].assign(slots.begin() + static_cast<std::ptrdiff_t>(t * size),
                    slots.begin() + static_cast<std::ptrdiff_t>((t + 1) * size));
    for (auto s : tasks[t]) ++counts[t][s];
  }
  for (std::size_t t = 0; t < task_count; ++t) {
    for (std::size_t p = 0; p < size; ++p) {
      const std::size_t s = tasks[t][p];
      if (counts[t][s] < 2) continue;
      bool fixed = false;
      for (std::size_t step = 1; step < task_count && !fixed; ++step) {
        const std::size_t u = (t + step) % task_count;
        if (counts[u].count(s) && counts[u][s] > 0) continue;
        for (std::size_t q = 0; q < size; ++q) {
          const std::size_t other = tasks[u][q];
          if (counts[t].count(other) && counts[t][other] > 0) continue;
          std::swap(tasks[t][p], tasks[u][q]);
          --counts[t][s];
          ++counts[t][other];
          --counts[u][other];
          ++counts[u][s];
          fixed = true;
          break;
        }
      }
      if (!fixed) throw Error("assign_tasks: could not remove a duplicate from task " + std::to_string(t));
    }
  }

  std::vector<RatingTask> out(task_count);
  const int digits = std::max<int>(4, static_cast<int>(std::to_string(task_count).size()));
  for (std::size_t t = 0; t < task_count; ++t) {
    std::string num = std::to_string(t + 1);
    out[t].task_id = "t" + std::string(static_cast<std::size_t>(digits) - std::min<std::size_t>(digits, num.size()), '0') + num;
    for (auto s : tasks[t]) out[t].segment_ids.push_back(segment_ids[s]);
  }
  return out;
}

std::string to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNone: return "accepted";
    case RejectReason::kRepeatParticipant: return "repeat_participant";
    case RejectReason::kDevice: return "device";
    case RejectReason::kTooFast: return "too_fast";
    case RejectReason::kUniformRatings: return "uniform_ratings";
    case RejectReason::kMalformed: return "malformed";
  }
  return "unknown";
}

SegmentCatalog::SegmentCatalog(std::span<const SegmentRecord> segments) {
  for (const auto& s : segments) {
    if (!index_.emplace(s.segment_id, s).second) {
      throw InvalidArgument("duplicate segment id '" + s.segment_id + "'");
    }
  }
}

const SegmentRecord& SegmentCatalog::at(const std::string& segment_id) const {
  auto it = index_.find(segment_id);
  if (it == index_.end()) throw InvalidArgument("unknown segment id '" + segment_id + "'");
  return it->second;
}

Verdict validate_submission(const Submission& submission, const RatingTask& task,
                            const std::set<std::string>& history, const SegmentCatalog& catalog) {
  const auto reject = [](RejectReason reason, std::string detail) {
    return Verdict{false, reason, std::move(detail)};
  };
  if (submission.task_id != task.task_id) {
    throw InvalidArgument("submission for task '" + submission.task_id + "' checked against task '" +
                          task.task_id + "'");
  }
  if (history.count(submission.participant_id)) {
    return reject(RejectReason::kRepeatParticipant,
                  "participant " + submission.participant_id + " submitted more than once");
  }
  if (submission.device != "speaker" && submission.device != "headphones") {
    return reject(RejectReason::kDevice, "device '" + submission.device + "'");
  }
  double total = 0.0;
  double lo = 100.0, hi = 0.0;
  for (const auto& id : task.segment_ids) {
    const SegmentRecord& s = catalog.at(id);
    total += s.duration_s;
    lo = std::min(lo, intensity_or_zero(s.degradation));
    hi = std::max(hi, intensity_or_zero(s.degradation));
  }
  if (submission.elapsed_s < total) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "elapsed %.1f s < %.1f s of audio", submission.elapsed_s, total);
    return reject(RejectReason::kTooFast, buf);
  }
  if (submission.ratings.size() != task.segment_ids.size()) {
    return reject(RejectReason::kMalformed, "rated " + std::to_string(submission.ratings.size()) +
                                                " of " + std::to_string(task.segment_ids.size()) + " segments");
  }
  for (const auto& id : task.segment_ids) {
    auto it = submission.ratings.find(id);
    if (it == submission.ratings.end()) return reject(RejectReason::kMalformed, "no rating for " + id);
    if (it->second < 1 || it->second > 5) {
      return reject(RejectReason::kMalformed, "rating " + std::to_string(it->second) + " for " + id);
    }
  }
  const int first = submission.ratings.begin()->second;
  const bool uniform = std::all_of(submission.ratings.begin(), submission.ratings.end(),
                                   [&](const auto& kv) { return kv.second == first; });
  if (uniform && hi - lo >= kUniformRatingSpan) {
    return reject(RejectReason::kUniformRatings,
                  "all ratings " + std::to_string(first) + " over an intensity span of " + fixed3(hi - lo));
  }
  return {};
}

std::vector<Verdict> validate_batch(std::span<const Submission> submissions,
                                    std::span<const RatingTask> tasks, const SegmentCatalog& catalog,
                                    const std::set<std::string>& prior) {
  std::map<std::string, const RatingTask*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  std::map<std::string, int> per_participant;
  for (const auto& s : submissions) ++per_participant[s.participant_id];
  std::vector<Verdict> out;
  out.reserve(submissions.size());
  for (const auto& s : submissions) {
    auto it = by_id.find(s.task_id);
    if (it == by_id.end()) throw InvalidArgument("submission for unknown task '" + s.task_id + "'");
    std::set<std::string> history = prior;
    if (per_participant[s.participant_id] > 1) history.insert(s.participant_id);
    out.push_back(validate_submission(s, *it->second, history, catalog));
  }
  return out;
}

Aggregate aggregate_submissions(std::span<const Submission> accepted,
                                std::span<const SegmentRecord> segments) {
  Aggregate agg;
  for (const auto& sub : accepted) {
    for (const auto& [id, rating] : sub.ratings) agg.ratings[id].push_back(rating);
  }
  for (auto& [id, list] : agg.ratings) std::sort(list.begin(), list.end());
  agg.segments.assign(segments.begin(), segments.end());
  for (auto& s : agg.segments) {
    auto it = agg.ratings.find(s.segment_id);
    if (it == agg.ratings.end() || it->second.empty()) {
      s.median_rating.reset();
      agg.unrated.push_back(s.segment_id);
      continue;
    }
    std::vector<double> values(it->second.begin(), it->second.end());
    s.median_rating = median_rating(values);
  }
  return agg;
}

void write_manifest(const std::filesystem::path& path, std::span<const SegmentRecord> segments) {
  csv::Table t;
  t.header = {"segment_id", "track_id", "genre", "start_s", "duration_s", "degradation_kind",
              "intensity", "seed", "audio_path", "median_rating"};
  for (const auto& s : segments) {
    std::string median;
    if (s.median_rating) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", *s.median_rating);
      median = buf;
    }
    t.rows.push_back({s.segment_id, s.track_id, s.genre, fixed3(s.start_s), fixed3(s.duration_s),
                      to_string(s.degradation.kind), fixed3(s.degradation.intensity),
                      std::to_string(s.degradation.seed), s.audio_path.generic_string(), median});
  }
  csv::write(path, t);
}

std::vector<SegmentRecord> read_manifest(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c_id = t.column("segment_id"), c_track = t.column("track_id"),
                    c_genre = t.column("genre"), c_start = t.column("start_s"),
                    c_dur = t.column("duration_s"), c_kind = t.column("degradation_kind"),
                    c_int = t.column("intensity"), c_seed = t.column("seed"),
                    c_path = t.column("audio_path"), c_med = t.column("median_rating");
  std::vector<SegmentRecord> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    SegmentRecord s;
    s.segment_id = row[c_id];
    s.track_id = row[c_track];
    s.genre = row[c_genre];
    s.start_s = parse_double(row[c_start], "start_s");
    s.duration_s = parse_double(row[c_dur], "duration_s");
    try {
      s.degradation.kind = parse_degradation_kind(row[c_kind]);
    } catch (const InvalidArgument& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    s.degradation.intensity = parse_double(row[c_int], "intensity");
    s.degradation.seed = parse_u64(row[c_seed], "seed");
    s.audio_path = row[c_path];
    if (!row[c_med].empty()) s.median_rating = parse_double(row[c_med], "median_rating");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SourceTrack> read_tracks(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c_id = t.column("track_id"), c_genre = t.column("genre"),
                    c_path = t.column("audio_path");
  std::vector<SourceTrack> out;
  for (const auto& row : t.rows) {
    std::filesystem::path audio = row[c_path];
    if (audio.is_relative()) audio = path.parent_path() / audio;
    const AudioBuffer buffer = read_wav(audio);
    out.push_back({row[c_id], row[c_genre], buffer.duration_seconds(), audio});
  }
  return out;
}

void write_tracks(const std::filesystem::path& path, std::span<const SourceTrack> tracks) {
  csv::Table t;
  t.header = {"track_id", "genre", "audio_path"};
  for (const auto& tr : tracks) t.rows.push_back({tr.track_id, tr.genre, tr.audio_path.string()});
  csv::write(path, t);
}

TrackSplit split_tracks(std::span<const SourceTrack> tracks, std::uint64_t seed, double train_fraction,
                        double test_fraction) {
  if (!(train_fraction >= 0.0 && test_fraction >= 0.0 && train_fraction + test_fraction <= 1.0)) {
    throw InvalidArgument("split fractions must be non-negative and sum to at most 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_genre;
  for (std::size_t i = 0; i < tracks.size(); ++i) by_genre[tracks[i].genre].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<int> part(tracks.size(), 2);
  const double fractions[3] = {train_fraction, test_fraction, 1.0 - train_fraction - test_fraction};
  for (auto& [genre, idx] : by_genre) {
    const double n = static_cast<double>(idx.size());
    std::size_t counts[3], assigned = 0;
    double rem[3];
    for (int k = 0; k < 3; ++k) {
      counts[k] = static_cast<std::size_t>(std::floor(n * fractions[k] + 1e-9));
      rem[k] = n * fractions[k] - static_cast<double>(counts[k]);
      assigned += counts[k];
    }
    while (assigned < idx.size()) {
      int best = 0;
      for (int k = 1; k < 3; ++k) {
        if (rem[k] > rem[best] + 1e-12) best = k;
      }
      ++counts[best];
      rem[best] = -1.0;
      ++assigned;
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t at = 0;
    for (int k = 0; k < 3; ++k) {
      for (std::size_t j = 0; j < counts[k]; ++j) part[idx[at++]] = k;
    }
  }
  TrackSplit out;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    (part[i] == 0 ? out.train : part[i] == 1 ? out.test : out.reserved).push_back(tracks[i]);
  }
  return out;
}

void write_tasks(const std::filesystem::path& path, std::span<const RatingTask> tasks) {
  csv::Table t;
  t.header = {"task_id", "slot", "segment_id"};
  for (const auto& task : tasks) {
    for (std::size_t i = 0; i < task.segment_ids.size(); ++i) {
      t.rows.push_back({task.task_id, std::to_string(i), task.segment_ids[i]});
    }
  }
  csv::write(path, t);
}

std::vector<RatingTask> read_tasks(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::size_t c_task = t.column("task_id"), c_seg = t.column("segment_id");
  std::vector<RatingTask> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : t.rows) {
    auto [it, inserted] = index.emplace(row[c_task], out.size());
    if (inserted) out.push_back({row[c_task], {}});
    out[it->second].segment_ids.push_back(row[c_seg]);
  }
  return out;
}

void write_submissions(const std::filesystem::path& path, std::span<const Submission> submissions) {
  if (is_json_lines(path)) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string());
    for (const auto& s : submissions) {
      nlohmann::ordered_json j;
      j["task_id"] = s.task_id;
      j["participant_id"] = s.participant_id;
      j["device"] = s.device;
      j["elapsed_s"] = s.elapsed_s;
      j["ratings"] = nlohmann::ordered_json::object();
      for (const auto& [id, r] : s.ratings) j["ratings"][id] = r;
      out << j.dump() << '\n';
    }
    return;
  }
  csv::Table t;
  t.header = {"task_id", "participant_id", "device", "elapsed_s", "segment_id", "rating"};
  for (const auto& s : submissions) {
    for (const auto& [id, r] : s.ratings) {
      t.rows.push_back({s.task_id, s.participant_id, s.device, fixed3(s.elapsed_s), id, std::to_string(r)});
    }
  }
  csv::write(path, t);
}

std::vector<Submission> read_submissions(const std::filesystem::path& path) {
  std::vector<Submission> out;
  if (is_json_lines(path)) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        Submission s;
        s.task_id = j.at("task_id").get<std::string>();
        s.participant_id = j.at("participant_id").get<std::string>();
        s.device = j.at("device").get<std::string>();
        s.elapsed_s = j.at("elapsed_s").get<double>();
        for (const auto& [id, r] : j.at("ratings").items()) s.ratings[id] = r.get<int>();
        out.push_back(std::move(s));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    return out;
  }
  const csv::Table t = csv::read(path);
  const std::size_t c_task = t.column("task_id"), c_part = t.column("participant_id"),
                    c_dev = t.column("device"), c_el = t.column("elapsed_s"),
                    c_seg = t.column("segment_id"), c_r = t.column("rating");
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& row : t.rows) {
    const auto key = std::make_pair(row[c_task], row[c_part]);
    auto [it, inserted] = index.emplace(key, out.size());
    if (inserted) {
      out.push_back({row[c_task], row[c_part], row[c_dev], parse_double(row[c_el], "elapsed_s"), {}});
    }
    const double r = parse_double(row[c_r], "rating");
    if (r != std::floor(r)) throw FormatError("rating '" + row[c_r] + "' is not an integer");
    out[it->second].ratings[row[c_seg]] = static_cast<int>(r);
  }
  return out;
}

double expected_rating(const DegradationSpec& degradation) {
  double weight = 0.0;
  switch (degradation.kind) {
    case DegradationKind::kNone: weight = 0.0; break;
    case DegradationKind::kNoise: weight = 3.4; break;
    case DegradationKind::kDistortion: weight = 2.6; break;
    case DegradationKind::kLowpass: weight = 2.0; break;
    case DegradationKind::kLimiter: weight = 1.0; break;
  }
  return std::clamp(4.6 - weight * intensity_or_zero(degradation) / 100.0, 1.0, 5.0);
}

std::vector<Submission> simulate_submissions(std::span<const RatingTask> tasks,
                                             const SegmentCatalog& catalog, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Submission> out;
  out.reserve(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    Submission s;
    s.task_id = tasks[t].task_id;
    char pid[32];
    std::snprintf(pid, sizeof(pid), "p%05zu", t + 1);
    s.participant_id = pid;
    s.device = unit(rng) < 0.5 ? "speaker" : "headphones";
    double total = 0.0;
    for (const auto& id : tasks[t].segment_ids) {
      const SegmentRecord& seg = catalog.at(id);
      total += seg.duration_s;
      const double r = std::round(expected_rating(seg.degradation) + noise(rng));
      s.ratings[id] = static_cast<int>(std::clamp(r, 1.0, 5.0));
    }
    s.elapsed_s = round_to(total + 5.0 + 60.0 * unit(rng), 1000.0);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pmqa::dataset
