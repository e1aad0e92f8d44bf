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

#ifndef PMQA_DATASET_HPP_
#define PMQA_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pmqa/audio.hpp"
#include "pmqa/degradations.hpp"

namespace pmqa::dataset {

struct SourceTrack {
  std::string track_id;
  std::string genre;
  double duration_s = 0.0;
  std::filesystem::path audio_path;
};

struct TrackSplit {
  std::vector<SourceTrack> train;
  std::vector<SourceTrack> test;
  std::vector<SourceTrack> reserved;
};

// Per-genre uniform split of a catalog into training, listening-test and
// reserved tracks. Each genre's count is divided by largest remainder, so
// every genre keeps the fractions as closely as its size allows. Genres are
// processed in name order and tracks keep their catalog order within a
// part. Throws InvalidArgument unless 0 <= train, test and train + test <= 1.
TrackSplit split_tracks(std::span<const SourceTrack> tracks, std::uint64_t seed, double train_fraction = 0.80,
                        double test_fraction = 0.03);

struct SegmentRecord {
  std::string segment_id;
  std::string track_id;
  std::string genre;
  double start_s = 0.0;
  double duration_s = 4.0;
  DegradationSpec degradation;
  std::filesystem::path audio_path;
  std::optional<double> median_rating;
};

struct SegmentOptions {
  int windows_per_track = 3;
  double window_s = 4.0;
};

// For every track, windows_per_track non-overlapping windows placed
// uniformly at random (sorted uniform offsets over the slack, then packed),
// each expanded into the original plus one variant per degradation with a
// uniform intensity in [0, 100]. Starts are rounded to 1 ms and intensities
// to 0.001 so that manifests round-trip exactly. Ids are
// "<track>_s<window>_<kind>". Throws InvalidArgument if a track is shorter
// than windows_per_track * window_s.
std::vector<SegmentRecord> build_segments(std::span<const SourceTrack> tracks, std::uint64_t seed,
                                          const SegmentOptions& options = {});

// Cuts the record's window from its source track and applies its
// degradation.
AudioBuffer render_segment(const AudioBuffer& track, const SegmentRecord& record);

struct RatingTask {
  std::string task_id;
  std::vector<std::string> segment_ids;
};

// ceil(min_coverage * n / task_size) tasks of task_size distinct segments.
// The slot sequence is min_coverage shuffled copies of the segment list,
// topped up with the least covered segments; it is cut into tasks and
// within-task duplicates are removed by swapping with other tasks. Throws
// InvalidArgument when task_size exceeds the number of distinct segments.
std::vector<RatingTask> assign_tasks(std::span<const std::string> segment_ids, int task_size,
                                     int min_coverage, std::uint64_t seed);

struct Submission {
  std::string task_id;
  std::string participant_id;
  std::string device;
  double elapsed_s = 0.0;
  std::map<std::string, int> ratings;  // segment id -> 1..5
};

enum class RejectReason {
  kNone,
  kRepeatParticipant,
  kDevice,
  kTooFast,
  kUniformRatings,
  kMalformed,
};
std::string to_string(RejectReason reason);

struct Verdict {
  bool accepted = true;
  RejectReason reason = RejectReason::kNone;
  std::string detail;
};

inline constexpr double kUniformRatingSpan = 50.0;

class SegmentCatalog {
 public:
  explicit SegmentCatalog(std::span<const SegmentRecord> segments);
  // Throws InvalidArgument for an unknown id.
  const SegmentRecord& at(const std::string& segment_id) const;
  bool contains(const std::string& segment_id) const { return index_.count(segment_id) > 0; }

 private:
  std::map<std::string, SegmentRecord> index_;
};

// Rules, first match wins: the participant is in `history`; the device is
// neither "speaker" nor "headphones"; elapsed time is below the summed
// segment durations; every rating is equal while the task's intensities
// (None counting as 0) span at least kUniformRatingSpan. A submission that
// does not rate exactly the task's segments with integers 1..5 is malformed.
Verdict validate_submission(const Submission& submission, const RatingTask& task,
                            const std::set<std::string>& history, const SegmentCatalog& catalog);

// Validates a whole batch. A participant's history is every other
// submission in the batch plus `prior`, so repeat submitters lose all their
// submissions and the result does not depend on order. Throws
// InvalidArgument for an unknown task id.
std::vector<Verdict> validate_batch(std::span<const Submission> submissions,
                                    std::span<const RatingTask> tasks, const SegmentCatalog& catalog,
                                    const std::set<std::string>& prior = {});

struct Aggregate {
  std::vector<SegmentRecord> segments;  // median_rating set where rated
  std::vector<std::string> unrated;     // ids with no accepted rating
  std::map<std::string, std::vector<int>> ratings;
};

// Median of the accepted ratings per segment; segments without any are
// listed in `unrated` and keep an empty median.
Aggregate aggregate_submissions(std::span<const Submission> accepted,
                                std::span<const SegmentRecord> segments);

// Manifest CSV: segment_id, track_id, genre, start_s, duration_s,
// degradation_kind, intensity, seed, audio_path, median_rating.
void write_manifest(const std::filesystem::path& path, std::span<const SegmentRecord> segments);
std::vector<SegmentRecord> read_manifest(const std::filesystem::path& path);

// Tracks CSV: track_id, genre, audio_path (relative paths resolve against
// the CSV's directory); durations are read from the WAV files.
std::vector<SourceTrack> read_tracks(const std::filesystem::path& path);
void write_tracks(const std::filesystem::path& path, std::span<const SourceTrack> tracks);

// Tasks CSV: task_id, slot, segment_id.
void write_tasks(const std::filesystem::path& path, std::span<const RatingTask> tasks);
std::vector<RatingTask> read_tasks(const std::filesystem::path& path);

// Submissions as long CSV (task_id, participant_id, device, elapsed_s,
// segment_id, rating) or JSON lines with a "ratings" object. The format is
// chosen by extension (.jsonl / .json for JSON lines).
void write_submissions(const std::filesystem::path& path, std::span<const Submission> submissions);
std::vector<Submission> read_submissions(const std::filesystem::path& path);

// Test fixture: one simulated listener per task, rating each segment as a
// decreasing function of its degradation intensity plus Gaussian noise.
std::vector<Submission> simulate_submissions(std::span<const RatingTask> tasks,
                                             const SegmentCatalog& catalog, std::uint64_t seed);
// Deterministic rating model behind simulate_submissions, before noise.
double expected_rating(const DegradationSpec& degradation);

}  // namespace pmqa::dataset

#endif  // PMQA_DATASET_HPP_
