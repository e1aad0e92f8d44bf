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

#ifndef PMQA_EVALUATION_HPP_
#define PMQA_EVALUATION_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmqa/degradations.hpp"

namespace pmqa {

// Quality measures compared against the median rating. kRating is the rating
// itself, used as the first row/column of correlation matrices.
enum class Measure { kRating, kIntensity, kMse, kD, kSf, kSf16k };

// "R", "I", "MSE", "D", "SF", "SF16k".
std::string to_string(Measure measure);
Measure parse_measure(std::string_view name);

struct RatedSegment {
  std::string segment_id;
  std::string track_id;
  std::string genre;
  DegradationSpec degradation;
  double median_rating = 0.0;
  std::map<Measure, double> measures;

  // Rating and intensity come from the record itself; other measures from
  // the map. Throws InvalidArgument when missing.
  double value(Measure measure) const;
  bool has(Measure measure) const;
};

// Throws InvalidArgument on an empty list. Even counts average the middle
// pair.
double median_rating(std::span<const double> ratings);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct SpearmanResult {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

// Pearson correlation of average ranks with a two-sided p-value: exhaustive
// permutation for n <= 10, a seeded 100000-draw permutation test for
// 10 < n < 20, and the Student t approximation with n - 2 degrees of freedom
// for n >= 20 (p floored at the smallest positive double). Throws
// StatisticsError for n < 3 or a constant input, InvalidArgument for a
// length mismatch.
SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys);

struct ReportRow {
  std::string group;   // "Genre", "Degradation" or "All"
  std::string subset;  // genre name, degradation name or "All"
  Measure measure = Measure::kD;
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  // False when the subset has fewer than 3 segments or a constant column;
  // rho and p are then NaN and `note` says why.
  bool sufficient = true;
  std::string note;
};

struct EvalReport {
  std::vector<ReportRow> rows;
};

// Subsets in report order. If every segment's genre is a catalog genre the
// 13 catalog genres are listed in catalog order (absent ones report n = 0);
// otherwise the distinct genres sorted by name.
std::vector<std::string> report_genres(std::span<const RatedSegment> segments);

// Degradation subset names as printed: Distortion, Limiter, Lowpass, Noise.
std::string degradation_label(DegradationKind kind);

// Spearman correlation between `measure` and the median rating for every
// genre subset (all variants), every degradation subset (degraded segments
// only) and all segments.
EvalReport evaluate(std::span<const RatedSegment> segments, Measure measure);

// Same rows for correlations between two arbitrary measures (used for the
// per-subset correlation tables).
EvalReport evaluate_pair(std::span<const RatedSegment> segments, Measure a, Measure b);

struct CorrelationMatrix {
  std::vector<Measure> labels;
  std::vector<std::vector<double>> rho;
};

// Symmetric matrix of Spearman rho over the rating followed by `measures`,
// with a unit diagonal.
CorrelationMatrix pairwise_correlations(std::span<const RatedSegment> segments,
                                        std::span<const Measure> measures);

// CSV "group,subset,measure,rho,p,n,note" and an aligned text table.
std::string report_csv(const EvalReport& report);
std::string report_table(const EvalReport& report);
std::string matrix_csv(const CorrelationMatrix& matrix);

}  // namespace pmqa

#endif  // PMQA_EVALUATION_HPP_
