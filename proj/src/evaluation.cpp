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

#include "pmqa/evaluation.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "pmqa/csv.hpp"
#include "pmqa/error.hpp"
#include "pmqa/gan/config.hpp"

namespace pmqa {

namespace {

constexpr std::size_t kExactMaxN = 10;
constexpr std::size_t kAsymptoticMinN = 20;
constexpr int kPermutationDraws = 100000;
constexpr std::uint64_t kPermutationSeed = 0x5eed5eedull;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

// Centered values and their norm.
std::vector<double> centered(const std::vector<double>& v, double& norm) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> out(v.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - mean;
    ss += out[i] * out[i];
  }
  norm = std::sqrt(ss);
  return out;
}

double permuted_dot(const std::vector<double>& a, const std::vector<double>& b,
                    const std::vector<std::size_t>& perm) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[perm[i]];
  return acc;
}

}  // namespace

std::string to_string(Measure measure) {
  switch (measure) {
    case Measure::kRating: return "R";
    case Measure::kIntensity: return "I";
    case Measure::kMse: return "MSE";
    case Measure::kD: return "D";
    case Measure::kSf: return "SF";
    case Measure::kSf16k: return "SF16k";
  }
  return "?";
}

Measure parse_measure(std::string_view name) {
  for (Measure m : {Measure::kRating, Measure::kIntensity, Measure::kMse, Measure::kD, Measure::kSf,
                    Measure::kSf16k}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument("unknown measure '" + std::string(name) + "' (expected R, I, MSE, D, SF or SF16k)");
}

double RatedSegment::value(Measure measure) const {
  if (measure == Measure::kRating) return median_rating;
  if (measure == Measure::kIntensity) {
    return degradation.kind == DegradationKind::kNone ? 0.0 : degradation.intensity;
  }
  auto it = measures.find(measure);
  if (it == measures.end()) {
    throw InvalidArgument("segment '" + segment_id + "' has no " + to_string(measure) + " value");
  }
  return it->second;
}

bool RatedSegment::has(Measure measure) const {
  return measure == Measure::kRating || measure == Measure::kIntensity || measures.count(measure) > 0;
}

double median_rating(std::span<const double> ratings) {
  if (ratings.empty()) throw InvalidArgument("median of an empty rating list");
  std::vector<double> v(ratings.begin(), ratings.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean(i+1..j+1).
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw InvalidArgument("spearman: lengths differ (" + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  }
  const std::size_t n = xs.size();
  if (n < 3) throw StatisticsError("spearman needs at least 3 pairs, got " + std::to_string(n));
  for (auto v : {xs, ys}) {
    for (double x : v) {
      if (!std::isfinite(x)) throw StatisticsError("spearman: non-finite input");
    }
  }
  double nx = 0.0, ny = 0.0;
  const std::vector<double> rx = centered(average_ranks(xs), nx);
  const std::vector<double> ry = centered(average_ranks(ys), ny);
  if (nx == 0.0 || ny == 0.0) throw StatisticsError("spearman: correlation undefined for a constant input");
  const double denom = nx * ny;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  SpearmanResult r;
  r.n = n;
  r.rho = std::clamp(permuted_dot(rx, ry, perm) / denom, -1.0, 1.0);
  const double observed = std::abs(r.rho) - 1e-12;

  if (n <= kExactMaxN) {
    std::size_t extreme = 0, total = 0;
    do {
      ++total;
      if (std::abs(permuted_dot(rx, ry, perm) / denom) >= observed) ++extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    r.p = static_cast<double>(extreme) / static_cast<double>(total);
  } else if (n < kAsymptoticMinN) {
    std::mt19937_64 rng(kPermutationSeed);
    std::size_t extreme = 0;
    for (int i = 0; i < kPermutationDraws; ++i) {
      std::shuffle(perm.begin(), perm.end(), rng);
      if (std::abs(permuted_dot(rx, ry, perm) / denom) >= observed) ++extreme;
    }
    r.p = static_cast<double>(extreme + 1) / static_cast<double>(kPermutationDraws + 1);
  } else {
    const double dof = static_cast<double>(n - 2);
    const double one_minus = 1.0 - r.rho * r.rho;
    if (one_minus <= 0.0) {
      r.p = DBL_MIN;
    } else {
      const double t = std::abs(r.rho) * std::sqrt(dof / one_minus);
      const boost::math::students_t dist(dof);
      r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), DBL_MIN, 1.0);
    }
  }
  return r;
}

std::vector<std::string> report_genres(std::span<const RatedSegment> segments) {
  std::set<std::string> present;
  bool catalog = true;
  for (const auto& s : segments) {
    present.insert(s.genre);
    if (gan::genre_id(s.genre) < 0) catalog = false;
  }
  if (catalog) return std::vector<std::string>(gan::kGenreNames.begin(), gan::kGenreNames.end());
  return std::vector<std::string>(present.begin(), present.end());
}

std::string degradation_label(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::kDistortion: return "Distortion";
    case DegradationKind::kLimiter: return "Limiter";
    case DegradationKind::kLowpass: return "Lowpass";
    case DegradationKind::kNoise: return "Noise";
    case DegradationKind::kNone: return "None";
  }
  return "None";
}

namespace {

ReportRow correlate(std::string group, std::string subset, Measure reported,
                    const std::vector<const RatedSegment*>& members, Measure a, Measure b) {
  ReportRow row;
  row.group = std::move(group);
  row.subset = std::move(subset);
  row.measure = reported;
  row.n = members.size();
  std::vector<double> xs, ys;
  for (const RatedSegment* s : members) {
    xs.push_back(s->value(a));
    ys.push_back(s->value(b));
  }
  try {
    const SpearmanResult r = spearman(xs, ys);
    row.rho = r.rho;
    row.p = r.p;
  } catch (const StatisticsError&) {
    row.sufficient = false;
    row.rho = nan();
    row.p = nan();
    row.note = members.size() < 3 ? "insufficient: fewer than 3 segments" : "insufficient: constant input";
  }
  return row;
}

EvalReport build_report(std::span<const RatedSegment> segments, Measure reported, Measure a, Measure b) {
  EvalReport report;
  for (const std::string& genre : report_genres(segments)) {
    std::vector<const RatedSegment*> members;
    for (const auto& s : segments) {
      if (s.genre == genre) members.push_back(&s);
    }
    report.rows.push_back(correlate("Genre", genre, reported, members, a, b));
  }
  for (DegradationKind kind : {DegradationKind::kDistortion, DegradationKind::kLimiter,
                               DegradationKind::kLowpass, DegradationKind::kNoise}) {
    std::vector<const RatedSegment*> members;
    for (const auto& s : segments) {
      if (s.degradation.kind == kind) members.push_back(&s);
    }
    report.rows.push_back(correlate("Degradation", degradation_label(kind), reported, members, a, b));
  }
  std::vector<const RatedSegment*> all;
  for (const auto& s : segments) all.push_back(&s);
  report.rows.push_back(correlate("All", "All", reported, all, a, b));
  return report;
}

std::string format_number(double v, const char* fmt) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const RatedSegment> segments, Measure measure) {
  return build_report(segments, measure, measure, Measure::kRating);
}

EvalReport evaluate_pair(std::span<const RatedSegment> segments, Measure a, Measure b) {
  return build_report(segments, a, a, b);
}

CorrelationMatrix pairwise_correlations(std::span<const RatedSegment> segments,
                                        std::span<const Measure> measures) {
  CorrelationMatrix m;
  m.labels.push_back(Measure::kRating);
  for (Measure x : measures) {
    if (x != Measure::kRating) m.labels.push_back(x);
  }
  const std::size_t k = m.labels.size();
  std::vector<std::vector<double>> columns(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (const auto& s : segments) columns[i].push_back(s.value(m.labels[i]));
  }
  m.rho.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double r = spearman(columns[i], columns[j]).rho;
      m.rho[i][j] = r;
      m.rho[j][i] = r;
    }
  }
  return m;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "group,subset,measure,rho,p,n,note\n";
  for (const auto& r : report.rows) {
    os << csv::format_row({r.group, r.subset, to_string(r.measure), format_number(r.rho, "%.6f"),
                           format_number(r.p, "%.6e"), std::to_string(r.n), r.note});
  }
  return os.str();
}

std::string report_table(const EvalReport& report) {
  std::ostringstream os;
  std::size_t width = 6;
  for (const auto& r : report.rows) width = std::max(width, r.subset.size());
  char line[256];
  std::string group;
  std::string measure = report.rows.empty() ? "" : to_string(report.rows.front().measure);
  std::snprintf(line, sizeof(line), "%*s  %11s  %12s  %5s\n", static_cast<int>(width), "Subset",
                "Correlation", "p-value", "n");
  os << "Measure " << measure << '\n' << line;
  for (const auto& r : report.rows) {
    if (r.group != group) {
      group = r.group;
      if (group != "All") os << group << '\n';
    }
    std::snprintf(line, sizeof(line), "%*s  %11s  %12s  %5zu%s%s\n", static_cast<int>(width),
                  r.subset.c_str(), format_number(r.rho, "%.3f").c_str(),
                  format_number(r.p, "%.3e").c_str(), r.n, r.note.empty() ? "" : "  ",
                  r.note.c_str());
    os << line;
  }
  return os.str();
}

std::string matrix_csv(const CorrelationMatrix& matrix) {
  std::ostringstream os;
  os << "measure";
  for (Measure m : matrix.labels) os << ',' << to_string(m);
  os << '\n';
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    os << to_string(matrix.labels[i]);
    for (double v : matrix.rho[i]) os << ',' << format_number(v, "%.6f");
    os << '\n';
  }
  return os.str();
}

}  // namespace pmqa
