// Copyright 2026 The EcoTune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ecotune/analysis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ecotune/error.h"

namespace ecotune {

ConvergenceSeries CumulativeMin(std::span<const double> values) {
  Require(!values.empty(), "cumulative_min of an empty series");
  ConvergenceSeries s;
  s.values.assign(values.begin(), values.end());
  s.cumulative_min.reserve(values.size());
  double best = values[0];
  for (double v : values) {
    best = std::min(best, v);
    s.cumulative_min.push_back(best);
  }
  return s;
}

ThresholdResult IterationsToThreshold(const ConvergenceSeries& series, double threshold,
                                      int max_iterations) {
  Require(max_iterations >= 1, "max_iterations must be >= 1");
  ThresholdResult r;
  r.threshold = threshold;
  r.max_iterations = max_iterations;
  const std::size_t limit = std::min(series.cumulative_min.size(),
                                     static_cast<std::size_t>(max_iterations));
  for (std::size_t i = 0; i < limit; ++i) {
    if (series.cumulative_min[i] <= threshold) {
      r.iterations = static_cast<int>(i) + 1;
      return r;
    }
  }
  r.iterations = max_iterations;
  r.censored = true;
  return r;
}

double Mean(std::span<const double> xs) {
  Require(!xs.empty(), "mean of an empty sample");
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double SampleSd(std::span<const double> xs) {
  if (xs.size() < 2) return 0;
  const double m = Mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double BetaContinuedFraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxTerms = 10000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double RegularizedIncompleteBeta(double x, double a, double b) {
  Require(a > 0 && b > 0, "incomplete beta needs a, b > 0");
  Require(x >= 0 && x <= 1, "incomplete beta needs x in [0, 1]");
  if (x == 0) return 0;
  if (x == 1) return 1;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaContinuedFraction(x, a, b) / a;
  return 1.0 - front * BetaContinuedFraction(1.0 - x, b, a) / b;
}

double StudentTwoTailedP(double t, double df) {
  Require(df > 0, "degrees of freedom must be positive");
  if (!std::isfinite(t)) return 0;
  const double x = df / (df + t * t);
  return std::clamp(RegularizedIncompleteBeta(x, df / 2.0, 0.5), 0.0, 1.0);
}

StatReport PairedTTest(std::span<const double> xs, std::span<const double> ys) {
  Require(xs.size() == ys.size(), "paired samples must have equal size");
  Require(xs.size() >= 2, "paired t-test needs n >= 2");
  const std::size_t n = xs.size();
  std::vector<double> diffs(n);
  for (std::size_t i = 0; i < n; ++i) diffs[i] = ys[i] - xs[i];

  StatReport r;
  r.df = static_cast<int>(n) - 1;
  r.mean_a = Mean(xs);
  r.sd_a = SampleSd(xs);
  r.mean_b = Mean(ys);
  r.sd_b = SampleSd(ys);
  const double mean_d = Mean(diffs);
  const double sd_d = SampleSd(diffs);
  const double pooled = std::sqrt((r.sd_a * r.sd_a + r.sd_b * r.sd_b) / 2.0);
  r.d_pooled = pooled > 0 ? (r.mean_b - r.mean_a) / pooled : 0.0;

  // Relative scale guard so that round-off in identical diffs reads as zero.
  const double scale = std::max({std::fabs(mean_d), 1e-300});
  if (sd_d <= 1e-14 * scale || sd_d == 0) {
    if (std::fabs(mean_d) <= 1e-15) {
      r.t = 0;
      r.p_two_tailed = 1;
      r.d_z = 0;
      return r;
    }
    throw Error(ErrorCode::kDegenerateVariance,
                "paired differences have zero variance with non-zero mean");
  }
  r.t = mean_d * std::sqrt(static_cast<double>(n)) / sd_d;
  r.d_z = mean_d / sd_d;
  r.p_two_tailed = StudentTwoTailedP(r.t, r.df);
  return r;
}

double CohensDPooled(double mean_a, double sd_a, double mean_b, double sd_b) {
  Require(sd_a >= 0 && sd_b >= 0, "standard deviations must be >= 0");
  if (sd_a == 0 && sd_b == 0) {
    throw Error(ErrorCode::kDegenerateVariance, "both standard deviations are zero");
  }
  return std::fabs(mean_b - mean_a) / std::sqrt((sd_a * sd_a + sd_b * sd_b) / 2.0);
}

std::vector<BandPoint> BandSeries(const std::vector<ConvergenceSeries>& runs) {
  Require(!runs.empty(), "band_series needs at least one run");
  const std::size_t length = runs.front().cumulative_min.size();
  for (const auto& r : runs) {
    Require(r.cumulative_min.size() == length, "band_series runs must have equal length");
  }
  std::vector<BandPoint> band;
  std::vector<double> column(runs.size());
  for (std::size_t i = 0; i < length; ++i) {
    for (std::size_t k = 0; k < runs.size(); ++k) column[k] = runs[k].cumulative_min[i];
    band.push_back({static_cast<int>(i) + 1, Mean(column), SampleSd(column)});
  }
  return band;
}

ConvergenceSeries PadSeries(const ConvergenceSeries& series, std::size_t length) {
  ConvergenceSeries out = series;
  Require(!out.cumulative_min.empty(), "cannot pad an empty series");
  while (out.cumulative_min.size() < length) {
    out.values.push_back(out.values.back());
    out.cumulative_min.push_back(out.cumulative_min.back());
  }
  return out;
}

std::vector<std::string> ParetoFront(std::span<const ParetoPoint> points) {
  for (const auto& p : points) {
    Require(std::isfinite(p.throughput) && std::isfinite(p.energy_per_token),
            "pareto points must be finite");
  }
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a].throughput > points[b].throughput;
  });

  std::vector<bool> keep(points.size(), false);
  double best_faster = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    double group_min = std::numeric_limits<double>::infinity();
    while (end < order.size() && points[order[end]].throughput == points[order[g]].throughput) {
      group_min = std::min(group_min, points[order[end]].energy_per_token);
      ++end;
    }
    for (std::size_t k = g; k < end; ++k) {
      const double e = points[order[k]].energy_per_token;
      keep[order[k]] = e == group_min && e < best_faster;
    }
    best_faster = std::min(best_faster, group_min);
    g = end;
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (keep[i]) ids.push_back(points[i].id);
  }
  return ids;
}

BreakEvenReport BreakEven(double prompt_count, double wh_per_prompt, double trial_energy_j,
                          double savings_per_workload_j) {
  Require(prompt_count > 0 && wh_per_prompt > 0 && trial_energy_j > 0,
          "break-even inputs must be positive");
  if (!(savings_per_workload_j > 0)) {
    throw Error(ErrorCode::kUndefinedBreakEven,
                "break-even is undefined without positive savings per workload");
  }
  BreakEvenReport r;
  r.prompt_count = prompt_count;
  r.wh_per_prompt = wh_per_prompt;
  r.prompt_energy_j = prompt_count * wh_per_prompt * 3600.0;
  r.trial_energy_j = trial_energy_j;
  r.total_overhead_j = r.prompt_energy_j + trial_energy_j;
  r.savings_per_workload_j = savings_per_workload_j;
  r.break_even_workloads = r.total_overhead_j / savings_per_workload_j;
  return r;
}

double SavingsPerWorkload(double default_ept, double optimized_ept, double tokens_per_workload) {
  Require(optimized_ept >= 0 && default_ept >= optimized_ept,
          "savings need default_ept >= optimized_ept >= 0");
  Require(tokens_per_workload >= 0, "tokens per workload must be >= 0");
  return (default_ept - optimized_ept) * tokens_per_workload;
}

}  // namespace ecotune
