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

#ifndef ECOTUNE_ANALYSIS_H_
#define ECOTUNE_ANALYSIS_H_

#include <span>
#include <string>
#include <vector>

namespace ecotune {

struct ConvergenceSeries {
  std::vector<double> values;
  std::vector<double> cumulative_min;
};

// Running minimum; contract violation on empty input.
ConvergenceSeries CumulativeMin(std::span<const double> values);

struct ThresholdResult {
  int iterations = 0;
  bool censored = false;
  double threshold = 0;
  int max_iterations = 0;
};

// First 1-based index whose running minimum is <= threshold. Runs that never
// get there within max_iterations are censored at max_iterations.
ThresholdResult IterationsToThreshold(const ConvergenceSeries& series, double threshold,
                                      int max_iterations);

double Mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator); 0 for a single value.
double SampleSd(std::span<const double> xs);

// I_x(a, b), Lentz continued fraction.
double RegularizedIncompleteBeta(double x, double a, double b);

// Two-tailed Student-t p-value: I_{df/(df+t^2)}(df/2, 1/2).
double StudentTwoTailedP(double t, double df);

struct StatReport {
  double t = 0;
  int df = 0;
  double p_two_tailed = 1;
  double d_pooled = 0;  // (mean_b - mean_a) / sqrt((sd_a^2 + sd_b^2) / 2)
  double d_z = 0;       // mean(diff) / sd(diff)
  double mean_a = 0;
  double sd_a = 0;
  double mean_b = 0;
  double sd_b = 0;
};

// Paired t-test on diffs ys[i] - xs[i]. Identical pairs give t = 0, p = 1;
// constant non-zero diffs raise kDegenerateVariance.
StatReport PairedTTest(std::span<const double> xs, std::span<const double> ys);

// |mean_b - mean_a| / sqrt((sd_a^2 + sd_b^2) / 2).
double CohensDPooled(double mean_a, double sd_a, double mean_b, double sd_b);

struct BandPoint {
  int iteration = 0;  // 1-based
  double mean = 0;
  double sd = 0;
};

// Per-iteration mean and sample sd of the runs' running minima.
std::vector<BandPoint> BandSeries(const std::vector<ConvergenceSeries>& runs);

// Extends a run's running minimum to `length` by repeating its last value.
ConvergenceSeries PadSeries(const ConvergenceSeries& series, std::size_t length);

struct ParetoPoint {
  std::string id;
  double throughput = 0;
  double energy_per_token = 0;
};

// Ids of the points not dominated in (higher throughput, lower energy), in
// input order.
std::vector<std::string> ParetoFront(std::span<const ParetoPoint> points);

struct BreakEvenReport {
  double prompt_count = 0;
  double wh_per_prompt = 0;
  double prompt_energy_j = 0;
  double trial_energy_j = 0;
  double total_overhead_j = 0;
  double savings_per_workload_j = 0;
  double break_even_workloads = 0;
};

BreakEvenReport BreakEven(double prompt_count, double wh_per_prompt, double trial_energy_j,
                          double savings_per_workload_j);

// (default_ept - optimized_ept) * tokens_per_workload.
double SavingsPerWorkload(double default_ept, double optimized_ept, double tokens_per_workload);

}  // namespace ecotune

#endif  // ECOTUNE_ANALYSIS_H_
