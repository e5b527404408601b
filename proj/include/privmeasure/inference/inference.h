// Copyright 2026 The PrivMeasure Authors
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

#ifndef PRIVMEASURE_INFERENCE_INFERENCE_H_
#define PRIVMEASURE_INFERENCE_INFERENCE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"

namespace privmeasure::inference {

// Two-sided 95% normal quantile as used for count CIs.
inline constexpr double kZ95 = 1.96;

enum class Scope : uint8_t { kLocal = 0, kNetwork };

std::string_view ScopeName(Scope scope);

struct Estimate {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  Scope scope = Scope::kLocal;
  std::string method;
  // Set when a clamping rule moved `point` away from the measured value.
  std::optional<double> raw_point;
  std::vector<std::string> notes;

  bool Contains(double v) const { return lo <= v && v <= hi; }
};

nlohmann::ordered_json EstimateToJson(const Estimate& e);
absl::StatusOr<Estimate> EstimateFromJson(const nlohmann::json& j);

// Standard normal helpers.
double NormalCdf(double x);
// Inverse of NormalCdf for u in (0, 1).
double NormalQuantile(double u);

// sqrt(sum sigma_i^2) over independent per-DC draws.
double CombineSigmas(const std::vector<double>& sigmas);

// point ± 1.96 sigma. A negative total is reported with point 0 and the raw
// value kept in raw_point.
absl::StatusOr<Estimate> NormalCi(double noisy_total, double sigma);

// Divides point and CI by the observed fraction; scope becomes network.
absl::StatusOr<Estimate> ExtrapolateByFraction(const Estimate& local, double fraction);

struct PscCiOptions {
  double confidence = 0.95;
  // Above this b*n the exact occupancy DP gives way to a normal approximation.
  double exact_work_limit = 1e8;
};

// Probability that exactly k of b bins are occupied after n uniform throws,
// for k = 0..min(n, b).
std::vector<double> OccupancyDistribution(uint64_t n, uint64_t b);

// Expected occupied bins after n throws into b bins.
double ExpectedOccupied(double n, double b);

// CI for the true cardinality from a raw PSC count: every n whose law of
// occupied(b, n) + Binomial(n_noise_total, 1/2) puts the observation inside
// its central region.
absl::StatusOr<Estimate> PscExactCi(uint64_t raw, uint64_t b, uint64_t n_noise_total,
                                    const PscCiOptions& options = {});

// [x, min(x/p, cap)].
absl::StatusOr<Estimate> RangeBound(double x, double fraction,
                                    std::optional<double> cap = std::nullopt);
// Range propagated from a local CI: [lo, min(hi/p, cap)].
absl::StatusOr<Estimate> RangeBound(const Estimate& local, double fraction,
                                    std::optional<double> cap = std::nullopt);

// Zipf-like popularity over `population` items with `visits` network-wide
// observations.
struct PowerLawModel {
  double alpha = 1.0;
  double population = 1.0;
  double visits = 1.0;
};

std::vector<PowerLawModel> PowerLawGrid(const std::vector<double>& alphas,
                                        const std::vector<double>& populations,
                                        const std::vector<double>& visits);

// Geometric sequence lo, lo*ratio, ... up to and including hi.
std::vector<double> GeometricGrid(double lo, double hi, double ratio);

struct McOptions {
  int trials = 200;
  uint64_t seed = 1;
  double confidence = 0.95;
  std::optional<double> universe_cap;
  // Consecutive ranks whose popularity differs by less than this ratio share
  // one simulation block.
  double block_ratio = 1.02;
};

struct McAuditEntry {
  PowerLawModel model;
  uint64_t seed = 0;
  bool screened_out = false;
  bool accepted = false;
  double local_lo = 0.0, local_hi = 0.0;
  double network_lo = 0.0, network_hi = 0.0, network_mean = 0.0;
  double local_mean = 0.0;
};

struct McResult {
  Estimate estimate;
  bool fell_back = false;
  std::vector<McAuditEntry> audit;
};

// One Monte-Carlo draw of (local unique, network unique) counts.
struct UniqueDraw {
  double local = 0.0;
  double network = 0.0;
};

// Samples `trials` draws under `model` with each visit seen locally w.p.
// `fraction`.
std::vector<UniqueDraw> SimulateUniqueCounts(const PowerLawModel& model, double fraction,
                                             int trials, uint64_t seed, double block_ratio = 1.02);

absl::StatusOr<McResult> McUniqueExtrapolate(const Estimate& local, double fraction,
                                             const std::vector<PowerLawModel>& grid,
                                             const McOptions& options = {});

nlohmann::ordered_json McAuditToJson(const McResult& result);

// Guard model: each selective client uses g distinct weight-proportional
// guards, p promiscuous clients use all of them.
struct SubsetMeasurement {
  Estimate unique_ips;
  double weight = 0.0;
};

// P(a selective client with g guards uses at least one subset guard).
using HitProbabilityFn = std::function<absl::StatusOr<double>(int g, double subset_weight)>;

// 1 - (1 - w)^g: the many-small-guards limit.
double GuardHitProbability(int g, double subset_weight);

// Rao-Blackwellized estimate for sequential weight-proportional sampling
// without replacement over explicit guard weights.
absl::StatusOr<double> SimulateGuardHitProbability(int g, const std::vector<double>& guard_weights,
                                                   const std::vector<bool>& in_subset, int trials,
                                                   uint64_t seed);

struct GuardModelOptions {
  std::vector<int> g_candidates = {3, 4, 5};
  double p_min = 0.0;
  // Defaults to the smaller subset upper bound.
  std::optional<double> p_max;
  HitProbabilityFn hit_probability;
};

struct GuardFit {
  int g = 0;
  bool feasible = false;
  double hit_a = 0.0, hit_b = 0.0;
  double p_lo = 0.0, p_hi = 0.0;
  double network_lo = 0.0, network_hi = 0.0;
};

// For each g, the promiscuous counts p whose two extrapolated CIs intersect
// and the union of the intersections over those p.
absl::StatusOr<std::vector<GuardFit>> FitGuardModel(const SubsetMeasurement& a,
                                                    const SubsetMeasurement& b,
                                                    const GuardModelOptions& options = {});

nlohmann::ordered_json GuardFitsToJson(const std::vector<GuardFit>& fits);

// Count predicted at weight_b if every client used a single guard.
double SingleGuardPrediction(double count_a, double weight_a, double weight_b);

enum class ChurnCiMode : uint8_t {
  // [(lo_D - hi_1), (hi_D - lo_1)] / (D - 1).
  kInterval = 0,
  // [(lo_D - lo_1), (hi_D - hi_1)] / (D - 1).
  kEndpointWise,
};

absl::StatusOr<Estimate> ChurnRate(const Estimate& multi_day, const Estimate& one_day, int days,
                                   ChurnCiMode mode = ChurnCiMode::kInterval);

// local / (weight * divisor), floored at the local CI.
absl::StatusOr<Estimate> HsdirExtrapolate(const Estimate& local, double weight,
                                          double replication_divisor = 2.0);

}  // namespace privmeasure::inference

#endif  // PRIVMEASURE_INFERENCE_INFERENCE_H_
