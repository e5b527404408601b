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

#ifndef PRIVMEASURE_HARNESS_HARNESS_H_
#define PRIVMEASURE_HARNESS_HARNESS_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "privmeasure/events/ground_truth.h"
#include "privmeasure/harness/deployment.h"
#include "privmeasure/inference/inference.h"
#include "privmeasure/privacy/schedule.h"
#include "privmeasure/privcount/counters.h"

namespace privmeasure::harness {

enum class Role : uint8_t { kGuard = 0, kExit, kHsdir, kRendezvous };
std::string_view RoleName(Role role);

struct StatisticDef {
  std::string name;
  privacy::Protocol protocol = privacy::Protocol::kPrivCount;
  Role role = Role::kExit;
  std::string description;
};

// Every statistic a round may list.
const std::vector<StatisticDef>& Catalog();
absl::StatusOr<StatisticDef> FindStatistic(std::string_view name);

// Counter families behind a PrivCount statistic.
absl::StatusOr<std::vector<privcount::CounterFamily>> FamiliesFor(const StatisticDef& stat,
                                                                  const DeploymentConfig& config);

using ItemExtractor = std::function<std::optional<std::string>(const events::Event&)>;

struct PscStatistic {
  std::string truth_key;
  privacy::Action action = privacy::Action::kNewIps;
  ItemExtractor extract;
};

absl::StatusOr<PscStatistic> PscStatisticFor(const StatisticDef& stat, const DeploymentConfig& config);

struct StatisticReport {
  std::string round_id;
  // Counter id for PrivCount, statistic name for PSC.
  std::string statistic;
  privacy::Protocol protocol = privacy::Protocol::kPrivCount;
  bool complete = false;
  // Role weight of the relays whose observations reached the result.
  double fraction = 0.0;
  std::optional<inference::Estimate> local;
  std::optional<inference::Estimate> network;
  // Exact value over the measured relays, from the trace.
  std::optional<double> local_truth;
  // Network-wide truth when the round's window is covered by the truth.
  std::optional<double> truth;
  std::optional<bool> covered;
  nlohmann::ordered_json noise;
};

struct RoundReport {
  privacy::ScheduledRound round;
  std::vector<StatisticReport> statistics;
  // Summed role weight of the measured relays.
  events::RoleFractions fractions;
  std::vector<std::string> notes;
  uint64_t messages = 0;
};

struct AnalysisReport {
  std::string name;
  inference::Estimate estimate;
  std::optional<double> truth;
  std::optional<bool> covered;
  nlohmann::ordered_json details;
};

struct RunReport {
  std::vector<RoundReport> rounds;
  std::vector<AnalysisReport> analyses;
  nlohmann::ordered_json schedule_audit;
  uint64_t with_truth = 0;
  uint64_t covered = 0;
};

// One round of the deployment's protocol over `trace`, whose event times
// must already be in round time. `truth_applies` says whether the trace's
// truth totals describe exactly this round's window.
absl::StatusOr<RoundReport> RunRound(const DeploymentConfig& config,
                                     const privacy::ScheduledRound& round,
                                     const events::GroundTruth& trace, bool truth_applies);

// Generates the network activity for a round's window from the deployment's
// network config, with a per-round seed.
absl::StatusOr<events::GroundTruth> GenerateRoundTrace(const DeploymentConfig& config,
                                                       const privacy::ScheduledRound& round);

// Validates the schedule and refuses to run anything if it has violations.
// Rounds execute in start order. With `shared` every round reads one trace;
// otherwise each round gets its own generated trace.
absl::StatusOr<RunReport> RunCampaign(const DeploymentConfig& config,
                                      const std::vector<privacy::ScheduledRound>& schedule,
                                      const events::GroundTruth* shared = nullptr);

// Network unique-domain estimate from the campaign's unique_slds PSC round
// and its web-stream count, by power-law Monte-Carlo extrapolation.
absl::StatusOr<AnalysisReport> AnalyzeUniqueDomains(const RunReport& report,
                                                    const DeploymentConfig& config);

nlohmann::ordered_json StatisticReportToJson(const StatisticReport& r);
nlohmann::ordered_json RunReportToJson(const RunReport& report);

}  // namespace privmeasure::harness

#endif  // PRIVMEASURE_HARNESS_HARNESS_H_
