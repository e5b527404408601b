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

#ifndef PRIVMEASURE_HARNESS_DEPLOYMENT_H_
#define PRIVMEASURE_HARNESS_DEPLOYMENT_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "privmeasure/events/ground_truth.h"
#include "privmeasure/privacy/privacy.h"
#include "privmeasure/privacy/schedule.h"
#include "privmeasure/psc/group.h"

namespace privmeasure::harness {

struct PrivCountDeployment {
  uint32_t num_sks = 3;
  uint32_t num_dcs = 16;
};

struct PscDeployment {
  uint32_t num_cps = 3;
  uint32_t num_dcs = 16;
  psc::GroupKind group = psc::GroupKind::kSchnorr64;
  uint32_t log2_bins = 18;
};

// Party failures to inject. DC ids index the deployment's DCs.
struct FaultInjection {
  std::set<uint32_t> privcount_dc_before_init;
  std::set<uint32_t> privcount_dc_before_report;
  std::set<uint32_t> sk;
  std::set<uint32_t> psc_dc;
  std::set<uint32_t> cp;
};

// Settings for the campaign-level unique-domain extrapolation.
struct McSettings {
  std::vector<double> alphas = {0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3};
  double population_ratio = 1.25;
  int trials = 200;
};

struct DeploymentConfig {
  PrivCountDeployment privcount;
  PscDeployment psc;
  // Explicit relay -> DC assignment. Empty means round-robin over the
  // instrumented relays in id order.
  std::map<uint32_t, uint32_t> relay_to_dc;
  // Relays measured by a given round; rounds not listed measure every
  // instrumented relay.
  std::map<std::string, std::set<uint32_t>> round_relays;
  privacy::PrivacyConfig privacy;
  events::GroundTruthConfig network;
  // Only "in-memory" is available.
  std::string transport = "in-memory";
  uint64_t root_seed = 1;
  // Directory holding public_suffix_list.dat, ranked_sites.csv, tld_rules.txt.
  std::string data_dir;
  // Countries broken out by the entry_countries histogram.
  std::vector<std::string> countries = {"US", "DE", "FR", "GB", "RU", "NL", "CA", "SE"};
  McSettings mc;
  FaultInjection faults;
  std::vector<privacy::ScheduledRound> schedule;
};

absl::Status ValidateDeployment(const DeploymentConfig& config);

// relay id -> DC id for a protocol with `num_dcs` DCs. Every instrumented
// relay gets a DC.
absl::StatusOr<std::map<uint32_t, uint32_t>> RelayDcMap(const DeploymentConfig& config,
                                                       uint32_t num_dcs);

nlohmann::ordered_json DeploymentToJson(const DeploymentConfig& config);
absl::StatusOr<DeploymentConfig> DeploymentFromJson(const nlohmann::json& j);

}  // namespace privmeasure::harness

#endif  // PRIVMEASURE_HARNESS_DEPLOYMENT_H_
