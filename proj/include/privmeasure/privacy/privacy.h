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

#ifndef PRIVMEASURE_PRIVACY_PRIVACY_H_
#define PRIVMEASURE_PRIVACY_PRIVACY_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"

namespace privmeasure::privacy {

// Bounded user actions that define adjacency.
enum class Action : uint8_t {
  kDomainsConnected = 0,
  kExitDataBytes,
  kNewIps,
  kTcpConnections,
  kEntryCircuits,
  kEntryDataBytes,
  kDescriptorUploads,
  kNewOnionAddresses,
  kDescriptorFetches,
  kRendezvousConnections,
  kRendezvousDataBytes,
};
inline constexpr size_t kNumActions = 11;

std::string_view ActionName(Action action);
absl::StatusOr<Action> ParseAction(std::string_view name);

inline constexpr double kMegabyte = 1e6;
// Application payload carried by one relay cell.
inline constexpr double kCellPayloadBytes = 498.0;

// Daily per-user limits. Byte bounds are in bytes.
struct ActionBounds {
  double domains_connected = 20;
  double exit_data_bytes = 400 * kMegabyte;
  double new_ips_day1 = 4;
  double new_ips_2plus = 3;
  double tcp_connections = 12;
  double entry_circuits = 651;
  double entry_data_bytes = 407 * kMegabyte;
  double descriptor_uploads = 450;
  double new_onion_addresses = 3;
  double descriptor_fetches = 30;
  double rendezvous_connections = 180;
  double rendezvous_data_bytes = 400 * kMegabyte;

  // Bound for one action over a round of `days` days. Only the new-IP bound
  // depends on the round length (first day plus each further day).
  double Bound(Action action, uint32_t days = 1) const;

  bool operator==(const ActionBounds&) const = default;
};

absl::Status ValidateBounds(const ActionBounds& bounds);
nlohmann::ordered_json BoundsToJson(const ActionBounds& bounds);
absl::StatusOr<ActionBounds> BoundsFromJson(const nlohmann::json& j);

struct PrivacyParams {
  double epsilon = 0.3;
  double delta = 1e-11;
  int64_t adjacency_window = 86400;

  bool operator==(const PrivacyParams&) const = default;
};

absl::Status ValidatePrivacyParams(const PrivacyParams& params);

// Privacy config document: {"epsilon", "delta", "adjacency_window", "bounds"}.
struct PrivacyConfig {
  PrivacyParams params;
  ActionBounds bounds;
  bool operator==(const PrivacyConfig&) const = default;
};
nlohmann::ordered_json PrivacyConfigToJson(const PrivacyConfig& config);
absl::StatusOr<PrivacyConfig> PrivacyConfigFromJson(const nlohmann::json& j);

enum class SensitivityUnit : uint8_t { kNative = 0, kCells };

// What a counter declares about itself for calibration.
struct CounterDeclaration {
  std::string counter_id;
  std::optional<Action> action;
  // Never incremented by any bounded action.
  bool disabled = false;
  // Byte bounds can be expressed in cells for cell counters.
  SensitivityUnit unit = SensitivityUnit::kNative;
  uint32_t days = 1;
};

// Delta for a counter: the matching daily action bound. Histogram bins share
// the family bound since one action increments at most one bin.
absl::StatusOr<double> SensitivityForCounter(const CounterDeclaration& counter,
                                             const ActionBounds& bounds);

// Classical Gaussian mechanism: sigma = delta_f * sqrt(2 ln(1.25 / delta)) / epsilon.
absl::StatusOr<double> GaussianSigma(double sensitivity, double epsilon, double delta);

// Smallest delta for which N(0, sigma^2) noise on a sensitivity-`sensitivity`
// query is (epsilon, delta)-DP (the exact Gaussian privacy profile).
double GaussianMechanismDelta(double sensitivity, double sigma, double epsilon);

struct BudgetShare {
  std::string statistic;
  double epsilon = 0.0;
  double delta = 0.0;
};

// Equal split of (epsilon, delta) across the statistics of one round.
absl::StatusOr<std::vector<BudgetShare>> AllocatePrivacyBudget(
    const std::vector<std::string>& round_statistics, const PrivacyParams& params);

inline constexpr char kClassicalGaussian[] = "gaussian-classical";
inline constexpr char kEqualSplit[] = "equal-split";

struct NoiseSpec {
  std::string counter_id;
  double sensitivity = 0.0;
  double sigma = 0.0;
  double epsilon_share = 0.0;
  double delta_share = 0.0;
  std::string mechanism = kClassicalGaussian;
  std::string budget_split = kEqualSplit;

  bool operator==(const NoiseSpec&) const = default;
};

absl::StatusOr<NoiseSpec> MakeNoiseSpec(const std::string& counter_id, double sensitivity,
                                        const BudgetShare& share);

nlohmann::ordered_json NoiseSpecToJson(const NoiseSpec& spec);
absl::StatusOr<NoiseSpec> NoiseSpecFromJson(const nlohmann::json& j);

// Audit record for a round: every NoiseSpec plus the split policy note.
nlohmann::ordered_json NoiseAuditJson(const std::string& round_id,
                                      const std::vector<NoiseSpec>& specs,
                                      const PrivacyParams& params);

}  // namespace privmeasure::privacy

#endif  // PRIVMEASURE_PRIVACY_PRIVACY_H_
