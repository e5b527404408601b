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

#include "privmeasure/privacy/privacy.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "privmeasure/common/status_macros.h"

namespace privmeasure::privacy {
namespace {

constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "domains_connected",     "exit_data_bytes",     "new_ips",
    "tcp_connections",       "entry_circuits",      "entry_data_bytes",
    "descriptor_uploads",    "new_onion_addresses", "descriptor_fetches",
    "rendezvous_connections", "rendezvous_data_bytes",
};

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Field table shared by the JSON codecs.
struct BoundField {
  const char* name;
  double ActionBounds::*field;
};
constexpr std::array<BoundField, 12> kBoundFields = {{
    {"domains_connected", &ActionBounds::domains_connected},
    {"exit_data_bytes", &ActionBounds::exit_data_bytes},
    {"new_ips_day1", &ActionBounds::new_ips_day1},
    {"new_ips_2plus", &ActionBounds::new_ips_2plus},
    {"tcp_connections", &ActionBounds::tcp_connections},
    {"entry_circuits", &ActionBounds::entry_circuits},
    {"entry_data_bytes", &ActionBounds::entry_data_bytes},
    {"descriptor_uploads", &ActionBounds::descriptor_uploads},
    {"new_onion_addresses", &ActionBounds::new_onion_addresses},
    {"descriptor_fetches", &ActionBounds::descriptor_fetches},
    {"rendezvous_connections", &ActionBounds::rendezvous_connections},
    {"rendezvous_data_bytes", &ActionBounds::rendezvous_data_bytes},
}};

bool IsByteAction(Action a) {
  return a == Action::kExitDataBytes || a == Action::kEntryDataBytes ||
         a == Action::kRendezvousDataBytes;
}

}  // namespace

std::string_view ActionName(Action action) {
  const auto i = static_cast<size_t>(action);
  return i < kActionNames.size() ? kActionNames[i] : "unknown";
}

absl::StatusOr<Action> ParseAction(std::string_view name) {
  for (size_t i = 0; i < kActionNames.size(); ++i) {
    if (kActionNames[i] == name) return static_cast<Action>(i);
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown action: ", std::string(name)));
}

double ActionBounds::Bound(Action action, uint32_t days) const {
  switch (action) {
    case Action::kDomainsConnected:
      return domains_connected;
    case Action::kExitDataBytes:
      return exit_data_bytes;
    case Action::kNewIps:
      return days <= 1 ? new_ips_day1 : new_ips_day1 + new_ips_2plus * (days - 1);
    case Action::kTcpConnections:
      return tcp_connections;
    case Action::kEntryCircuits:
      return entry_circuits;
    case Action::kEntryDataBytes:
      return entry_data_bytes;
    case Action::kDescriptorUploads:
      return descriptor_uploads;
    case Action::kNewOnionAddresses:
      return new_onion_addresses;
    case Action::kDescriptorFetches:
      return descriptor_fetches;
    case Action::kRendezvousConnections:
      return rendezvous_connections;
    case Action::kRendezvousDataBytes:
      return rendezvous_data_bytes;
  }
  return 0.0;
}

absl::Status ValidateBounds(const ActionBounds& bounds) {
  for (const BoundField& f : kBoundFields) {
    const double v = bounds.*(f.field);
    if (!(v > 0.0) || !std::isfinite(v)) {
      return absl::InvalidArgumentError(absl::StrCat("action bound ", f.name, " must be > 0"));
    }
  }
  return absl::OkStatus();
}

nlohmann::ordered_json BoundsToJson(const ActionBounds& bounds) {
  nlohmann::ordered_json j;
  for (const BoundField& f : kBoundFields) j[f.name] = bounds.*(f.field);
  return j;
}

absl::StatusOr<ActionBounds> BoundsFromJson(const nlohmann::json& j) {
  ActionBounds b;
  try {
    for (const BoundField& f : kBoundFields) {
      if (j.contains(f.name)) b.*(f.field) = j.at(f.name).get<double>();
    }
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed action bounds: ", ex.what()));
  }
  RETURN_IF_ERROR(ValidateBounds(b));
  return b;
}

absl::Status ValidatePrivacyParams(const PrivacyParams& params) {
  if (!(params.epsilon > 0.0) || !std::isfinite(params.epsilon)) {
    return absl::InvalidArgumentError(absl::StrCat("epsilon must be > 0, got ", params.epsilon));
  }
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat("delta must be in (0, 1), got ", params.delta));
  }
  if (params.adjacency_window <= 0) {
    return absl::InvalidArgumentError("adjacency_window must be > 0");
  }
  return absl::OkStatus();
}

nlohmann::ordered_json PrivacyConfigToJson(const PrivacyConfig& config) {
  nlohmann::ordered_json j;
  j["epsilon"] = config.params.epsilon;
  j["delta"] = config.params.delta;
  j["adjacency_window"] = config.params.adjacency_window;
  j["bounds"] = BoundsToJson(config.bounds);
  return j;
}

absl::StatusOr<PrivacyConfig> PrivacyConfigFromJson(const nlohmann::json& j) {
  PrivacyConfig c;
  try {
    if (j.contains("epsilon")) c.params.epsilon = j.at("epsilon").get<double>();
    if (j.contains("delta")) c.params.delta = j.at("delta").get<double>();
    if (j.contains("adjacency_window")) {
      c.params.adjacency_window = j.at("adjacency_window").get<int64_t>();
    }
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed privacy config: ", ex.what()));
  }
  RETURN_IF_ERROR(ValidatePrivacyParams(c.params));
  if (j.contains("bounds")) {
    ASSIGN_OR_RETURN(c.bounds, BoundsFromJson(j.at("bounds")));
  }
  return c;
}

absl::StatusOr<double> SensitivityForCounter(const CounterDeclaration& counter,
                                             const ActionBounds& bounds) {
  if (counter.disabled) return 0.0;
  if (!counter.action.has_value()) {
    return absl::InvalidArgumentError(
        absl::StrCat("counter ", counter.counter_id, " declares no bounded action"));
  }
  if (counter.days == 0) return absl::InvalidArgumentError("counter round length must be >= 1 day");
  const double bound = bounds.Bound(*counter.action, counter.days);
  if (counter.unit == SensitivityUnit::kCells) {
    if (!IsByteAction(*counter.action)) {
      return absl::InvalidArgumentError(
          absl::StrCat("counter ", counter.counter_id, ": cell units need a byte action"));
    }
    return std::ceil(bound / kCellPayloadBytes);
  }
  return bound;
}

absl::StatusOr<double> GaussianSigma(double sensitivity, double epsilon, double delta) {
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    return absl::InvalidArgumentError(absl::StrCat("sensitivity must be >= 0, got ", sensitivity));
  }
  RETURN_IF_ERROR(ValidatePrivacyParams(PrivacyParams{epsilon, delta, 1}));
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double GaussianMechanismDelta(double sensitivity, double sigma, double epsilon) {
  if (sensitivity <= 0.0) return 0.0;
  if (sigma <= 0.0) return 1.0;
  const double a = sensitivity / (2.0 * sigma);
  const double b = epsilon * sigma / sensitivity;
  return std::max(0.0, NormalCdf(a - b) - std::exp(epsilon) * NormalCdf(-a - b));
}

absl::StatusOr<std::vector<BudgetShare>> AllocatePrivacyBudget(
    const std::vector<std::string>& round_statistics, const PrivacyParams& params) {
  if (round_statistics.empty()) {
    return absl::InvalidArgumentError("a round must measure at least one statistic");
  }
  RETURN_IF_ERROR(ValidatePrivacyParams(params));
  const double k = static_cast<double>(round_statistics.size());
  std::vector<BudgetShare> shares;
  shares.reserve(round_statistics.size());
  for (const std::string& s : round_statistics) {
    shares.push_back(BudgetShare{s, params.epsilon / k, params.delta / k});
  }
  return shares;
}

absl::StatusOr<NoiseSpec> MakeNoiseSpec(const std::string& counter_id, double sensitivity,
                                        const BudgetShare& share) {
  NoiseSpec spec;
  spec.counter_id = counter_id;
  spec.sensitivity = sensitivity;
  spec.epsilon_share = share.epsilon;
  spec.delta_share = share.delta;
  ASSIGN_OR_RETURN(spec.sigma, GaussianSigma(sensitivity, share.epsilon, share.delta));
  return spec;
}

nlohmann::ordered_json NoiseSpecToJson(const NoiseSpec& spec) {
  return {{"counter_id", spec.counter_id},     {"sensitivity", spec.sensitivity},
          {"sigma", spec.sigma},               {"epsilon_share", spec.epsilon_share},
          {"delta_share", spec.delta_share},   {"mechanism", spec.mechanism},
          {"budget_split", spec.budget_split}};
}

absl::StatusOr<NoiseSpec> NoiseSpecFromJson(const nlohmann::json& j) {
  try {
    NoiseSpec s;
    s.counter_id = j.at("counter_id").get<std::string>();
    s.sensitivity = j.at("sensitivity").get<double>();
    s.sigma = j.at("sigma").get<double>();
    s.epsilon_share = j.at("epsilon_share").get<double>();
    s.delta_share = j.at("delta_share").get<double>();
    s.mechanism = j.value("mechanism", std::string(kClassicalGaussian));
    s.budget_split = j.value("budget_split", std::string(kEqualSplit));
    return s;
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed noise spec: ", ex.what()));
  }
}

nlohmann::ordered_json NoiseAuditJson(const std::string& round_id,
                                      const std::vector<NoiseSpec>& specs,
                                      const PrivacyParams& params) {
  nlohmann::ordered_json j;
  j["round_id"] = round_id;
  j["epsilon"] = params.epsilon;
  j["delta"] = params.delta;
  j["budget_split"] = kEqualSplit;
  j["note"] =
      "within-round budget divided equally across measured statistics; "
      "rounds are not composed with each other";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const NoiseSpec& s : specs) arr.push_back(NoiseSpecToJson(s));
  j["noise_specs"] = std::move(arr);
  return j;
}

}  // namespace privmeasure::privacy
