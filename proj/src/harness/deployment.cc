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

#include "privmeasure/harness/deployment.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "privmeasure/common/status_macros.h"
#include "privmeasure/events/serialization.h"
#include "privmeasure/psc/psc.h"

namespace privmeasure::harness {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<uint32_t> InstrumentedRelays(const DeploymentConfig& config) {
  std::vector<uint32_t> ids;
  for (const auto& r : config.network.relays) {
    if (r.instrumented) ids.push_back(r.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

absl::Status CheckIds(const std::set<uint32_t>& ids, uint32_t limit, std::string_view what) {
  for (uint32_t id : ids) {
    if (id >= limit) {
      return absl::InvalidArgumentError(
          absl::StrCat(std::string(what), " id ", id, " out of range (", limit, " parties)"));
    }
  }
  return absl::OkStatus();
}

ordered_json IdList(const std::set<uint32_t>& ids) {
  ordered_json a = ordered_json::array();
  for (uint32_t id : ids) a.push_back(id);
  return a;
}

std::set<uint32_t> ReadIdSet(const json& j, const char* key) {
  std::set<uint32_t> out;
  if (j.contains(key)) {
    for (const auto& v : j.at(key)) out.insert(v.get<uint32_t>());
  }
  return out;
}

}  // namespace

absl::Status ValidateDeployment(const DeploymentConfig& config) {
  if (config.privcount.num_sks < 1) return absl::InvalidArgumentError("PrivCount needs at least 1 SK");
  if (config.psc.num_cps < 1) return absl::InvalidArgumentError("PSC needs at least 1 CP");
  if (config.privcount.num_dcs < 1 || config.psc.num_dcs < 1) {
    return absl::InvalidArgumentError("a deployment needs at least 1 DC");
  }
  if (config.transport != "in-memory") {
    return absl::InvalidArgumentError(
        absl::StrCat("unsupported transport '", config.transport, "' (only in-memory)"));
  }
  RETURN_IF_ERROR(psc::ValidateLog2Bins(config.psc.log2_bins));
  RETURN_IF_ERROR(privacy::ValidatePrivacyParams(config.privacy.params));
  RETURN_IF_ERROR(privacy::ValidateBounds(config.privacy.bounds));
  RETURN_IF_ERROR(events::ValidateConfig(config.network));

  RETURN_IF_ERROR(RelayDcMap(config, config.privcount.num_dcs).status());
  RETURN_IF_ERROR(RelayDcMap(config, config.psc.num_dcs).status());

  const std::vector<uint32_t> instrumented = InstrumentedRelays(config);
  for (const auto& [round_id, relays] : config.round_relays) {
    for (uint32_t id : relays) {
      if (!std::binary_search(instrumented.begin(), instrumented.end(), id)) {
        return absl::InvalidArgumentError(absl::StrCat("round ", round_id, " measures relay ", id,
                                                       ", which is not instrumented"));
      }
    }
  }

  const FaultInjection& f = config.faults;
  RETURN_IF_ERROR(CheckIds(f.privcount_dc_before_init, config.privcount.num_dcs, "PrivCount DC"));
  RETURN_IF_ERROR(CheckIds(f.privcount_dc_before_report, config.privcount.num_dcs, "PrivCount DC"));
  RETURN_IF_ERROR(CheckIds(f.sk, config.privcount.num_sks, "SK"));
  RETURN_IF_ERROR(CheckIds(f.psc_dc, config.psc.num_dcs, "PSC DC"));
  RETURN_IF_ERROR(CheckIds(f.cp, config.psc.num_cps, "CP"));

  if (config.mc.alphas.empty()) return absl::InvalidArgumentError("mc.alphas is empty");
  for (double a : config.mc.alphas) {
    if (!(a > 0.0)) return absl::InvalidArgumentError("mc.alphas must be > 0");
  }
  if (!(config.mc.population_ratio > 1.0)) {
    return absl::InvalidArgumentError("mc.population_ratio must be > 1");
  }
  if (config.mc.trials < 2) return absl::InvalidArgumentError("mc.trials must be >= 2");
  return absl::OkStatus();
}

absl::StatusOr<std::map<uint32_t, uint32_t>> RelayDcMap(const DeploymentConfig& config,
                                                       uint32_t num_dcs) {
  if (num_dcs == 0) return absl::InvalidArgumentError("no DCs");
  const std::vector<uint32_t> instrumented = InstrumentedRelays(config);
  std::map<uint32_t, uint32_t> out;
  if (config.relay_to_dc.empty()) {
    for (size_t i = 0; i < instrumented.size(); ++i) {
      out[instrumented[i]] = static_cast<uint32_t>(i % num_dcs);
    }
    return out;
  }
  for (uint32_t id : instrumented) {
    auto it = config.relay_to_dc.find(id);
    if (it == config.relay_to_dc.end()) {
      return absl::InvalidArgumentError(absl::StrCat("instrumented relay ", id, " has no DC"));
    }
    if (it->second >= num_dcs) {
      return absl::InvalidArgumentError(
          absl::StrCat("relay ", id, " maps to DC ", it->second, " but only ", num_dcs, " exist"));
    }
    out[id] = it->second;
  }
  return out;
}

ordered_json DeploymentToJson(const DeploymentConfig& config) {
  ordered_json j;
  j["privcount"] = {{"num_sks", config.privcount.num_sks}, {"num_dcs", config.privcount.num_dcs}};
  j["psc"] = {{"num_cps", config.psc.num_cps},
              {"num_dcs", config.psc.num_dcs},
              {"group", std::string(psc::GroupKindName(config.psc.group))},
              {"log2_bins", config.psc.log2_bins}};
  ordered_json map = ordered_json::object();
  for (const auto& [relay, dc] : config.relay_to_dc) map[std::to_string(relay)] = dc;
  j["relay_to_dc"] = map;
  ordered_json rounds = ordered_json::object();
  for (const auto& [round_id, relays] : config.round_relays) rounds[round_id] = IdList(relays);
  j["round_relays"] = rounds;
  j["privacy"] = privacy::PrivacyConfigToJson(config.privacy);
  j["network"] = events::ConfigToJson(config.network);
  j["transport"] = config.transport;
  j["root_seed"] = config.root_seed;
  j["data_dir"] = config.data_dir;
  j["countries"] = config.countries;
  j["mc"] = {{"alphas", config.mc.alphas},
             {"population_ratio", config.mc.population_ratio},
             {"trials", config.mc.trials}};
  const FaultInjection& f = config.faults;
  j["faults"] = {{"privcount_dc_before_init", IdList(f.privcount_dc_before_init)},
                 {"privcount_dc_before_report", IdList(f.privcount_dc_before_report)},
                 {"sk", IdList(f.sk)},
                 {"psc_dc", IdList(f.psc_dc)},
                 {"cp", IdList(f.cp)}};
  j["schedule"] = privacy::ScheduleToJson(config.schedule);
  return j;
}

absl::StatusOr<DeploymentConfig> DeploymentFromJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("deployment config must be an object");
  DeploymentConfig c;
  try {
    if (j.contains("privcount")) {
      const json& p = j.at("privcount");
      c.privcount.num_sks = p.value("num_sks", c.privcount.num_sks);
      c.privcount.num_dcs = p.value("num_dcs", c.privcount.num_dcs);
    }
    if (j.contains("psc")) {
      const json& p = j.at("psc");
      c.psc.num_cps = p.value("num_cps", c.psc.num_cps);
      c.psc.num_dcs = p.value("num_dcs", c.psc.num_dcs);
      c.psc.log2_bins = p.value("log2_bins", c.psc.log2_bins);
      if (p.contains("group")) {
        ASSIGN_OR_RETURN(c.psc.group, psc::ParseGroupKind(p.at("group").get<std::string>()));
      }
    }
    if (j.contains("relay_to_dc")) {
      for (const auto& [k, v] : j.at("relay_to_dc").items()) {
        c.relay_to_dc[static_cast<uint32_t>(std::stoul(k))] = v.get<uint32_t>();
      }
    }
    if (j.contains("round_relays")) {
      for (const auto& [k, v] : j.at("round_relays").items()) {
        auto& s = c.round_relays[k];
        for (const auto& id : v) s.insert(id.get<uint32_t>());
      }
    }
    if (j.contains("privacy")) {
      ASSIGN_OR_RETURN(c.privacy, privacy::PrivacyConfigFromJson(j.at("privacy")));
    }
    if (j.contains("network")) {
      ASSIGN_OR_RETURN(c.network, events::ConfigFromJson(j.at("network")));
    }
    c.transport = j.value("transport", c.transport);
    c.root_seed = j.value("root_seed", c.root_seed);
    c.data_dir = j.value("data_dir", c.data_dir);
    if (j.contains("countries")) c.countries = j.at("countries").get<std::vector<std::string>>();
    if (j.contains("mc")) {
      const json& m = j.at("mc");
      if (m.contains("alphas")) c.mc.alphas = m.at("alphas").get<std::vector<double>>();
      c.mc.population_ratio = m.value("population_ratio", c.mc.population_ratio);
      c.mc.trials = m.value("trials", c.mc.trials);
    }
    if (j.contains("faults")) {
      const json& f = j.at("faults");
      c.faults.privcount_dc_before_init = ReadIdSet(f, "privcount_dc_before_init");
      c.faults.privcount_dc_before_report = ReadIdSet(f, "privcount_dc_before_report");
      c.faults.sk = ReadIdSet(f, "sk");
      c.faults.psc_dc = ReadIdSet(f, "psc_dc");
      c.faults.cp = ReadIdSet(f, "cp");
    }
    if (j.contains("schedule")) {
      ASSIGN_OR_RETURN(c.schedule, privacy::ScheduleFromJson(j.at("schedule")));
    }
  } catch (const std::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad deployment config: ", e.what()));
  }
  return c;
}

}  // namespace privmeasure::harness
