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

// privmeasure: generate synthetic networks, run measurement campaigns, and
// infer, score and plot the results.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "nlohmann/json.hpp"
#include "privmeasure/events/ground_truth.h"
#include "privmeasure/events/serialization.h"
#include "privmeasure/harness/deployment.h"
#include "privmeasure/harness/harness.h"
#include "privmeasure/inference/inference.h"
#include "privmeasure/privacy/schedule.h"
#include "report_writer.h"

namespace pm = privmeasure;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitScheduleViolation = 2;
constexpr int kExitCoverageRegression = 3;

int Fail(const absl::Status& s) {
  std::cerr << "error: " << s << "\n";
  return kExitError;
}

absl::StatusOr<json> ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": ", e.what()));
  }
}

absl::Status WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << text;
  return absl::OkStatus();
}

absl::Status EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return absl::UnavailableError(absl::StrCat("cannot create ", dir, ": ", ec.message()));
  return absl::OkStatus();
}

absl::StatusOr<pm::harness::DeploymentConfig> LoadDeployment(const std::string& path,
                                                            std::optional<uint64_t> seed) {
  absl::StatusOr<json> j = ReadJson(path);
  if (!j.ok()) return j.status();
  absl::StatusOr<pm::harness::DeploymentConfig> c = pm::harness::DeploymentFromJson(*j);
  if (!c.ok()) return c.status();
  if (seed) {
    c->root_seed = *seed;
    c->network.rng_seed = *seed;
  }
  if (absl::Status s = pm::harness::ValidateDeployment(*c); !s.ok()) return s;
  return c;
}

struct GenerateArgs {
  std::string config, out;
  std::optional<uint64_t> seed;
};

int Generate(const GenerateArgs& a) {
  auto c = LoadDeployment(a.config, a.seed);
  if (!c.ok()) return Fail(c.status());
  auto gt = pm::events::GenerateGroundTruth(c->network);
  if (!gt.ok()) return Fail(gt.status());
  if (absl::Status s = EnsureDir(a.out); !s.ok()) return Fail(s);
  std::ofstream trace(a.out + "/trace.jsonl");
  if (absl::Status s = pm::events::WriteTraceJsonl(gt->traces, trace); !s.ok()) return Fail(s);
  trace.close();
  if (absl::Status s = WriteText(a.out + "/truth.json", pm::events::TruthToJson(gt->truth).dump(2));
      !s.ok()) {
    return Fail(s);
  }
  if (absl::Status s = WriteText(a.out + "/network.json", pm::events::ConfigToJson(c->network).dump(2));
      !s.ok()) {
    return Fail(s);
  }
  std::cout << gt->traces.events().size() << " events over " << gt->traces.relay_ids().size()
            << " relays written to " << a.out << "\n";
  return 0;
}

struct RunArgs {
  std::string config, out, schedule, trace_dir;
  std::optional<uint64_t> seed;
  double min_coverage = 0.0;
};

absl::StatusOr<pm::events::GroundTruth> LoadTrace(const std::string& dir,
                                                  const pm::harness::DeploymentConfig& c) {
  std::vector<uint32_t> relays;
  for (const auto& r : c.network.relays) relays.push_back(r.id);
  std::ifstream in(dir + "/trace.jsonl");
  if (!in) return absl::NotFoundError(absl::StrCat("no trace.jsonl in ", dir));
  pm::events::GroundTruth gt;
  absl::StatusOr<pm::events::Traces> t = pm::events::ReadTraceJsonl(in, relays);
  if (!t.ok()) return t.status();
  gt.traces = *std::move(t);
  absl::StatusOr<json> truth = ReadJson(dir + "/truth.json");
  if (!truth.ok()) return truth.status();
  absl::StatusOr<pm::events::TruthSummary> ts = pm::events::TruthFromJson(*truth);
  if (!ts.ok()) return ts.status();
  gt.truth = *std::move(ts);
  return gt;
}

int Run(const RunArgs& a) {
  auto c = LoadDeployment(a.config, a.seed);
  if (!c.ok()) return Fail(c.status());
  std::vector<pm::privacy::ScheduledRound> schedule = c->schedule;
  if (!a.schedule.empty()) {
    auto j = ReadJson(a.schedule);
    if (!j.ok()) return Fail(j.status());
    auto s = pm::privacy::ScheduleFromJson(*j);
    if (!s.ok()) return Fail(s.status());
    schedule = *std::move(s);
  }
  if (absl::Status s = EnsureDir(a.out); !s.ok()) return Fail(s);

  const auto violations = pm::privacy::ValidateSchedule(schedule);
  ordered_json audit = {{"rounds", schedule.size()},
                        {"accepted", violations.empty()},
                        {"violations", pm::privacy::ViolationsToJson(violations)}};
  if (absl::Status s = WriteText(a.out + "/schedule_audit.json", audit.dump(2)); !s.ok()) {
    return Fail(s);
  }
  if (!violations.empty()) {
    std::cerr << "schedule rejected:\n" << audit["violations"].dump(2) << "\n";
    return kExitScheduleViolation;
  }

  std::optional<pm::events::GroundTruth> shared;
  if (!a.trace_dir.empty()) {
    auto t = LoadTrace(a.trace_dir, *c);
    if (!t.ok()) return Fail(t.status());
    shared = *std::move(t);
  }
  auto report = pm::harness::RunCampaign(*c, schedule, shared ? &*shared : nullptr);
  if (!report.ok()) return Fail(report.status());
  const ordered_json j = pm::harness::RunReportToJson(*report);
  if (absl::Status s = WriteText(a.out + "/report.json", j.dump(2)); !s.ok()) return Fail(s);
  std::cout << j["summary"].dump() << "\n";
  if (report->with_truth > 0 &&
      static_cast<double>(report->covered) < a.min_coverage * static_cast<double>(report->with_truth)) {
    std::cerr << "coverage regression: " << report->covered << "/" << report->with_truth
              << " below " << a.min_coverage << "\n";
    return kExitCoverageRegression;
  }
  return 0;
}

struct InferArgs {
  std::string method;
  double total = 0, sigma = 0, fraction = 1.0, count = 0, weight = 1.0, divisor = 2.0;
  uint64_t raw = 0, bins = 0, noise = 0;
  std::optional<double> cap;
  std::vector<double> multi, single, local, a, b;
  double weight_a = 0, weight_b = 0;
  std::optional<double> p_max;
  std::vector<int> g = {3, 4, 5};
  int days = 2;
};

pm::inference::Estimate Triple(const std::vector<double>& v) {
  pm::inference::Estimate e;
  e.lo = v[0];
  e.point = v[1];
  e.hi = v[2];
  return e;
}

int Infer(const InferArgs& a) {
  namespace inf = pm::inference;
  auto emit = [](const absl::StatusOr<inf::Estimate>& e) {
    if (!e.ok()) return Fail(e.status());
    std::cout << inf::EstimateToJson(*e).dump(2) << "\n";
    return 0;
  };
  if (a.method == "normal") {
    auto local = inf::NormalCi(a.total, a.sigma);
    if (!local.ok() || a.fraction == 1.0) return emit(local);
    return emit(inf::ExtrapolateByFraction(*local, a.fraction));
  }
  if (a.method == "psc") {
    auto local = inf::PscExactCi(a.raw, a.bins, a.noise);
    if (!local.ok() || a.fraction == 1.0) return emit(local);
    return emit(inf::RangeBound(*local, a.fraction, a.cap));
  }
  if (a.method == "range") return emit(inf::RangeBound(a.count, a.fraction, a.cap));
  if (a.method == "churn") return emit(inf::ChurnRate(Triple(a.multi), Triple(a.single), a.days));
  if (a.method == "hsdir") return emit(inf::HsdirExtrapolate(Triple(a.local), a.weight, a.divisor));
  if (a.method == "guard") {
    inf::GuardModelOptions o;
    o.g_candidates = a.g;
    o.p_max = a.p_max;
    auto fits = inf::FitGuardModel({Triple(a.a), a.weight_a}, {Triple(a.b), a.weight_b}, o);
    if (!fits.ok()) return Fail(fits.status());
    std::cout << inf::GuardFitsToJson(*fits).dump(2) << "\n";
    return 0;
  }
  return Fail(absl::InvalidArgumentError(absl::StrCat("unknown method ", a.method)));
}

struct ScoreArgs {
  std::string report;
  double min_coverage = 0.0;
};

int Score(const ScoreArgs& a) {
  auto j = ReadJson(a.report);
  if (!j.ok()) return Fail(j.status());
  uint64_t scored = 0, covered = 0, inconsistent = 0;
  ordered_json misses = ordered_json::array();
  try {
    for (const json& r : j->at("rounds")) {
      for (const json& s : r.at("statistics")) {
        if (s.at("covered").is_null()) continue;
        ++scored;
        const double truth = s.at("truth").get<double>();
        const json& net = s.at("network");
        const json& ci = net.at("ci95");
        const bool inside = ci.at(0).get<double>() <= truth && truth <= ci.at(1).get<double>();
        if (inside != s.at("covered").get<bool>()) ++inconsistent;
        if (inside) {
          ++covered;
        } else {
          misses.push_back({{"round_id", s.at("round_id").get<std::string>()},
                            {"statistic", s.at("statistic").get<std::string>()}});
        }
      }
    }
  } catch (const std::exception& e) {
    return Fail(absl::InvalidArgumentError(absl::StrCat("malformed report: ", e.what())));
  }
  const double rate = scored == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(scored);
  ordered_json out = {{"scored", scored},
                      {"covered", covered},
                      {"coverage", rate},
                      {"inconsistent_flags", inconsistent},
                      {"misses", misses}};
  std::cout << out.dump(2) << "\n";
  if (inconsistent > 0) return kExitCoverageRegression;
  if (scored > 0 && rate < a.min_coverage) return kExitCoverageRegression;
  return 0;
}

int Report(const std::string& report, const std::string& out) {
  auto j = ReadJson(report);
  if (!j.ok()) return Fail(j.status());
  std::vector<std::string> written;
  try {
    if (absl::Status s = pm::tools::WriteReportArtifacts(*j, out, &written); !s.ok()) return Fail(s);
  } catch (const std::exception& e) {
    return Fail(absl::InvalidArgumentError(absl::StrCat("malformed report: ", e.what())));
  }
  for (const auto& f : written) std::cout << out << "/" << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving relay measurement simulator"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic trace and its ground truth");
  g->add_option("-c,--config", gen.config, "Deployment config JSON")->required()->check(CLI::ExistingFile);
  g->add_option("-o,--out", gen.out, "Output directory")->required();
  g->add_option("-s,--seed", gen.seed, "Override root and network seeds");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the configured measurement campaign");
  r->add_option("-c,--config", run.config, "Deployment config JSON")->required()->check(CLI::ExistingFile);
  r->add_option("-o,--out", run.out, "Output directory")->required();
  r->add_option("--schedule", run.schedule, "Schedule JSON overriding the config's")
      ->check(CLI::ExistingFile);
  r->add_option("--trace", run.trace_dir, "Read one shared trace from a generate output directory")
      ->check(CLI::ExistingDirectory);
  r->add_option("-s,--seed", run.seed, "Override root and network seeds");
  r->add_option("--min-coverage", run.min_coverage, "Fail when CI coverage falls below this")
      ->check(CLI::Range(0.0, 1.0));

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "Standalone inference on measured values");
  i->add_option("method", inf.method, "normal | psc | range | churn | hsdir | guard")
      ->required()
      ->check(CLI::IsMember({"normal", "psc", "range", "churn", "hsdir", "guard"}));
  i->add_option("--total", inf.total, "Noisy PrivCount total");
  i->add_option("--sigma", inf.sigma, "Total noise standard deviation");
  i->add_option("--fraction", inf.fraction, "Observed fraction p");
  i->add_option("--count", inf.count, "Local count x");
  i->add_option("--cap", inf.cap, "Universe cap");
  i->add_option("--raw", inf.raw, "Raw PSC count");
  i->add_option("--bins", inf.bins, "PSC bins b");
  i->add_option("--noise", inf.noise, "Total PSC noise bins");
  i->add_option("--multi", inf.multi, "Multi-day estimate lo,point,hi")->delimiter(',')->expected(3);
  i->add_option("--single", inf.single, "One-day estimate lo,point,hi")->delimiter(',')->expected(3);
  i->add_option("--days", inf.days, "Days in the multi-day round");
  i->add_option("--local", inf.local, "Local estimate lo,point,hi")->delimiter(',')->expected(3);
  i->add_option("--weight", inf.weight, "HSDir weight");
  i->add_option("--divisor", inf.divisor, "Replication divisor");
  i->add_option("--a", inf.a, "Subset A estimate lo,point,hi")->delimiter(',')->expected(3);
  i->add_option("--b", inf.b, "Subset B estimate lo,point,hi")->delimiter(',')->expected(3);
  i->add_option("--weight-a", inf.weight_a, "Subset A guard weight");
  i->add_option("--weight-b", inf.weight_b, "Subset B guard weight");
  i->add_option("--g", inf.g, "Candidate guards per client")->delimiter(',');
  i->add_option("--p-max", inf.p_max, "Upper end of the promiscuous-client search");

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "Check a report's coverage against its truth");
  sc->add_option("report", score.report, "report.json")->required()->check(CLI::ExistingFile);
  sc->add_option("--min-coverage", score.min_coverage, "Fail when coverage falls below this")
      ->check(CLI::Range(0.0, 1.0));

  std::string report_in, report_out;
  auto* rp = app.add_subcommand("report", "Write CSV tables and SVG plots for a report");
  rp->add_option("report", report_in, "report.json")->required()->check(CLI::ExistingFile);
  rp->add_option("-o,--out", report_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*g) return Generate(gen);
  if (*r) return Run(run);
  if (*i) {
    for (const auto* v : {&inf.multi, &inf.single, &inf.local, &inf.a, &inf.b}) {
      if (!v->empty() && v->size() != 3) {
        return Fail(absl::InvalidArgumentError("estimates take exactly lo,point,hi"));
      }
    }
    if ((inf.method == "churn" && (inf.multi.empty() || inf.single.empty())) ||
        (inf.method == "hsdir" && inf.local.empty()) ||
        (inf.method == "guard" && (inf.a.empty() || inf.b.empty()))) {
      return Fail(absl::InvalidArgumentError("missing estimate for " + inf.method));
    }
    return Infer(inf);
  }
  if (*sc) return Score(score);
  if (*rp) return Report(report_in, report_out);
  return kExitError;
}
