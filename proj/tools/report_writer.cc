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

#include "report_writer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace privmeasure::tools {
namespace {

using nlohmann::json;

std::string Num(const json& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
  if (v.is_number_unsigned()) return std::to_string(v.get<uint64_t>());
  if (v.is_number()) return absl::StrFormat("%.6g", v.get<double>());
  return v.get<std::string>();
}

json Field(const json& obj, const char* key) {
  return obj.is_object() && obj.contains(key) ? obj.at(key) : json(nullptr);
}

// Interval endpoint of an Estimate record (0 = lo, 1 = hi).
json Ci(const json& estimate, size_t end) {
  const json ci = Field(estimate, "ci95");
  return ci.is_array() && ci.size() == 2 ? ci.at(end) : json(nullptr);
}

absl::Status WriteFile(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << body;
  return out ? absl::OkStatus() : absl::DataLossError(absl::StrCat("short write to ", path));
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

struct Bar {
  std::string label;
  double point = 0, lo = 0, hi = 0;
  bool has_truth = false;
  double truth = 0;
};

// Horizontal bars with CI whiskers and a truth tick; the layout follows the
// stream-category breakdown (one row per category, indented by depth).
std::string BarChart(const std::string& title, const std::vector<Bar>& bars) {
  const double row = 26, left = 290, width = 460, top = 46;
  double max_v = 1.0;
  for (const Bar& b : bars) max_v = std::max({max_v, b.hi, b.point, b.has_truth ? b.truth : 0.0});
  auto x = [&](double v) { return left + width * std::max(0.0, v) / max_v; };
  const double height = top + row * static_cast<double>(bars.size()) + 40;
  std::ostringstream s;
  s << absl::StrFormat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
      "font-size=\"12\">\n",
      static_cast<int>(left + width + 40), static_cast<int>(height));
  s << absl::StrFormat("<text x=\"10\" y=\"22\" font-size=\"15\">%s</text>\n", Escape(title));
  for (size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double y = top + row * static_cast<double>(i);
    const int depth = static_cast<int>(std::count(b.label.begin(), b.label.end(), '/'));
    s << absl::StrFormat("<text x=\"%d\" y=\"%.1f\">%s</text>\n", 10 + 10 * std::max(0, depth - 1),
                         y + 15, Escape(b.label));
    s << absl::StrFormat(
        "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"16\" fill=\"#7aa6d6\"/>\n", left, y + 3,
        x(b.point) - left);
    s << absl::StrFormat(
        "<line x1=\"%.1f\" x2=\"%.1f\" y1=\"%.1f\" y2=\"%.1f\" stroke=\"#223\" stroke-width=\"1.5\"/>\n",
        x(b.lo), x(b.hi), y + 11, y + 11);
    if (b.has_truth) {
      s << absl::StrFormat(
          "<line x1=\"%.1f\" x2=\"%.1f\" y1=\"%.1f\" y2=\"%.1f\" stroke=\"#c33\" stroke-width=\"2\"/>\n",
          x(b.truth), x(b.truth), y + 1, y + 21);
    }
  }
  s << absl::StrFormat(
      "<text x=\"%.0f\" y=\"%.0f\" fill=\"#555\">bar: network estimate, whisker: 95%% CI, red: "
      "truth (max %.4g)</text>\n",
      left, height - 12, max_v);
  s << "</svg>\n";
  return s.str();
}

// One row per statistic: estimate / truth with its CI, on a log axis.
std::string CoverageChart(const std::vector<Bar>& bars) {
  const double row = 20, left = 290, width = 420, top = 46;
  const double lmin = -1.0, lmax = 1.0;  // 0.1x .. 10x
  auto x = [&](double ratio) {
    const double l = std::clamp(std::log10(std::max(ratio, 1e-9)), lmin, lmax);
    return left + width * (l - lmin) / (lmax - lmin);
  };
  const double height = top + row * static_cast<double>(bars.size()) + 40;
  std::ostringstream s;
  s << absl::StrFormat(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n",
      static_cast<int>(left + width + 40), static_cast<int>(height));
  s << "<text x=\"10\" y=\"22\" font-size=\"15\">Network estimates relative to truth</text>\n";
  s << absl::StrFormat(
      "<line x1=\"%.1f\" x2=\"%.1f\" y1=\"%.0f\" y2=\"%.0f\" stroke=\"#c33\" stroke-dasharray=\"4 3\"/>\n",
      x(1.0), x(1.0), top - 6, height - 30);
  for (size_t i = 0; i < bars.size(); ++i) {
    const Bar& b = bars[i];
    const double y = top + row * static_cast<double>(i) + 10;
    const bool covered = b.lo <= b.truth && b.truth <= b.hi;
    const char* color = covered ? "#2a7" : "#d60";
    s << absl::StrFormat("<text x=\"10\" y=\"%.1f\">%s</text>\n", y + 4, Escape(b.label));
    s << absl::StrFormat(
        "<line x1=\"%.1f\" x2=\"%.1f\" y1=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>\n",
        x(b.lo / b.truth), x(b.hi / b.truth), y, y, color);
    s << absl::StrFormat("<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", x(b.point / b.truth),
                         y, color);
  }
  s << absl::StrFormat(
      "<text x=\"%.0f\" y=\"%.0f\" fill=\"#555\">log axis 0.1x .. 10x; green: CI covers truth</text>\n",
      left, height - 12);
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

absl::Status WriteReportArtifacts(const json& report, const std::string& out_dir,
                                  std::vector<std::string>* written) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) return absl::UnavailableError(absl::StrCat("cannot create ", out_dir, ": ", ec.message()));
  auto put = [&](const std::string& name, const std::string& body) -> absl::Status {
    absl::Status s = WriteFile(absl::StrCat(out_dir, "/", name), body);
    if (s.ok()) written->push_back(name);
    return s;
  };

  std::ostringstream stats;
  stats << "round_id,statistic,protocol,complete,fraction,local_point,local_lo,local_hi,"
           "network_point,network_lo,network_hi,local_truth,truth,covered\n";
  std::ostringstream rounds;
  rounds << "round_id,protocol,start,end,guard,exit,hsdir,rendezvous,messages,statistics\n";
  std::vector<Bar> taxonomy, coverage;
  for (const json& r : Field(report, "rounds")) {
    const json f = Field(r, "fractions");
    rounds << CsvField(r.at("round_id").get<std::string>()) << ',' << Num(r.at("protocol")) << ','
           << Num(r.at("start")) << ',' << Num(r.at("end")) << ',' << Num(Field(f, "guard")) << ','
           << Num(Field(f, "exit")) << ',' << Num(Field(f, "hsdir")) << ','
           << Num(Field(f, "rendezvous")) << ',' << Num(r.at("messages")) << ','
           << r.at("statistics").size() << '\n';
    for (const json& s : r.at("statistics")) {
      const json local = Field(s, "local");
      const json net = Field(s, "network");
      stats << CsvField(Num(s.at("round_id"))) << ',' << CsvField(Num(s.at("statistic"))) << ','
            << Num(s.at("protocol")) << ',' << Num(s.at("complete")) << ',' << Num(s.at("fraction"))
            << ',' << Num(Field(local, "point")) << ',' << Num(Ci(local, 0)) << ','
            << Num(Ci(local, 1)) << ',' << Num(Field(net, "point")) << ','
            << Num(Ci(net, 0)) << ',' << Num(Ci(net, 1)) << ','
            << Num(Field(s, "local_truth")) << ',' << Num(Field(s, "truth")) << ','
            << Num(Field(s, "covered")) << '\n';
      if (net.is_null()) continue;
      Bar b{s.at("statistic").get<std::string>(), net.at("point").get<double>(),
            Ci(net, 0).get<double>(), Ci(net, 1).get<double>()};
      if (!Field(s, "truth").is_null()) {
        b.has_truth = true;
        b.truth = s.at("truth").get<double>();
      }
      if (b.label.rfind("streams/", 0) == 0) taxonomy.push_back(b);
      if (b.has_truth && b.truth > 0) {
        Bar c = b;
        c.label = absl::StrCat(Num(s.at("round_id")), " ", b.label);
        coverage.push_back(c);
      }
    }
  }
  if (absl::Status s = put("statistics.csv", stats.str()); !s.ok()) return s;
  if (absl::Status s = put("rounds.csv", rounds.str()); !s.ok()) return s;

  std::ostringstream analyses;
  analyses << "name,point,lo,hi,truth,covered\n";
  for (const json& a : Field(report, "analyses")) {
    const json e = a.at("estimate");
    analyses << CsvField(Num(a.at("name"))) << ',' << Num(e.at("point")) << ',' << Num(Ci(e, 0))
             << ',' << Num(Ci(e, 1)) << ',' << Num(Field(a, "truth")) << ','
             << Num(Field(a, "covered")) << '\n';
  }
  if (absl::Status s = put("analyses.csv", analyses.str()); !s.ok()) return s;

  if (!taxonomy.empty()) {
    if (absl::Status s = put("stream_taxonomy.svg", BarChart("Exit streams by category", taxonomy));
        !s.ok()) {
      return s;
    }
  }
  if (!coverage.empty()) {
    if (absl::Status s = put("coverage.svg", CoverageChart(coverage)); !s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace privmeasure::tools
