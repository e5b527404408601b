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

#ifndef PRIVMEASURE_TOOLS_REPORT_WRITER_H_
#define PRIVMEASURE_TOOLS_REPORT_WRITER_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "nlohmann/json.hpp"

namespace privmeasure::tools {

// Writes CSV tables and SVG plots for a run report into `out_dir`. Returns
// the file names written.
absl::Status WriteReportArtifacts(const nlohmann::json& report, const std::string& out_dir,
                                  std::vector<std::string>* written);

// Minimal CSV quoting.
std::string CsvField(const std::string& s);

}  // namespace privmeasure::tools

#endif  // PRIVMEASURE_TOOLS_REPORT_WRITER_H_
