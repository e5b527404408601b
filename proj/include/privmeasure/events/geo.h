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

#ifndef PRIVMEASURE_EVENTS_GEO_H_
#define PRIVMEASURE_EVENTS_GEO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "privmeasure/events/zipf.h"

namespace privmeasure::events {

struct GeoRecord {
  std::string country_code;
  uint32_t as_number = 0;
};

// Deterministic synthetic prefix table. Countries are assigned per /16 and
// autonomous systems per /24, both with skewed popularity.
class GeoTable {
 public:
  static constexpr uint32_t kNumCountries = 250;
  static constexpr uint32_t kNumAses = 60000;

  static const GeoTable& Default();

  GeoRecord Lookup(uint32_t ip) const;
  const std::vector<std::string>& country_codes() const { return codes_; }

 private:
  GeoTable();

  std::vector<std::string> codes_;
  ZipfSampler country_law_;
  ZipfSampler as_law_;
};

}  // namespace privmeasure::events

#endif  // PRIVMEASURE_EVENTS_GEO_H_
