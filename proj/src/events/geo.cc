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

#include "privmeasure/events/geo.h"

#include "privmeasure/common/random.h"

namespace privmeasure::events {
namespace {

constexpr uint64_t kCountrySalt = HashLabel("geo/country");
constexpr uint64_t kAsSalt = HashLabel("geo/as");

double HashUnit(uint64_t x) {
  return static_cast<double>(SplitMix64(x) >> 11) * 0x1.0p-53;
}

}  // namespace

const GeoTable& GeoTable::Default() {
  static const GeoTable* table = new GeoTable();
  return *table;
}

GeoTable::GeoTable() : country_law_(kNumCountries, 1.2), as_law_(kNumAses, 1.0) {
  codes_.reserve(kNumCountries);
  for (uint32_t i = 0; i < kNumCountries; ++i) {
    codes_.push_back({static_cast<char>('A' + i / 26), static_cast<char>('A' + i % 26)});
  }
}

GeoRecord GeoTable::Lookup(uint32_t ip) const {
  GeoRecord r;
  r.country_code = codes_[country_law_.Sample(HashUnit((ip >> 16) ^ kCountrySalt))];
  r.as_number = 1 + as_law_.Sample(HashUnit((ip >> 8) ^ kAsSalt));
  return r;
}

}  // namespace privmeasure::events
