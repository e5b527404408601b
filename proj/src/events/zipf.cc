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

#include "privmeasure/events/zipf.h"

#include <algorithm>
#include <cmath>

namespace privmeasure::events {

ZipfSampler::ZipfSampler(uint32_t n, double alpha) : alpha_(alpha) {
  cdf_.resize(n);
  double acc = 0.0;
  for (uint32_t i = 0; i < n; ++i) {
    acc += std::pow(static_cast<double>(i) + 1.0, -alpha);
    cdf_[i] = acc;
  }
  for (double& c : cdf_) c /= acc;
  if (n > 0) cdf_.back() = 1.0;
}

double ZipfSampler::Probability(uint32_t rank) const {
  if (rank >= cdf_.size()) return 0.0;
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

uint32_t ZipfSampler::Sample(double u) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<uint32_t>(it - cdf_.begin());
}

}  // namespace privmeasure::events
