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

#ifndef PRIVMEASURE_EVENTS_ZIPF_H_
#define PRIVMEASURE_EVENTS_ZIPF_H_

#include <cstdint>
#include <vector>

namespace privmeasure::events {

// Zipf law over ranks [0, n): P(i) proportional to (i + 1)^-alpha. Sampling
// inverts a precomputed CDF table.
class ZipfSampler {
 public:
  ZipfSampler(uint32_t n, double alpha);

  uint32_t size() const { return static_cast<uint32_t>(cdf_.size()); }
  double alpha() const { return alpha_; }
  double Probability(uint32_t rank) const;

  // Maps u in [0, 1) to a rank.
  uint32_t Sample(double u) const;

 private:
  double alpha_;
  std::vector<double> cdf_;
};

}  // namespace privmeasure::events

#endif  // PRIVMEASURE_EVENTS_ZIPF_H_
