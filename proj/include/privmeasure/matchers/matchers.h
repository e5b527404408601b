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

#ifndef PRIVMEASURE_MATCHERS_MATCHERS_H_
#define PRIVMEASURE_MATCHERS_MATCHERS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace privmeasure::matchers {

// Lowercases ASCII letters and strips one trailing dot. Bytes >= 0x80 are
// kept as-is. Rejects empty input, empty labels, whitespace and control bytes.
absl::StatusOr<std::string> NormalizeHostname(std::string_view raw);

enum class MatchMode : uint8_t { kExact = 0, kSuffixWildcard };

class DomainSet {
 public:
  static absl::StatusOr<DomainSet> Create(std::string set_id, MatchMode mode,
                                          const std::vector<std::string>& members);

  const std::string& set_id() const { return set_id_; }
  MatchMode mode() const { return mode_; }
  const std::vector<std::string>& members() const { return members_; }
  size_t size() const { return members_.size(); }

  // Exact: hostname is a member. Suffix-wildcard: hostname is a member or a
  // subdomain of one.
  bool Matches(std::string_view hostname) const;

 private:
  DomainSet(std::string set_id, MatchMode mode, std::vector<std::string> members);

  std::string set_id_;
  MatchMode mode_;
  std::vector<std::string> members_;
  std::unordered_set<std::string> index_;
};

// Public-suffix rules in the standard list format.
class SuffixList {
 public:
  static absl::StatusOr<SuffixList> Parse(std::string_view text);
  static absl::StatusOr<SuffixList> LoadFile(const std::string& path);

  size_t rule_count() const { return rule_count_; }

  // Public suffix under the prevailing rule; unlisted TLDs fall back to "*".
  absl::StatusOr<std::string> PublicSuffix(std::string_view hostname) const;

  // Registrable domain: public suffix plus one label. A hostname that is
  // itself a public suffix has none.
  absl::StatusOr<std::string> RegistrableDomain(std::string_view hostname) const;

 private:
  SuffixList() = default;
  void AddRule(std::string rule);
  size_t SuffixLabelCount(const std::vector<std::string_view>& labels) const;

  std::unordered_set<std::string> exact_;
  // Stored without the leading "*.".
  std::unordered_set<std::string> wildcard_;
  // Stored without the leading "!".
  std::unordered_set<std::string> exception_;
  size_t rule_count_ = 0;
};

// sld_of: registrable domain of a normalized hostname.
absl::StatusOr<std::string> SldOf(std::string_view hostname, const SuffixList& suffixes);

// RFC 3492 encoding of one UTF-8 label ("xn--" prefixed when non-ASCII).
absl::StatusOr<std::string> PunycodeLabel(std::string_view utf8_label);

struct RankedEntry {
  uint32_t rank = 0;
  std::string hostname;
};

// CSV "rank,hostname" with an optional header line.
absl::StatusOr<std::vector<RankedEntry>> ParseRankedList(std::string_view csv);
absl::StatusOr<std::vector<RankedEntry>> LoadRankedList(const std::string& path);

// Nested rank buckets: bucket 0 holds ranks 1..10, bucket i > 0 holds ranks
// 10^i + 1 .. 10^(i+1). A dedicated bucket overrides rank for its members.
class RankBuckets {
 public:
  static constexpr int kDefaultBuckets = 6;

  static absl::StatusOr<RankBuckets> Create(const std::vector<RankedEntry>& ranked,
                                            int num_buckets = kDefaultBuckets,
                                            std::vector<std::string> dedicated = {"torproject.org"});

  int num_buckets() const { return num_buckets_; }
  // Id of the dedicated bucket.
  int dedicated_bucket() const { return num_buckets_; }
  std::string BucketName(int bucket) const;

  // The listed entry is the longest list member equal to the hostname or one
  // of its parent domains.
  std::optional<int> Bucket(std::string_view hostname) const;

  static std::optional<int> BucketForRank(uint32_t rank, int num_buckets);

 private:
  RankBuckets() = default;

  int num_buckets_ = kDefaultBuckets;
  std::unordered_map<std::string, uint32_t> rank_of_;
  std::vector<std::string> dedicated_;
};

// Entries whose registrable name, minus its public suffix, contains
// `basename` as a substring. Members match as suffix wildcards.
absl::StatusOr<DomainSet> SiblingSet(std::string_view basename,
                                     const std::vector<RankedEntry>& ranked,
                                     const SuffixList& suffixes);

inline constexpr char kOtherTld[] = "other";

// One wildcard rule per line ("*.com"). Longest matching suffix wins.
class TldRules {
 public:
  static absl::StatusOr<TldRules> Parse(std::string_view text);
  static absl::StatusOr<TldRules> LoadFile(const std::string& path);
  static absl::StatusOr<TldRules> FromSuffixes(const std::vector<std::string>& suffixes);

  const std::vector<std::string>& rules() const { return rules_; }

  // Rule id (the suffix without "*.") or "other".
  std::string Match(std::string_view hostname) const;

 private:
  TldRules() = default;

  std::vector<std::string> rules_;
  std::unordered_set<std::string> index_;
};

absl::StatusOr<std::string> ReadTextFile(const std::string& path);

}  // namespace privmeasure::matchers

#endif  // PRIVMEASURE_MATCHERS_MATCHERS_H_
