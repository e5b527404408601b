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

#include "privmeasure/matchers/matchers.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "privmeasure/common/status_macros.h"

namespace privmeasure::matchers {
namespace {

std::vector<std::string_view> SplitLabels(std::string_view host) {
  std::vector<std::string_view> labels;
  size_t start = 0;
  while (true) {
    const size_t dot = host.find('.', start);
    if (dot == std::string_view::npos) {
      labels.push_back(host.substr(start));
      return labels;
    }
    labels.push_back(host.substr(start, dot - start));
    start = dot + 1;
  }
}

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string JoinTail(const std::vector<std::string_view>& labels, size_t k) {
  std::string out;
  for (size_t i = labels.size() - k; i < labels.size(); ++i) {
    if (!out.empty()) out.push_back('.');
    out.append(labels[i]);
  }
  return out;
}

bool IsSubdomainOrEqual(std::string_view host, std::string_view domain) {
  if (host.size() < domain.size()) return false;
  if (host.substr(host.size() - domain.size()) != domain) return false;
  return host.size() == domain.size() || host[host.size() - domain.size() - 1] == '.';
}

std::string AsciiLower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

absl::StatusOr<std::vector<uint32_t>> DecodeUtf8(std::string_view s) {
  std::vector<uint32_t> out;
  for (size_t i = 0; i < s.size();) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    uint32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      return absl::InvalidArgumentError("invalid UTF-8 lead byte");
    }
    if (i + len > s.size()) return absl::InvalidArgumentError("truncated UTF-8 sequence");
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) return absl::InvalidArgumentError("invalid UTF-8 continuation");
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace

absl::StatusOr<std::string> NormalizeHostname(std::string_view raw) {
  if (!raw.empty() && raw.back() == '.') raw.remove_suffix(1);
  if (raw.empty()) return absl::InvalidArgumentError("empty hostname");
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || u == 0x7F) {
      return absl::InvalidArgumentError("hostname contains whitespace or control bytes");
    }
  }
  for (std::string_view label : SplitLabels(raw)) {
    if (label.empty()) {
      return absl::InvalidArgumentError(absl::StrCat("empty label in hostname: ", std::string(raw)));
    }
  }
  return AsciiLower(raw);
}

DomainSet::DomainSet(std::string set_id, MatchMode mode, std::vector<std::string> members)
    : set_id_(std::move(set_id)), mode_(mode), members_(std::move(members)),
      index_(members_.begin(), members_.end()) {}

absl::StatusOr<DomainSet> DomainSet::Create(std::string set_id, MatchMode mode,
                                            const std::vector<std::string>& members) {
  std::vector<std::string> normalized;
  std::unordered_set<std::string> seen;
  normalized.reserve(members.size());
  for (const std::string& m : members) {
    ASSIGN_OR_RETURN(std::string h, NormalizeHostname(m));
    if (!seen.insert(h).second) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate member ", h, " in set ", set_id));
    }
    normalized.push_back(std::move(h));
  }
  return DomainSet(std::move(set_id), mode, std::move(normalized));
}

bool DomainSet::Matches(std::string_view hostname) const {
  if (index_.count(std::string(hostname))) return true;
  if (mode_ == MatchMode::kExact) return false;
  for (size_t dot = hostname.find('.'); dot != std::string_view::npos;
       dot = hostname.find('.', dot + 1)) {
    if (index_.count(std::string(hostname.substr(dot + 1)))) return true;
  }
  return false;
}

absl::StatusOr<std::string> PunycodeLabel(std::string_view utf8_label) {
  ASSIGN_OR_RETURN(std::vector<uint32_t> input, DecodeUtf8(utf8_label));
  constexpr uint32_t kBase = 36, kTmin = 1, kTmax = 26, kSkew = 38, kDamp = 700;
  auto adapt = [&](uint32_t delta, uint32_t num_points, bool first) {
    delta = first ? delta / kDamp : delta / 2;
    delta += delta / num_points;
    uint32_t k = 0;
    while (delta > ((kBase - kTmin) * kTmax) / 2) {
      delta /= kBase - kTmin;
      k += kBase;
    }
    return k + (kBase - kTmin + 1) * delta / (delta + kSkew);
  };
  auto digit = [](uint32_t d) { return static_cast<char>(d < 26 ? 'a' + d : '0' + (d - 26)); };

  std::string out;
  for (uint32_t cp : input) {
    if (cp < 0x80) out.push_back(static_cast<char>(cp));
  }
  const uint32_t basic = static_cast<uint32_t>(out.size());
  if (basic == input.size()) return out;
  if (basic > 0) out.push_back('-');
  uint32_t n = 128, delta = 0, bias = 72, h = basic;
  while (h < input.size()) {
    uint32_t m = UINT32_MAX;
    for (uint32_t cp : input) {
      if (cp >= n && cp < m) m = cp;
    }
    delta += (m - n) * (h + 1);
    n = m;
    for (uint32_t cp : input) {
      if (cp < n) ++delta;
      if (cp == n) {
        uint32_t q = delta;
        for (uint32_t k = kBase;; k += kBase) {
          const uint32_t t = k <= bias ? kTmin : (k >= bias + kTmax ? kTmax : k - bias);
          if (q < t) break;
          out.push_back(digit(t + (q - t) % (kBase - t)));
          q = (q - t) / (kBase - t);
        }
        out.push_back(digit(q));
        bias = adapt(delta, h + 1, h == basic);
        delta = 0;
        ++h;
      }
    }
    ++delta;
    ++n;
  }
  return absl::StrCat("xn--", out);
}

void SuffixList::AddRule(std::string rule) {
  if (rule.rfind("!", 0) == 0) {
    exception_.insert(rule.substr(1));
  } else if (rule.rfind("*.", 0) == 0) {
    wildcard_.insert(rule.substr(2));
  } else {
    exact_.insert(std::move(rule));
  }
}

absl::StatusOr<SuffixList> SuffixList::Parse(std::string_view text) {
  SuffixList list;
  for (std::string_view line : SplitLines(text)) {
    const size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) continue;
    line = line.substr(begin);
    if (line.rfind("//", 0) == 0) continue;
    const size_t end = line.find_first_of(" \t\r");
    std::string rule = AsciiLower(line.substr(0, end));
    ++list.rule_count_;
    // Rules written in Unicode also match their punycoded form.
    if (std::any_of(rule.begin(), rule.end(), [](char c) { return c & 0x80; })) {
      std::vector<std::string> encoded;
      std::string_view body = rule;
      std::string prefix;
      if (body.rfind("!", 0) == 0 || body.rfind("*.", 0) == 0) {
        prefix = std::string(body.substr(0, body[0] == '!' ? 1 : 2));
        body.remove_prefix(prefix.size());
      }
      for (std::string_view label : SplitLabels(body)) {
        ASSIGN_OR_RETURN(std::string p, PunycodeLabel(label));
        encoded.push_back(std::move(p));
      }
      list.AddRule(absl::StrCat(prefix, absl::StrJoin(encoded, ".")));
    }
    list.AddRule(std::move(rule));
  }
  if (list.rule_count_ == 0) return absl::InvalidArgumentError("suffix list has no rules");
  return list;
}

absl::StatusOr<SuffixList> SuffixList::LoadFile(const std::string& path) {
  ASSIGN_OR_RETURN(std::string text, ReadTextFile(path));
  return Parse(text);
}

size_t SuffixList::SuffixLabelCount(const std::vector<std::string_view>& labels) const {
  size_t best = 0;
  for (size_t k = 1; k <= labels.size(); ++k) {
    const std::string suffix = JoinTail(labels, k);
    if (exception_.count(suffix)) return k - 1;
    if (exact_.count(suffix)) best = k;
    if (k >= 2 && wildcard_.count(JoinTail(labels, k - 1))) best = k;
  }
  return best == 0 ? 1 : best;
}

absl::StatusOr<std::string> SuffixList::PublicSuffix(std::string_view hostname) const {
  const std::vector<std::string_view> labels = SplitLabels(hostname);
  for (std::string_view l : labels) {
    if (l.empty()) return absl::InvalidArgumentError("hostname has an empty label");
  }
  return JoinTail(labels, std::min(labels.size(), SuffixLabelCount(labels)));
}

absl::StatusOr<std::string> SuffixList::RegistrableDomain(std::string_view hostname) const {
  const std::vector<std::string_view> labels = SplitLabels(hostname);
  for (std::string_view l : labels) {
    if (l.empty()) return absl::InvalidArgumentError("hostname has an empty label");
  }
  const size_t k = SuffixLabelCount(labels);
  if (k >= labels.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(hostname), " is a public suffix"));
  }
  return JoinTail(labels, k + 1);
}

absl::StatusOr<std::string> SldOf(std::string_view hostname, const SuffixList& suffixes) {
  return suffixes.RegistrableDomain(hostname);
}

absl::StatusOr<std::vector<RankedEntry>> ParseRankedList(std::string_view csv) {
  std::vector<RankedEntry> out;
  size_t line_no = 0;
  for (std::string_view line : SplitLines(csv)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string_view::npos) {
      return absl::InvalidArgumentError(absl::StrCat("ranked list line ", line_no, ": no comma"));
    }
    const std::string_view rank_text = line.substr(0, comma);
    uint32_t rank = 0;
    auto [ptr, ec] = std::from_chars(rank_text.data(), rank_text.data() + rank_text.size(), rank);
    if (ec != std::errc() || ptr != rank_text.data() + rank_text.size()) {
      if (line_no == 1) continue;  // header
      return absl::InvalidArgumentError(absl::StrCat("ranked list line ", line_no, ": bad rank"));
    }
    ASSIGN_OR_RETURN(std::string host, NormalizeHostname(line.substr(comma + 1)));
    out.push_back(RankedEntry{rank, std::move(host)});
  }
  return out;
}

absl::StatusOr<std::vector<RankedEntry>> LoadRankedList(const std::string& path) {
  ASSIGN_OR_RETURN(std::string text, ReadTextFile(path));
  return ParseRankedList(text);
}

absl::StatusOr<RankBuckets> RankBuckets::Create(const std::vector<RankedEntry>& ranked,
                                                int num_buckets,
                                                std::vector<std::string> dedicated) {
  if (num_buckets < 1 || num_buckets > 9) {
    return absl::InvalidArgumentError("num_buckets must be in [1, 9]");
  }
  RankBuckets b;
  b.num_buckets_ = num_buckets;
  for (const RankedEntry& e : ranked) {
    if (e.rank == 0) return absl::InvalidArgumentError("ranks start at 1");
    auto [it, inserted] = b.rank_of_.emplace(e.hostname, e.rank);
    if (!inserted) it->second = std::min(it->second, e.rank);
  }
  for (std::string& d : dedicated) {
    ASSIGN_OR_RETURN(std::string h, NormalizeHostname(d));
    b.dedicated_.push_back(std::move(h));
  }
  return b;
}

std::string RankBuckets::BucketName(int bucket) const {
  if (bucket == dedicated_bucket()) return "dedicated";
  return absl::StrCat("rank", bucket);
}

std::optional<int> RankBuckets::BucketForRank(uint32_t rank, int num_buckets) {
  if (rank == 0) return std::nullopt;
  uint64_t upper = 10;
  for (int i = 0; i < num_buckets; ++i, upper *= 10) {
    if (rank <= upper) return i;
  }
  return std::nullopt;
}

std::optional<int> RankBuckets::Bucket(std::string_view hostname) const {
  for (const std::string& d : dedicated_) {
    if (IsSubdomainOrEqual(hostname, d)) return dedicated_bucket();
  }
  std::string_view h = hostname;
  while (true) {
    auto it = rank_of_.find(std::string(h));
    if (it != rank_of_.end()) return BucketForRank(it->second, num_buckets_);
    const size_t dot = h.find('.');
    if (dot == std::string_view::npos) return std::nullopt;
    h.remove_prefix(dot + 1);
  }
}

absl::StatusOr<DomainSet> SiblingSet(std::string_view basename,
                                     const std::vector<RankedEntry>& ranked,
                                     const SuffixList& suffixes) {
  const std::string base = AsciiLower(basename);
  if (base.empty()) return absl::InvalidArgumentError("empty basename");
  std::vector<std::string> members;
  std::unordered_set<std::string> seen;
  for (const RankedEntry& e : ranked) {
    auto reg = suffixes.RegistrableDomain(e.hostname);
    if (!reg.ok()) continue;
    auto suffix = suffixes.PublicSuffix(*reg);
    if (!suffix.ok()) continue;
    const std::string_view group =
        std::string_view(*reg).substr(0, reg->size() - suffix->size() - 1);
    if (group.find(base) != std::string_view::npos && seen.insert(e.hostname).second) {
      members.push_back(e.hostname);
    }
  }
  return DomainSet::Create(base, MatchMode::kSuffixWildcard, members);
}

absl::StatusOr<TldRules> TldRules::FromSuffixes(const std::vector<std::string>& suffixes) {
  TldRules t;
  for (const std::string& s : suffixes) {
    ASSIGN_OR_RETURN(std::string norm, NormalizeHostname(s));
    if (t.index_.insert(norm).second) t.rules_.push_back(std::move(norm));
  }
  return t;
}

absl::StatusOr<TldRules> TldRules::Parse(std::string_view text) {
  std::vector<std::string> suffixes;
  size_t line_no = 0;
  for (std::string_view line : SplitLines(text)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("*.", 0) != 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("tld rule line ", line_no, ": expected \"*.<suffix>\""));
    }
    suffixes.emplace_back(line.substr(2));
  }
  return FromSuffixes(suffixes);
}

absl::StatusOr<TldRules> TldRules::LoadFile(const std::string& path) {
  ASSIGN_OR_RETURN(std::string text, ReadTextFile(path));
  return Parse(text);
}

std::string TldRules::Match(std::string_view hostname) const {
  for (size_t dot = hostname.find('.'); dot != std::string_view::npos;
       dot = hostname.find('.', dot + 1)) {
    const std::string suffix(hostname.substr(dot + 1));
    if (index_.count(suffix)) return suffix;
  }
  return kOtherTld;
}

absl::StatusOr<std::string> ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace privmeasure::matchers
