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

#include "privmeasure/inference/inference.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "privmeasure/common/random.h"
#include "privmeasure/common/status_macros.h"

namespace privmeasure::inference {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

absl::Status CheckFraction(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat("fraction must be in (0, 1], got ", p));
  }
  return absl::OkStatus();
}

absl::Status CheckConfidence(double c) {
  if (!(c > 0.0 && c < 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat("confidence must be in (0, 1), got ", c));
  }
  return absl::OkStatus();
}

nlohmann::ordered_json Number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double NumberFrom(const nlohmann::json& j) {
  if (j.is_null()) return kInf;
  return j.get<double>();
}

// Empirical quantile by linear interpolation over sorted samples.
double Quantile(std::vector<double>& v, double u) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = u * static_cast<double>(v.size() - 1);
  const auto i = static_cast<size_t>(std::floor(pos));
  const size_t j = std::min(i + 1, v.size() - 1);
  return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

// Binomial(n, 1/2) pmf tables for the PSC noise.
struct HalfBinomial {
  explicit HalfBinomial(uint64_t n) : n(n), cdf(n + 1), sf(n + 2, 0.0) {
    std::vector<double> pmf(n + 1);
    const double ln2n = static_cast<double>(n) * std::log(2.0);
    const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
    for (uint64_t k = 0; k <= n; ++k) {
      pmf[k] = std::exp(lgn - std::lgamma(static_cast<double>(k) + 1.0) -
                        std::lgamma(static_cast<double>(n - k) + 1.0) - ln2n);
    }
    double acc = 0.0;
    for (uint64_t k = 0; k <= n; ++k) cdf[k] = (acc += pmf[k]);
    acc = 0.0;
    for (uint64_t k = n + 1; k-- > 0;) sf[k] = (acc += pmf[k]);
  }
  // P(X <= j)
  double Cdf(int64_t j) const {
    if (j < 0) return 0.0;
    if (static_cast<uint64_t>(j) >= n) return 1.0;
    return cdf[j];
  }
  // P(X >= j)
  double Sf(int64_t j) const {
    if (j <= 0) return 1.0;
    if (static_cast<uint64_t>(j) > n) return 0.0;
    return sf[j];
  }
  uint64_t n;
  std::vector<double> cdf;
  std::vector<double> sf;
};

double OccupancyVariance(double n, double b) {
  const double a1 = std::exp(n * std::log1p(-1.0 / b));
  const double a2 = b > 2.0 ? std::exp(n * std::log1p(-2.0 / b)) : (b == 2.0 && n == 0 ? 1.0 : 0.0);
  return std::max(0.0, b * a1 + b * (b - 1.0) * a2 - b * b * a1 * a1);
}

// Normal-approximation CI endpoints over integer n. Returns {lo, hi}; hi is
// infinite when saturation keeps every large n consistent.
std::pair<double, double> NormalOccupancyCi(double raw, double b, double noise, double z) {
  auto mean = [&](double n) { return ExpectedOccupied(n, b) + noise / 2.0; };
  auto sd = [&](double n) { return std::sqrt(OccupancyVariance(n, b) + noise / 4.0); };
  auto reaches = [&](double n) { return mean(n) + z * sd(n) + 0.5 >= raw; };
  auto below = [&](double n) { return mean(n) - z * sd(n) - 0.5 <= raw; };

  constexpr double kMaxN = 0x1.0p50;
  double lo = 0.0;
  if (!reaches(0.0)) {
    double h = 1.0;
    while (!reaches(h) && h < kMaxN) h *= 2.0;
    if (!reaches(h)) return {kInf, kInf};
    double l = h / 2.0;
    while (h - l > 1.0) {
      const double m = std::floor((l + h) / 2.0);
      (reaches(m) ? h : l) = m;
    }
    lo = h;
  }
  double h = std::max(1.0, lo);
  while (below(h) && h < kMaxN) h *= 2.0;
  if (below(h)) return {lo, kInf};
  double l = std::max(lo, h / 2.0);
  if (!below(l)) return {lo, lo};
  while (h - l > 1.0) {
    const double m = std::floor((l + h) / 2.0);
    (below(m) ? l : h) = m;
  }
  return {lo, l};
}

}  // namespace

std::string_view ScopeName(Scope scope) { return scope == Scope::kLocal ? "local" : "network"; }

nlohmann::ordered_json EstimateToJson(const Estimate& e) {
  nlohmann::ordered_json j;
  j["point"] = Number(e.point);
  j["ci95"] = {Number(e.lo), Number(e.hi)};
  j["scope"] = ScopeName(e.scope);
  j["method"] = e.method;
  if (e.raw_point) j["raw_point"] = Number(*e.raw_point);
  if (!e.notes.empty()) j["notes"] = e.notes;
  return j;
}

absl::StatusOr<Estimate> EstimateFromJson(const nlohmann::json& j) {
  try {
    Estimate e;
    e.point = NumberFrom(j.at("point"));
    e.lo = NumberFrom(j.at("ci95").at(0));
    e.hi = NumberFrom(j.at("ci95").at(1));
    const auto scope = j.at("scope").get<std::string>();
    if (scope != "local" && scope != "network") {
      return absl::InvalidArgumentError(absl::StrCat("unknown scope: ", scope));
    }
    e.scope = scope == "local" ? Scope::kLocal : Scope::kNetwork;
    e.method = j.at("method").get<std::string>();
    if (j.contains("raw_point")) e.raw_point = NumberFrom(j.at("raw_point"));
    if (j.contains("notes")) e.notes = j.at("notes").get<std::vector<std::string>>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed estimate: ", ex.what()));
  }
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double NormalQuantile(double u) {
  if (u <= 0.0) return -kInf;
  if (u >= 1.0) return kInf;
  // Acklam's rational approximation, then one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (u < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u > 1.0 - 0.02425) {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = NormalCdf(x) - u;
  const double g = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - g / (1.0 + x * g / 2.0);
}

double CombineSigmas(const std::vector<double>& sigmas) {
  double s = 0.0;
  for (double v : sigmas) s += v * v;
  return std::sqrt(s);
}

absl::StatusOr<Estimate> NormalCi(double noisy_total, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    return absl::InvalidArgumentError(absl::StrCat("sigma must be >= 0, got ", sigma));
  }
  Estimate e;
  e.method = "normal_ci";
  e.point = noisy_total;
  e.lo = noisy_total - kZ95 * sigma;
  e.hi = noisy_total + kZ95 * sigma;
  if (noisy_total < 0.0) {
    e.raw_point = noisy_total;
    e.point = 0.0;
    e.notes.push_back(absl::StrFormat("negative noisy total %.0f clamped to 0", noisy_total));
  }
  return e;
}

absl::StatusOr<Estimate> ExtrapolateByFraction(const Estimate& local, double fraction) {
  RETURN_IF_ERROR(CheckFraction(fraction));
  Estimate e = local;
  e.point /= fraction;
  e.lo /= fraction;
  e.hi /= fraction;
  if (e.raw_point) *e.raw_point /= fraction;
  e.scope = Scope::kNetwork;
  e.method = absl::StrCat(local.method, "+extrapolate_by_fraction");
  return e;
}

std::vector<double> OccupancyDistribution(uint64_t n, uint64_t b) {
  if (b == 0) return {n == 0 ? 1.0 : 0.0};
  std::vector<double> p(std::min(n, b) + 1, 0.0);
  p[0] = 1.0;
  const double bd = static_cast<double>(b);
  for (uint64_t m = 1; m <= n; ++m) {
    const uint64_t top = std::min(m, b);
    for (uint64_t k = top; k >= 1; --k) {
      p[k] = p[k] * (static_cast<double>(k) / bd) +
             p[k - 1] * (static_cast<double>(b - k + 1) / bd);
    }
    p[0] = 0.0;
  }
  return p;
}

double ExpectedOccupied(double n, double b) {
  if (b <= 0.0) return 0.0;
  return -b * std::expm1(n * std::log1p(-1.0 / b));
}

absl::StatusOr<Estimate> PscExactCi(uint64_t raw, uint64_t b, uint64_t n_noise_total,
                                    const PscCiOptions& options) {
  RETURN_IF_ERROR(CheckConfidence(options.confidence));
  if (b == 0) return absl::InvalidArgumentError("bin count must be > 0");
  if (raw > b + n_noise_total) {
    return absl::InvalidArgumentError(absl::StrCat("raw count ", raw, " exceeds b + noise bins ",
                                                   b + n_noise_total));
  }
  const double alpha = (1.0 - options.confidence) / 2.0;
  const double bd = static_cast<double>(b);
  const double noise = static_cast<double>(n_noise_total);

  Estimate e;
  e.method = "psc_exact_ci";
  double lo = 0.0, hi = kInf;
  bool exact = true;

  {
    const HalfBinomial noise_law(n_noise_total);
    const auto r = static_cast<int64_t>(raw);
    std::vector<double> occ(std::min<uint64_t>(b, 1 << 20) + 1, 0.0);
    occ[0] = 1.0;
    bool have_lo = false, done = false;
    for (uint64_t n = 0; !done; ++n) {
      if (bd * static_cast<double>(n) > options.exact_work_limit) {
        exact = false;
        break;
      }
      const uint64_t top = std::min(n, b);
      if (n > 0) {
        for (uint64_t k = top; k >= 1; --k) {
          occ[k] = occ[k] * (static_cast<double>(k) / bd) +
                   occ[k - 1] * (static_cast<double>(b - k + 1) / bd);
        }
        occ[0] = 0.0;
      }
      double f_le = 0.0, f_ge = 0.0;
      for (uint64_t k = 0; k <= top; ++k) {
        if (occ[k] == 0.0) continue;
        f_le += occ[k] * noise_law.Cdf(r - static_cast<int64_t>(k));
        f_ge += occ[k] * noise_law.Sf(r - static_cast<int64_t>(k));
      }
      if (!have_lo && f_ge >= alpha) {
        lo = static_cast<double>(n);
        have_lo = true;
      }
      if (have_lo && f_le < alpha) {
        hi = std::max(lo, static_cast<double>(n) - 1.0);
        done = true;
      } else if (n >= b && 1.0 - occ[b] < 1e-13) {
        // Saturated: the law no longer moves with n.
        if (!have_lo) return absl::InvalidArgumentError("raw count infeasible for every n");
        hi = kInf;
        done = true;
      }
    }
  }
  if (!exact) {
    const double z = NormalQuantile(1.0 - alpha);
    std::tie(lo, hi) = NormalOccupancyCi(static_cast<double>(raw), bd, noise, z);
    if (!std::isfinite(lo)) return absl::InvalidArgumentError("raw count infeasible for every n");
    e.notes.push_back("normal approximation (b*n above exact work limit)");
  }
  if (!std::isfinite(hi)) e.notes.push_back("upper end unbounded: bins saturated");

  const double y = static_cast<double>(raw) - noise / 2.0;
  double point;
  if (y <= 0.0) {
    point = 0.0;
  } else if (y >= bd) {
    point = hi;
  } else {
    point = std::log1p(-y / bd) / std::log1p(-1.0 / bd);
  }
  e.point = std::clamp(point, lo, hi);
  e.lo = lo;
  e.hi = hi;
  return e;
}

absl::StatusOr<Estimate> RangeBound(double x, double fraction, std::optional<double> cap) {
  RETURN_IF_ERROR(CheckFraction(fraction));
  Estimate e;
  e.method = "range_bound";
  e.scope = Scope::kNetwork;
  e.point = x;
  e.lo = x;
  e.hi = x / fraction;
  if (cap) e.hi = std::min(e.hi, *cap);
  e.hi = std::max(e.hi, x);
  return e;
}

absl::StatusOr<Estimate> RangeBound(const Estimate& local, double fraction,
                                    std::optional<double> cap) {
  ASSIGN_OR_RETURN(Estimate e, RangeBound(local.lo, fraction, cap));
  e.hi = std::max(e.lo, local.hi / fraction);
  if (cap) e.hi = std::max(e.lo, std::min(e.hi, *cap));
  e.point = std::clamp(local.point, e.lo, e.hi);
  return e;
}

std::vector<PowerLawModel> PowerLawGrid(const std::vector<double>& alphas,
                                        const std::vector<double>& populations,
                                        const std::vector<double>& visits) {
  std::vector<PowerLawModel> grid;
  for (double a : alphas) {
    for (double n : populations) {
      for (double v : visits) grid.push_back(PowerLawModel{a, n, v});
    }
  }
  return grid;
}

std::vector<double> GeometricGrid(double lo, double hi, double ratio) {
  std::vector<double> g;
  if (!(lo > 0.0) || !(ratio > 1.0) || hi < lo) return g;
  for (double v = lo; v < hi * (1.0 - 1e-12); v *= ratio) g.push_back(std::round(v));
  g.push_back(std::round(hi));
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

namespace {

// Items grouped by rank with mean per-item probabilities of being seen
// locally and network-wide.
struct RankBlock {
  double size;
  double p_local;
  double p_network;
};

constexpr uint64_t kExactRanks = 100;

std::vector<RankBlock> BuildBlocks(const PowerLawModel& m, double fraction, double ratio) {
  const auto n = static_cast<uint64_t>(std::llround(m.population));
  // Normalizer: exact head plus a midpoint-integral tail.
  double h = 0.0;
  const uint64_t head = std::min<uint64_t>(n, 10000);
  for (uint64_t i = 1; i <= head; ++i) h += std::pow(static_cast<double>(i), -m.alpha);
  if (n > head) {
    const double a0 = static_cast<double>(head) + 0.5, a1 = static_cast<double>(n) + 0.5;
    h += std::abs(m.alpha - 1.0) < 1e-12
             ? std::log(a1 / a0)
             : (std::pow(a1, 1.0 - m.alpha) - std::pow(a0, 1.0 - m.alpha)) / (1.0 - m.alpha);
  }
  const double scale = m.visits / h;
  auto probs = [&](double rank) {
    const double lambda = scale * std::pow(rank, -m.alpha);
    return std::pair{-std::expm1(-fraction * lambda), -std::expm1(-lambda)};
  };
  std::vector<RankBlock> blocks;
  uint64_t start = 1;
  while (start <= n) {
    uint64_t end = start;
    if (start > kExactRanks) {
      end = std::min<uint64_t>(n, std::max<uint64_t>(start, static_cast<uint64_t>(start * ratio)));
    }
    RankBlock blk{static_cast<double>(end - start + 1), 0.0, 0.0};
    if (end == start) {
      std::tie(blk.p_local, blk.p_network) = probs(static_cast<double>(start));
    } else {
      // Simpson over the block's ranks.
      const auto [l0, n0] = probs(static_cast<double>(start));
      const auto [l1, n1] = probs((static_cast<double>(start) + static_cast<double>(end)) / 2.0);
      const auto [l2, n2] = probs(static_cast<double>(end));
      blk.p_local = (l0 + 4.0 * l1 + l2) / 6.0;
      blk.p_network = std::max(blk.p_local, (n0 + 4.0 * n1 + n2) / 6.0);
    }
    blocks.push_back(blk);
    start = end + 1;
  }
  return blocks;
}

uint64_t DrawBinomial(Rng& rng, uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - DrawBinomial(rng, n, 1.0 - p);
  if (static_cast<double>(n) * p <= 60.0) {
    // Inversion by walking the pmf upward from zero.
    const double ratio = p / (1.0 - p);
    double f = std::exp(static_cast<double>(n) * std::log1p(-p));
    double u = UniformUnit(rng);
    uint64_t k = 0;
    while (u > f && k < n) {
      u -= f;
      ++k;
      f *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
    }
    return k;
  }
  return std::binomial_distribution<uint64_t>(n, p)(rng);
}

}  // namespace

std::vector<UniqueDraw> SimulateUniqueCounts(const PowerLawModel& model, double fraction,
                                             int trials, uint64_t seed, double block_ratio) {
  const std::vector<RankBlock> blocks = BuildBlocks(model, fraction, block_ratio);
  Rng rng(seed);
  std::normal_distribution<double> z;
  // Rounded normal once the variance is large; std::binomial_distribution
  // pays several lgamma calls per draw there.
  auto draw = [&](uint64_t n, double p) -> uint64_t {
    const double mean = static_cast<double>(n) * p;
    const double var = mean * (1.0 - p);
    if (var < 400.0) return DrawBinomial(rng, n, p);
    const double x = std::round(mean + std::sqrt(var) * z(rng));
    return static_cast<uint64_t>(std::clamp(x, 0.0, static_cast<double>(n)));
  };
  std::vector<UniqueDraw> draws(std::max(trials, 0));
  for (UniqueDraw& d : draws) {
    for (const RankBlock& blk : blocks) {
      const auto size = static_cast<uint64_t>(blk.size);
      const uint64_t local = draw(size, blk.p_local);
      // Seen network-wide but not locally, given unseen locally.
      const double q = blk.p_local >= 1.0 ? 0.0 : (blk.p_network - blk.p_local) / (1.0 - blk.p_local);
      const uint64_t rest = draw(size - local, q);
      d.local += static_cast<double>(local);
      d.network += static_cast<double>(local + rest);
    }
  }
  return draws;
}

absl::StatusOr<McResult> McUniqueExtrapolate(const Estimate& local, double fraction,
                                             const std::vector<PowerLawModel>& grid,
                                             const McOptions& options) {
  RETURN_IF_ERROR(CheckFraction(fraction));
  RETURN_IF_ERROR(CheckConfidence(options.confidence));
  if (grid.empty()) return absl::InvalidArgumentError("power-law grid is empty");
  if (options.trials < 2) return absl::InvalidArgumentError("need at least 2 trials");
  for (const PowerLawModel& m : grid) {
    if (!(m.alpha > 0.0) || !(m.population >= 1.0) || !(m.visits >= 0.0)) {
      return absl::InvalidArgumentError("power-law model needs alpha > 0, N >= 1, visits >= 0");
    }
  }
  McResult result;
  Estimate& e = result.estimate;
  if (fraction == 1.0) {
    e = local;
    e.scope = Scope::kNetwork;
    e.method = "mc_unique_extrapolate";
    e.notes.push_back("fraction 1: network equals local");
    return result;
  }
  ASSIGN_OR_RETURN(const Estimate range, RangeBound(local, fraction, options.universe_cap));

  const double tail = (1.0 - options.confidence) / 2.0;
  result.audit.resize(grid.size());
  // Analytic screen: -1 / +1 when the model's local count is far below /
  // above the observation, 0 when it is close.
  std::vector<int> side(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    McAuditEntry& a = result.audit[i];
    a.model = grid[i];
    a.seed = DeriveSeed(options.seed, {i});
    double mean = 0.0, var = 0.0;
    for (const RankBlock& blk : BuildBlocks(a.model, fraction, options.block_ratio)) {
      mean += blk.size * blk.p_local;
      var += blk.size * blk.p_local * (1.0 - blk.p_local);
    }
    const double slack = 6.0 * std::sqrt(var) + 3.0;
    a.local_mean = mean;
    side[i] = mean + slack < local.lo ? -1 : (mean - slack > local.hi ? 1 : 0);
  }

  // Lines of constant (alpha, visits), ordered by population.
  std::map<std::pair<double, double>, std::vector<size_t>> lines;
  for (size_t i = 0; i < grid.size(); ++i) lines[{grid[i].alpha, grid[i].visits}].push_back(i);
  for (auto& [key, idx] : lines) {
    std::sort(idx.begin(), idx.end(),
              [&](size_t x, size_t y) { return grid[x].population < grid[y].population; });
  }
  // Simulate near models and both ends of any segment the observation crosses.
  std::vector<char> simulate(grid.size(), 0);
  for (const auto& [key, idx] : lines) {
    for (size_t k = 0; k < idx.size(); ++k) {
      if (side[idx[k]] == 0) simulate[idx[k]] = 1;
      if (k + 1 < idx.size() && side[idx[k]] != side[idx[k + 1]]) {
        simulate[idx[k]] = simulate[idx[k + 1]] = 1;
      }
    }
  }
  for (size_t i = 0; i < grid.size(); ++i) {
    McAuditEntry& a = result.audit[i];
    if (!simulate[i]) {
      a.screened_out = true;
      continue;
    }
    const std::vector<UniqueDraw> draws =
        SimulateUniqueCounts(a.model, fraction, options.trials, a.seed, options.block_ratio);
    std::vector<double> ls, ns;
    double nsum = 0.0, lsum = 0.0;
    for (const UniqueDraw& d : draws) {
      ls.push_back(d.local);
      ns.push_back(d.network);
      nsum += d.network;
      lsum += d.local;
    }
    a.local_lo = Quantile(ls, tail);
    a.local_hi = Quantile(ls, 1.0 - tail);
    a.network_lo = Quantile(ns, tail);
    a.network_hi = Quantile(ns, 1.0 - tail);
    a.network_mean = nsum / static_cast<double>(draws.size());
    a.local_mean = lsum / static_cast<double>(draws.size());
    a.accepted = a.local_lo <= local.hi && local.lo <= a.local_hi;
  }

  // Accepted region: nodes plus linear interpolation of the simulated bands
  // between neighbouring populations.
  double lo = kInf, hi = -kInf;
  double best_gap = kInf, best_point = 0.0;
  auto consider = [&](double llo, double lhi, double lmean, double nlo, double nhi, double nmean) {
    if (!(llo <= local.hi && local.lo <= lhi)) return;
    lo = std::min(lo, nlo);
    hi = std::max(hi, nhi);
    const double gap = std::abs(lmean - local.point);
    if (gap < best_gap) {
      best_gap = gap;
      best_point = nmean;
    }
  };
  constexpr int kSubsteps = 32;
  for (const auto& [key, idx] : lines) {
    for (size_t k = 0; k < idx.size(); ++k) {
      const McAuditEntry& a = result.audit[idx[k]];
      if (a.screened_out) continue;
      consider(a.local_lo, a.local_hi, a.local_mean, a.network_lo, a.network_hi, a.network_mean);
      if (k + 1 == idx.size()) continue;
      const McAuditEntry& b = result.audit[idx[k + 1]];
      if (b.screened_out) continue;
      for (int s = 1; s < kSubsteps; ++s) {
        const double t = static_cast<double>(s) / kSubsteps;
        auto mix = [t](double x, double y) { return x + t * (y - x); };
        consider(mix(a.local_lo, b.local_lo), mix(a.local_hi, b.local_hi),
                 mix(a.local_mean, b.local_mean), mix(a.network_lo, b.network_lo),
                 mix(a.network_hi, b.network_hi), mix(a.network_mean, b.network_mean));
      }
    }
  }

  if (!(lo <= hi)) {
    result.fell_back = true;
    e = range;
    e.method = "mc_unique_extrapolate";
    e.notes.push_back("no grid model consistent with the local count; fell back to range_bound");
    return result;
  }
  e.method = "mc_unique_extrapolate";
  e.scope = Scope::kNetwork;
  e.lo = std::clamp(lo, range.lo, range.hi);
  e.hi = std::clamp(hi, range.lo, range.hi);
  if (e.lo != lo || e.hi != hi) e.notes.push_back("clamped to range_bound");
  e.point = std::clamp(best_point, e.lo, e.hi);
  return result;
}

nlohmann::ordered_json McAuditToJson(const McResult& result) {
  nlohmann::ordered_json j;
  j["estimate"] = EstimateToJson(result.estimate);
  j["fell_back"] = result.fell_back;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const McAuditEntry& a : result.audit) {
    nlohmann::ordered_json r;
    r["alpha"] = a.model.alpha;
    r["population"] = a.model.population;
    r["visits"] = a.model.visits;
    r["seed"] = a.seed;
    r["screened_out"] = a.screened_out;
    r["accepted"] = a.accepted;
    r["local_mean"] = a.local_mean;
    if (!a.screened_out) {
      r["local_region"] = {a.local_lo, a.local_hi};
      r["network_region"] = {a.network_lo, a.network_hi};
      r["network_mean"] = a.network_mean;
    }
    rows.push_back(std::move(r));
  }
  j["grid"] = std::move(rows);
  return j;
}

double GuardHitProbability(int g, double subset_weight) {
  if (g <= 0) return 0.0;
  return -std::expm1(static_cast<double>(g) * std::log1p(-std::clamp(subset_weight, 0.0, 1.0)));
}

absl::StatusOr<double> SimulateGuardHitProbability(int g, const std::vector<double>& guard_weights,
                                                   const std::vector<bool>& in_subset, int trials,
                                                   uint64_t seed) {
  if (g < 1) return absl::InvalidArgumentError("g must be >= 1");
  if (guard_weights.size() != in_subset.size()) {
    return absl::InvalidArgumentError("guard weights and subset mask differ in length");
  }
  if (trials < 1) return absl::InvalidArgumentError("need at least 1 trial");
  double total = 0.0, subset = 0.0;
  std::vector<double> others;
  for (size_t i = 0; i < guard_weights.size(); ++i) {
    if (!(guard_weights[i] >= 0.0)) return absl::InvalidArgumentError("negative guard weight");
    total += guard_weights[i];
    if (in_subset[i]) {
      subset += guard_weights[i];
    } else if (guard_weights[i] > 0.0) {
      others.push_back(guard_weights[i]);
    }
  }
  if (!(total > 0.0)) return absl::InvalidArgumentError("guard weights sum to 0");
  if (subset == 0.0) return 0.0;
  std::vector<double> cdf(others.size());
  std::partial_sum(others.begin(), others.end(), cdf.begin());
  const double others_total = others.empty() ? 0.0 : cdf.back();

  // Integrates out the subset draws: only the outside picks are sampled.
  Rng rng(seed);
  std::vector<char> used(others.size());
  double miss_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::fill(used.begin(), used.end(), 0);
    double picked = 0.0, miss = 1.0;
    for (int step = 0; step < g; ++step) {
      miss *= 1.0 - subset / (total - picked);
      if (picked >= others_total * (1.0 - 1e-12) || miss == 0.0) break;
      size_t k;
      do {
        const double u = UniformUnit(rng) * others_total;
        k = std::min<size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(),
                             others.size() - 1);
      } while (used[k]);
      used[k] = 1;
      picked += others[k];
    }
    miss_sum += miss;
  }
  return 1.0 - miss_sum / trials;
}

absl::StatusOr<std::vector<GuardFit>> FitGuardModel(const SubsetMeasurement& a,
                                                    const SubsetMeasurement& b,
                                                    const GuardModelOptions& options) {
  for (const SubsetMeasurement* s : {&a, &b}) {
    if (!(s->weight > 0.0 && s->weight < 1.0)) {
      return absl::InvalidArgumentError("subset weights must be in (0, 1)");
    }
  }
  if (a.weight == b.weight) return absl::InvalidArgumentError("subset weights must differ");
  if (options.g_candidates.empty()) return absl::InvalidArgumentError("no g candidates");
  const SubsetMeasurement& small = a.weight < b.weight ? a : b;
  const SubsetMeasurement& large = a.weight < b.weight ? b : a;
  const Estimate& x = small.unique_ips;
  const Estimate& y = large.unique_ips;
  const double p_cap = options.p_max.value_or(std::min(x.hi, y.hi));
  const double floor = std::max(x.lo, y.lo);

  std::vector<GuardFit> fits;
  for (int g : options.g_candidates) {
    if (g < 1) return absl::InvalidArgumentError("g must be >= 1");
    GuardFit f;
    f.g = g;
    if (options.hit_probability) {
      ASSIGN_OR_RETURN(f.hit_a, options.hit_probability(g, small.weight));
      ASSIGN_OR_RETURN(f.hit_b, options.hit_probability(g, large.weight));
    } else {
      f.hit_a = GuardHitProbability(g, small.weight);
      f.hit_b = GuardHitProbability(g, large.weight);
    }
    if (!(f.hit_a > 0.0) || !(f.hit_b > f.hit_a)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "hit probabilities must be positive and increase with weight (g=", g, ")"));
    }
    // Network total for subset s at promiscuous count p: (c - p)/f + p. Both
    // CI edges are linear in p, so the feasible p form one interval.
    const double ia = 1.0 / f.hit_a, ib = 1.0 / f.hit_b, d = ia - ib;
    const double p_lo = std::max(options.p_min, (x.lo * ia - y.hi * ib) / d);
    const double p_hi = std::min(p_cap, (x.hi * ia - y.lo * ib) / d);
    if (p_lo > p_hi) {
      fits.push_back(f);
      continue;
    }
    f.feasible = true;
    f.p_lo = p_lo;
    f.p_hi = p_hi;
    auto edge = [](double c, double inv, double p) { return c * inv - p * (inv - 1.0); };
    // Lower edges fall with p, so the union spans lower(p_hi)..upper(p_lo).
    f.network_lo = std::max({edge(x.lo, ia, p_hi), edge(y.lo, ib, p_hi), floor});
    f.network_hi = std::max(f.network_lo, std::min(edge(x.hi, ia, p_lo), edge(y.hi, ib, p_lo)));
    fits.push_back(f);
  }
  return fits;
}

nlohmann::ordered_json GuardFitsToJson(const std::vector<GuardFit>& fits) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const GuardFit& f : fits) {
    nlohmann::ordered_json j;
    j["g"] = f.g;
    j["feasible"] = f.feasible;
    j["hit_probability"] = {f.hit_a, f.hit_b};
    if (f.feasible) {
      j["promiscuous_ci"] = {f.p_lo, f.p_hi};
      j["network_ips_ci"] = {f.network_lo, f.network_hi};
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

double SingleGuardPrediction(double count_a, double weight_a, double weight_b) {
  return count_a * (weight_b / weight_a);
}

absl::StatusOr<Estimate> ChurnRate(const Estimate& multi_day, const Estimate& one_day, int days,
                                   ChurnCiMode mode) {
  if (days < 2) return absl::InvalidArgumentError(absl::StrCat("churn needs D >= 2, got ", days));
  const double span = static_cast<double>(days - 1);
  Estimate e;
  e.method = "churn_rate";
  e.scope = multi_day.scope;
  e.point = (multi_day.point - one_day.point) / span;
  if (mode == ChurnCiMode::kInterval) {
    e.lo = (multi_day.lo - one_day.hi) / span;
    e.hi = (multi_day.hi - one_day.lo) / span;
  } else {
    e.lo = (multi_day.lo - one_day.lo) / span;
    e.hi = (multi_day.hi - one_day.hi) / span;
    e.notes.push_back("endpoint-wise CI");
  }
  if (e.lo > e.hi) std::swap(e.lo, e.hi);
  return e;
}

absl::StatusOr<Estimate> HsdirExtrapolate(const Estimate& local, double weight,
                                          double replication_divisor) {
  RETURN_IF_ERROR(CheckFraction(weight));
  if (!(replication_divisor >= 1.0) || !std::isfinite(replication_divisor)) {
    return absl::InvalidArgumentError("replication divisor must be >= 1");
  }
  const double scale = weight * replication_divisor;
  if (scale > 1.0) {
    return absl::InvalidArgumentError("weight x replication divisor must be <= 1");
  }
  Estimate e = local;
  e.scope = Scope::kNetwork;
  e.method = "hsdir_extrapolate";
  e.point = local.point / scale;
  e.lo = std::max(local.lo, local.lo / scale);
  e.hi = local.hi / scale;
  e.raw_point.reset();
  return e;
}

}  // namespace privmeasure::inference
