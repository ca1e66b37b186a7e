#pragma once

#include <random>
#include <set>

#include "hadm/generator.hpp"
#include "hadm/market.hpp"
#include "hadm/types.hpp"

namespace fixtures {

using namespace hadm;

// Two students competing for one program with one seat of each kind. The
// college ranks r above p but would rather have r pay her own way so the
// funded seat can go to p; two stable allocations exist.
inline Market ex1() {
  MarketData data;
  data.students["r"].rol.entries = {{"c", Terms::StateFunded},
                                    {"c", Terms::SelfFunded}};
  data.students["p"].rol.entries = {{"c", Terms::StateFunded}};
  auto& c = data.colleges["c"].profile;
  c.quota_state = 1;
  c.quota_self = 1;
  c.ranking = {"r", "p"};
  c.funding_policy = FundingPolicy::InverseMerit;
  return *Market::validate(std::move(data)).market;
}

// Three students and two programs; the alternate stable allocation assigns
// fewer students than SP-DA does.
inline Market ex2() {
  MarketData data;
  data.students["r"].rol.entries = {{"h", Terms::StateFunded},
                                    {"h", Terms::SelfFunded}};
  data.students["g"].rol.entries = {{"h", Terms::StateFunded},
                                    {"h", Terms::SelfFunded}};
  data.students["p"].rol.entries = {{"h", Terms::StateFunded},
                                    {"c", Terms::StateFunded}};
  auto& h = data.colleges["h"].profile;
  h.quota_state = 1;
  h.quota_self = 1;
  h.ranking = {"r", "p", "g"};
  auto& c = data.colleges["c"].profile;
  c.quota_state = 1;
  c.quota_self = 0;
  c.ranking = {"r", "p", "g"};
  return *Market::validate(std::move(data)).market;
}

inline Allocation alloc(std::set<Contract> contracts) {
  return Allocation{std::move(contracts)};
}

// Small-market generator settings for property suites.
inline GeneratorConfig small_config(std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.n_students = 3 + static_cast<int>(seed % 6);  // 3..8
  cfg.n_colleges = 2 + static_cast<int>(seed / 3 % 3);  // 2..4
  cfg.quota_state_min = 0;
  cfg.quota_state_max = 2;
  cfg.quota_self_min = 0;
  cfg.quota_self_max = 2;
  cfg.rol_min = 1;
  cfg.rol_max = 4;
  cfg.merit_share = seed % 2 ? 1.0 : 0.0;
  cfg.score_levels = 4;
  cfg.seed = seed;
  return cfg;
}

// Random allocation over a market's contract space: most are feasible and
// quota-respecting, some deliberately violate quotas or acceptability so the
// individual rationality path gets exercised too.
inline Allocation random_allocation(const Market& market, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  bool respect_quotas = coin(rng) > 0.15;
  std::map<RolEntry, int> used;
  Allocation y;
  for (const auto& [sid, entry] : market.students()) {
    if (entry.rol.entries.empty() || coin(rng) < 0.3) continue;
    std::uniform_int_distribution<std::size_t> pick(
        0, entry.rol.entries.size() - 1);
    RolEntry e = entry.rol.entries[pick(rng)];
    if (respect_quotas &&
        used[e] >= market.profile(e.college).quota(e.terms))
      continue;
    ++used[e];
    y.insert(Contract{sid, e.college, e.terms});
  }
  return y;
}

}  // namespace fixtures
