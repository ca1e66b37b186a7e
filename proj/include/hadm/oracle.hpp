#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hadm/da.hpp"
#include "hadm/market.hpp"
#include "hadm/stability.hpp"
#include "hadm/types.hpp"

namespace hadm {

class MalformedInstanceError : public HadmError {
 public:
  using HadmError::HadmError;
};

struct StableSet {
  std::vector<Allocation> allocations;  // canonical order, duplicate-free
  StabilityMode mode = StabilityMode::Full;
  std::uint64_t market_fingerprint = 0;
};

// FNV-1a over a canonical flattening of the market.
inline std::uint64_t market_fingerprint(const Market& market) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    h ^= 0x1f;
    h *= 1099511628211ull;
  };
  for (const auto& [sid, entry] : market.students()) {
    mix("s:" + sid);
    for (const auto& e : entry.rol.entries)
      mix(e.college + ":" + std::to_string(terms_value(e.terms)));
  }
  for (const auto& [cid, entry] : market.colleges()) {
    mix("c:" + cid + ":" + std::to_string(entry.profile.quota_state) + ":" +
        std::to_string(entry.profile.quota_self) + ":" +
        (entry.profile.funding_policy == FundingPolicy::Merit ? "m" : "i"));
    for (const auto& s : entry.profile.ranking) mix(s);
  }
  return h;
}

struct EnumerationBounds {
  int max_students = 8;
  double max_assignments = 1e7;  // product of (|ROL|+1) over students
};

// Enumerates every feasible allocation (each student takes an ROL entry or
// the outside option, quotas respected) and filters by the requested
// stability checker.
inline StableSet enumerate_stable(const Market& market, StabilityMode mode,
                                  EnumerationBounds bounds = {}) {
  if (static_cast<int>(market.students().size()) > bounds.max_students)
    throw BoundExceededError("enumerate_stable: too many students");
  double product = 1.0;
  std::vector<const StudentId*> order;
  std::vector<const std::vector<RolEntry>*> rols;
  for (const auto& [sid, entry] : market.students()) {
    product *= static_cast<double>(entry.rol.entries.size() + 1);
    order.push_back(&sid);
    rols.push_back(&entry.rol.entries);
  }
  if (product > bounds.max_assignments)
    throw BoundExceededError("enumerate_stable: assignment space too large");

  StableSet out;
  out.mode = mode;
  out.market_fingerprint = market_fingerprint(market);

  std::map<RolEntry, int> counts;
  std::vector<Contract> current;
  auto recurse = [&](auto&& self, std::size_t idx) -> void {
    if (idx == order.size()) {
      Allocation y{std::set<Contract>(current.begin(), current.end())};
      StabilityVerdict v = mode == StabilityMode::Full
                               ? is_stable(market, y)
                               : is_certainly_stable(market, y);
      if (v.stable) out.allocations.push_back(std::move(y));
      return;
    }
    self(self, idx + 1);  // outside option
    for (const auto& e : *rols[idx]) {
      int q = market.profile(e.college).quota(e.terms);
      if (counts[e] >= q) continue;
      ++counts[e];
      current.push_back(Contract{*order[idx], e.college, e.terms});
      self(self, idx + 1);
      current.pop_back();
      --counts[e];
    }
  };
  recurse(recurse, 0);
  std::sort(out.allocations.begin(), out.allocations.end());
  return out;
}

inline std::pair<int, Allocation> max_stable_size(const Market& market,
                                                  StabilityMode mode,
                                                  EnumerationBounds bounds = {}) {
  StableSet set = enumerate_stable(market, mode, bounds);
  const Allocation* best = nullptr;
  for (const auto& y : set.allocations)
    if (!best || y.size() > best->size()) best = &y;
  if (!best) return {0, Allocation{}};  // unreachable: empty set cannot occur
  return {static_cast<int>(best->size()), *best};
}

// Direct-definition block search: enumerates candidate sets Z per college up
// to the given size, checking both the college side (exact choice) and the
// student side. Ground truth for the closed-form checkers.
inline std::vector<BlockWitness> find_blocks_bruteforce(const Market& market,
                                                        const Allocation& y,
                                                        int max_block_size) {
  std::vector<BlockWitness> out;
  for (const auto& [cid, centry] : market.colleges()) {
    std::set<Contract> cut = detail::college_cut(y, cid);
    // Candidates must be strictly preferred by their student and name an
    // acceptable student; anything else can never sit inside a block.
    std::vector<Contract> candidates;
    for (const auto& sid : centry.profile.ranking) {
      for (Terms t : {Terms::StateFunded, Terms::SelfFunded}) {
        Contract cand{sid, cid, t};
        if (y.contains(cand)) continue;
        int r = market.student_rank(sid, std::optional<RolEntry>{cand.entry()});
        if (r == kUnacceptable) continue;
        if (r >= market.student_rank(sid, y.assignment(sid))) continue;
        candidates.push_back(cand);
      }
    }
    int n = static_cast<int>(candidates.size());
    if (n > 20)
      throw BoundExceededError("find_blocks_bruteforce: candidate set at '" +
                               cid + "' too large");
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (__builtin_popcount(mask) > max_block_size) continue;
      std::set<Contract> z;
      std::set<StudentId> students;
      bool dup = false;
      for (int i = 0; i < n && !dup; ++i) {
        if (!(mask & (1u << i))) continue;
        if (!students.insert(candidates[i].student).second) dup = true;
        z.insert(candidates[i]);
      }
      if (dup) continue;  // a student chooses at most one contract
      std::set<Contract> pool = cut;
      pool.insert(z.begin(), z.end());
      std::set<Contract> chosen = market.college_choice_exact(cid, pool);
      bool all = std::all_of(z.begin(), z.end(), [&](const Contract& c) {
        return chosen.count(c) > 0;
      });
      if (!all) continue;
      BlockCondition kind = BlockCondition::SwapIn;
      bool all_retiming = std::all_of(z.begin(), z.end(), [&](const Contract& c) {
        return y.contains(Contract{c.student, cid, opposite(c.terms)});
      });
      if (z.size() == 1)
        kind = all_retiming ? BlockCondition::Retiming
                            : BlockCondition::Singleton;
      else if (all_retiming)
        kind = BlockCondition::Retiming;
      out.push_back(BlockWitness{kind, z, {}, cid});
    }
  }
  return out;
}

// Pairwise blocking in the related market; witnesses the embedding lemma.
inline std::optional<std::pair<StudentId, RolEntry>> find_related_blocking_pair(
    const Market& market, const Allocation& y) {
  RelatedMatching mu = corresponding_matching(y);
  std::map<RolEntry, std::vector<StudentId>> matched;
  for (const auto& [s, e] : mu) matched[e].push_back(s);
  for (const auto& aux : related_market(market).aux_colleges) {
    RolEntry e = aux.entry();
    auto it = matched.find(e);
    int used = it == matched.end() ? 0 : static_cast<int>(it->second.size());
    int worst = -1;
    if (it != matched.end())
      for (const auto& s : it->second)
        worst = std::max(worst, market.college_rank(aux.college, s));
    for (const auto& [sid, _] : market.students()) {
      if (mu.count(sid) && mu.at(sid) == e) continue;
      int r = market.student_rank(sid, std::optional<RolEntry>{e});
      if (r == kUnacceptable) continue;
      std::optional<RolEntry> own =
          mu.count(sid) ? std::optional<RolEntry>{mu.at(sid)} : std::nullopt;
      if (r >= market.student_rank(sid, own)) continue;
      if (!market.college_accepts(aux.college, sid)) continue;
      if (used < aux.quota ||
          (worst >= 0 && market.college_rank(aux.college, sid) < worst))
        return std::make_pair(sid, e);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SR-DA manipulation search.

struct MisreportWitness {
  RankOrderList reported;
  std::optional<Contract> outcome;  // under the true preferences' eyes
};

// Exhaustive search over permutations and truncations of the student's
// acceptable set for a report that strictly improves her SR-DA outcome,
// judged by her true preferences. The truncation at the SP-DA assignment is
// tried first.
inline std::optional<MisreportWitness> find_sr_da_manipulation(
    const Market& market, const StudentId& student) {
  const RankOrderList& truth = market.rol(student);
  if (truth.entries.size() > 4)
    throw BoundExceededError("find_sr_da_manipulation: ROL too long");

  Allocation true_srda = sr_da(market);
  int baseline = market.student_rank(student, true_srda.assignment(student));

  auto try_report =
      [&](const std::vector<RolEntry>& report) -> std::optional<MisreportWitness> {
    MarketData data = market.data();
    data.students[student].rol.entries = report;
    auto validated = Market::validate(std::move(data));
    Allocation y = sr_da(*validated.market);
    auto got = y.assignment(student);
    if (got && market.student_rank(student, got) < baseline)
      return MisreportWitness{RankOrderList{report}, got};
    return std::nullopt;
  };

  // Truncation at the SP-DA assignment first.
  Allocation spda = sp_da(market);
  if (auto mine = spda.assignment(student)) {
    std::vector<RolEntry> trunc;
    for (const auto& e : truth.entries) {
      trunc.push_back(e);
      if (e == mine->entry()) break;
    }
    if (auto w = try_report(trunc)) return w;
  }

  // All injective sequences over the acceptable set.
  std::vector<RolEntry> report;
  std::vector<bool> used(truth.entries.size(), false);
  std::optional<MisreportWitness> found;
  auto recurse = [&](auto&& self) -> void {
    if (found) return;
    if (!report.empty())
      if (auto w = try_report(report)) {
        found = w;
        return;
      }
    for (std::size_t i = 0; i < truth.entries.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      report.push_back(truth.entries[i]);
      self(self);
      report.pop_back();
      used[i] = false;
      if (found) return;
    }
  };
  recurse(recurse);
  return found;
}

// ---------------------------------------------------------------------------
// Restricted SMTI and the hardness reduction.

struct SmtiMan {
  std::string id;
  std::vector<std::string> prefs;  // women, best first
};

struct SmtiWoman {
  std::string id;
  std::vector<std::string> prefs;  // men, best first (strict)
};

struct SmtiTiedWoman {
  std::string id;
  std::array<std::string, 2> men;  // exactly two acceptable men, tied
};

struct SmtiInstance {
  std::vector<SmtiMan> men;
  std::vector<SmtiWoman> women_strict;
  std::vector<SmtiTiedWoman> women_tied;
};

inline void validate_smti(const SmtiInstance& smti) {
  if (smti.men.size() != smti.women_strict.size() + smti.women_tied.size())
    throw MalformedInstanceError("MalformedInstance: |M| != |W|");
  std::set<std::string> men_ids, women_ids;
  for (const auto& m : smti.men)
    if (!men_ids.insert(m.id).second)
      throw MalformedInstanceError("MalformedInstance: duplicate man id");
  for (const auto& w : smti.women_strict)
    if (!women_ids.insert(w.id).second)
      throw MalformedInstanceError("MalformedInstance: duplicate woman id");
  for (const auto& w : smti.women_tied)
    if (!women_ids.insert(w.id).second)
      throw MalformedInstanceError("MalformedInstance: duplicate woman id");
  for (const auto& m : smti.men) {
    std::set<std::string> seen;
    for (const auto& w : m.prefs) {
      if (!women_ids.count(w))
        throw MalformedInstanceError("MalformedInstance: man '" + m.id +
                                     "' ranks unknown woman '" + w + "'");
      if (!seen.insert(w).second)
        throw MalformedInstanceError("MalformedInstance: duplicate pref");
    }
  }
  for (const auto& w : smti.women_strict) {
    std::set<std::string> seen;
    for (const auto& m : w.prefs) {
      if (!men_ids.count(m))
        throw MalformedInstanceError("MalformedInstance: woman '" + w.id +
                                     "' ranks unknown man '" + m + "'");
      if (!seen.insert(m).second)
        throw MalformedInstanceError("MalformedInstance: duplicate pref");
    }
  }
  for (const auto& w : smti.women_tied) {
    if (w.men[0] == w.men[1] || !men_ids.count(w.men[0]) ||
        !men_ids.count(w.men[1]))
      throw MalformedInstanceError(
          "MalformedInstance: tied woman '" + w.id +
          "' must name exactly two distinct known men");
  }
}

// Builds the corresponding college admissions market: a college per woman, a
// student per man and per tied woman, one state-funded seat per strict
// woman, one seat of each kind per tied woman.
inline Market reduce_smti(const SmtiInstance& smti) {
  validate_smti(smti);
  MarketData data;
  auto college_of = [](const std::string& w) { return "c_" + w; };

  std::map<std::string, std::pair<std::string, std::string>> tied_order;
  for (const auto& w : smti.women_tied) {
    // Second and third ranked men, ordered lexicographically by id.
    auto [p, f] = std::minmax(w.men[0], w.men[1]);
    tied_order[w.id] = {p, f};
  }
  std::set<std::string> tied_ids;
  for (const auto& w : smti.women_tied) tied_ids.insert(w.id);

  for (const auto& w : smti.women_strict) {
    CollegeProfile prof;
    prof.quota_state = 1;
    prof.quota_self = 0;
    for (const auto& m : w.prefs) prof.ranking.push_back(m);
    data.colleges[college_of(w.id)] = CollegeEntry{std::move(prof), {}};
  }
  for (const auto& w : smti.women_tied) {
    CollegeProfile prof;
    prof.quota_state = 1;
    prof.quota_self = 1;
    prof.ranking = {w.id, tied_order[w.id].first, tied_order[w.id].second};
    data.colleges[college_of(w.id)] = CollegeEntry{std::move(prof), {}};
    StudentEntry se;
    se.rol.entries = {RolEntry{college_of(w.id), Terms::StateFunded},
                      RolEntry{college_of(w.id), Terms::SelfFunded}};
    data.students[w.id] = std::move(se);
  }
  for (const auto& m : smti.men) {
    StudentEntry se;
    for (const auto& w : m.prefs) {
      if (tied_ids.count(w)) {
        const auto& [p, f] = tied_order[w];
        if (m.id == p)
          se.rol.entries.push_back(RolEntry{college_of(w), Terms::StateFunded});
        else if (m.id == f)
          se.rol.entries.push_back(RolEntry{college_of(w), Terms::SelfFunded});
        // Men the tied woman finds unacceptable get no contract with c_w.
      } else {
        se.rol.entries.push_back(RolEntry{college_of(w), Terms::StateFunded});
        se.rol.entries.push_back(RolEntry{college_of(w), Terms::SelfFunded});
      }
    }
    data.students[m.id] = std::move(se);
  }
  auto result = Market::validate(std::move(data));
  if (!result.ok())
    throw MalformedInstanceError("MalformedInstance: reduction failed");
  return *result.market;
}

// Exhaustive search for a weakly stable matching covering all women.
inline bool smti_perfect_stable_exists(const SmtiInstance& smti) {
  validate_smti(smti);
  if (smti.men.size() > 5)
    throw BoundExceededError("smti_perfect_stable_exists: too many men");

  std::map<std::string, const SmtiMan*> men;
  for (const auto& m : smti.men) men[m.id] = &m;
  auto man_rank = [&](const std::string& m, const std::string& w) {
    const auto& prefs = men.at(m)->prefs;
    auto it = std::find(prefs.begin(), prefs.end(), w);
    return it == prefs.end() ? kUnacceptable
                             : static_cast<int>(it - prefs.begin());
  };

  struct WomanView {
    std::string id;
    bool tied = false;
    std::vector<std::string> acceptable;  // in her preference order
  };
  std::vector<WomanView> women;
  for (const auto& w : smti.women_strict)
    women.push_back(WomanView{w.id, false, w.prefs});
  for (const auto& w : smti.women_tied)
    women.push_back(WomanView{w.id, true, {w.men[0], w.men[1]}});
  auto woman_rank = [&](const WomanView& w, const std::string& m) {
    auto it = std::find(w.acceptable.begin(), w.acceptable.end(), m);
    if (it == w.acceptable.end()) return kUnacceptable;
    return w.tied ? 0 : static_cast<int>(it - w.acceptable.begin());
  };

  std::map<std::string, std::string> match_wm;  // woman -> man
  std::set<std::string> used_men;
  bool found = false;
  auto weakly_stable = [&]() {
    std::map<std::string, std::string> match_mw;
    for (const auto& [w, m] : match_wm) match_mw[m] = w;
    for (const auto& w : women) {
      auto wit = match_wm.find(w.id);
      int w_current = wit == match_wm.end()
                          ? kUnacceptable
                          : woman_rank(w, wit->second);
      for (const auto& mid : w.acceptable) {
        if (man_rank(mid, w.id) == kUnacceptable) continue;
        if (wit != match_wm.end() && wit->second == mid) continue;
        bool w_strict = woman_rank(w, mid) < w_current;
        auto mit = match_mw.find(mid);
        int m_current = mit == match_mw.end()
                            ? kUnacceptable
                            : man_rank(mid, mit->second);
        bool m_strict = man_rank(mid, w.id) < m_current;
        if (w_strict && m_strict) return false;
      }
    }
    return true;
  };
  auto recurse = [&](auto&& self, std::size_t idx) -> void {
    if (found) return;
    if (idx == women.size()) {
      if (match_wm.size() == women.size() && weakly_stable()) found = true;
      return;
    }
    const WomanView& w = women[idx];
    for (const auto& mid : w.acceptable) {
      if (used_men.count(mid)) continue;
      if (man_rank(mid, w.id) == kUnacceptable) continue;
      match_wm[w.id] = mid;
      used_men.insert(mid);
      self(self, idx + 1);
      used_men.erase(mid);
      match_wm.erase(w.id);
      if (found) return;
    }
    // Leaving a woman unmatched can never yield a perfect matching; prune.
  };
  recurse(recurse, 0);
  return found;
}

// The reduction lemma, checked both ways on one instance: a perfect weakly
// stable matching exists iff the reduced market has a certainly stable
// allocation assigning every student.
inline bool smti_lemma_check(const SmtiInstance& smti,
                             EnumerationBounds bounds = {}) {
  bool perfect = smti_perfect_stable_exists(smti);
  Market market = reduce_smti(smti);
  int total = static_cast<int>(market.students().size());
  auto [size, _] = max_stable_size(market, StabilityMode::Certain, bounds);
  return perfect == (size == total);
}

}  // namespace hadm
