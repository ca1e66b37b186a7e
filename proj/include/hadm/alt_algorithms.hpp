#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "hadm/da.hpp"
#include "hadm/market.hpp"
#include "hadm/stability.hpp"
#include "hadm/types.hpp"

namespace hadm {

using StudentCollegePair = std::pair<StudentId, CollegeId>;

enum class PairSetKind { FlipSet, RejectSet };

// The heuristics' working sets: A (Preference Flip) or B (Greedy Reject).
struct PairSet {
  PairSetKind kind;
  std::set<StudentCollegePair> pairs;
};

enum class RemovalReason { WitnessRule, RandomFallback };

struct AlgorithmTrace {
  struct Iteration {
    Allocation result;
    bool certainly_stable = false;
    std::optional<StudentCollegePair> removed;
    RemovalReason reason = RemovalReason::WitnessRule;
  };
  std::uint64_t seed = 0;
  std::vector<Iteration> iterations;
};

// Pairs (s, c) where s ranks the self-funded contract with c immediately
// after the state-funded one.
inline PairSet initial_flip_set(const Market& market) {
  PairSet out{PairSetKind::FlipSet, {}};
  for (const auto& [sid, entry] : market.students()) {
    const auto& rol = entry.rol.entries;
    for (std::size_t i = 0; i + 1 < rol.size(); ++i) {
      if (rol[i].terms == Terms::StateFunded &&
          rol[i + 1].terms == Terms::SelfFunded &&
          rol[i].college == rol[i + 1].college)
        out.pairs.insert({sid, rol[i].college});
    }
  }
  return out;
}

// Pairs (s, c) where SP-DA assigns s a state-funded seat at c.
inline PairSet initial_reject_set(const Market& market) {
  PairSet out{PairSetKind::RejectSet, {}};
  Allocation y = sp_da(market);
  for (const auto& c : y.contracts())
    if (c.terms == Terms::StateFunded) out.pairs.insert({c.student, c.college});
  return out;
}

// Swaps each flagged state-then-self adjacent pair so the state-funded entry
// appears immediately after the self-funded one. Pairs must satisfy the
// flip-set invariant in the input market.
inline Market apply_flip(const Market& market,
                         const std::set<StudentCollegePair>& pairs) {
  MarketData data = market.data();
  for (const auto& [sid, cid] : pairs) {
    auto it = data.students.find(sid);
    if (it == data.students.end())
      throw PreconditionError("apply_flip: unknown student '" + sid + "'");
    auto& rol = it->second.rol.entries;
    bool found = false;
    for (std::size_t i = 0; i + 1 < rol.size(); ++i) {
      if (rol[i].college == cid && rol[i].terms == Terms::StateFunded &&
          rol[i + 1].college == cid && rol[i + 1].terms == Terms::SelfFunded) {
        std::swap(rol[i], rol[i + 1]);
        found = true;
        break;
      }
    }
    if (!found)
      throw PreconditionError("apply_flip: (" + sid + ", " + cid +
                              ") does not satisfy the flip-set invariant");
  }
  auto result = Market::validate(std::move(data));
  return *result.market;
}

// Deletes the state-funded entry with the flagged college from each
// student's ROL.
inline Market apply_reject(const Market& market,
                           const std::set<StudentCollegePair>& pairs) {
  MarketData data = market.data();
  for (const auto& [sid, cid] : pairs) {
    auto it = data.students.find(sid);
    if (it == data.students.end())
      throw PreconditionError("apply_reject: unknown student '" + sid + "'");
    auto& rol = it->second.rol.entries;
    auto jt = std::find(rol.begin(), rol.end(),
                        RolEntry{cid, Terms::StateFunded});
    if (jt == rol.end())
      throw PreconditionError("apply_reject: (" + sid + ", " + cid +
                              ") has no state-funded ROL entry");
    rol.erase(jt);
  }
  auto result = Market::validate(std::move(data));
  return *result.market;
}

namespace detail {

// Integer-indexed mirror of the market for the heuristics' removal loop,
// which can run |A|+|B| iterations and cannot afford string-keyed maps or
// market rebuilds per iteration. Student and college indices follow the
// serialization (map) order, so index comparisons match id comparisons.
struct IndexedMarket {
  std::vector<const StudentId*> student_ids;
  std::vector<const CollegeId*> college_ids;
  std::map<StudentId, int> student_index;
  std::map<CollegeId, int> college_index;
  std::vector<std::array<int, 2>> quota;              // [college][terms01]
  std::vector<std::vector<int>> crank;                // [college][student]
  std::vector<std::vector<std::pair<int, int>>> rol;  // [student] (college, t)
};

inline IndexedMarket build_index(const Market& market) {
  IndexedMarket idx;
  for (const auto& [sid, _] : market.students()) {
    idx.student_index[sid] = static_cast<int>(idx.student_ids.size());
    idx.student_ids.push_back(&sid);
  }
  for (const auto& [cid, _] : market.colleges()) {
    idx.college_index[cid] = static_cast<int>(idx.college_ids.size());
    idx.college_ids.push_back(&cid);
  }
  int n_students = static_cast<int>(idx.student_ids.size());
  for (const auto& [cid, entry] : market.colleges()) {
    idx.quota.push_back(
        {entry.profile.quota_self, entry.profile.quota_state});
    std::vector<int> ranks(n_students, kUnranked);
    int r = 0;
    for (const auto& s : entry.profile.ranking)
      ranks[idx.student_index.at(s)] = r++;
    idx.crank.push_back(std::move(ranks));
  }
  for (const auto& [sid, entry] : market.students()) {
    std::vector<std::pair<int, int>> rol;
    for (const auto& e : entry.rol.entries)
      rol.emplace_back(idx.college_index.at(e.college),
                       terms_value(e.terms));
    idx.rol.push_back(std::move(rol));
  }
  return idx;
}

// Shared state of one fast heuristics run.
struct FastRun {
  const IndexedMarket* idx;
  std::set<std::pair<int, int>> a;  // flip set, (student, college)
  std::set<std::pair<int, int>> b;  // reject set
  // Per student: effective ROL under the current sets, and assignment.
  std::vector<std::vector<std::pair<int, int>>> eff;
  std::vector<std::pair<int, int>> assigned;  // (college, terms) or (-1, -1)
};

// Rank of (college, terms) in the ORIGINAL ROL; kUnacceptable if absent.
inline int fast_orank(const IndexedMarket& idx, int s, int c, int t) {
  const auto& rol = idx.rol[s];
  for (std::size_t i = 0; i < rol.size(); ++i)
    if (rol[i].first == c && rol[i].second == t) return static_cast<int>(i);
  return kUnacceptable;
}

inline int fast_arank(const IndexedMarket& idx, const FastRun& run, int s) {
  auto [c, t] = run.assigned[s];
  if (c < 0) return static_cast<int>(idx.rol[s].size());
  return fast_orank(idx, s, c, t);
}

// Materializes the effective ROLs (flips applied where the pair is in A but
// not B, state entries dropped where the pair is in B) and runs SP-DA.
inline void fast_sp_da(FastRun& run) {
  const IndexedMarket& idx = *run.idx;
  int n_students = static_cast<int>(idx.rol.size());
  int n_colleges = static_cast<int>(idx.quota.size());
  for (int s = 0; s < n_students; ++s) {
    auto& eff = run.eff[s];
    eff.clear();
    const auto& rol = idx.rol[s];
    for (std::size_t i = 0; i < rol.size(); ++i) {
      auto [c, t] = rol[i];
      if (t == 1) {
        if (run.b.count({s, c})) continue;
        if (run.a.count({s, c})) {
          // Flip-set invariant: the next entry is (c, self-funded).
          eff.emplace_back(c, 0);
          eff.emplace_back(c, 1);
          ++i;
          continue;
        }
      }
      eff.emplace_back(c, t);
    }
  }

  // Proposal-at-a-time DA; the outcome is order-independent.
  std::vector<std::vector<std::pair<int, int>>> held(2 * n_colleges);
  std::vector<int> next(n_students, 0);
  std::vector<int> stack;
  for (int s = n_students - 1; s >= 0; --s) stack.push_back(s);
  auto worse = [](const std::pair<int, int>& a, const std::pair<int, int>& b) {
    return a.first < b.first;  // max-heap on rank: worst incumbent on top
  };
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    while (next[s] < static_cast<int>(run.eff[s].size())) {
      auto [c, t] = run.eff[s][next[s]++];
      int r = idx.crank[c][s];
      if (r == kUnranked) continue;
      int q = idx.quota[c][t];
      if (q == 0) continue;
      auto& cohort = held[2 * c + t];
      if (static_cast<int>(cohort.size()) < q) {
        cohort.emplace_back(r, s);
        std::push_heap(cohort.begin(), cohort.end(), worse);
        break;
      }
      if (r < cohort.front().first) {
        std::pop_heap(cohort.begin(), cohort.end(), worse);
        stack.push_back(cohort.back().second);
        cohort.back() = {r, s};
        std::push_heap(cohort.begin(), cohort.end(), worse);
        break;
      }
    }
  }
  run.assigned.assign(n_students, {-1, -1});
  for (int c = 0; c < n_colleges; ++c)
    for (int t = 0; t < 2; ++t)
      for (const auto& [r, s] : held[2 * c + t]) run.assigned[s] = {c, t};
}

// Certain-stability check against the ORIGINAL market, mirroring
// is_certainly_stable condition by condition. Fills `witness_states` with
// the (student, college) pairs whose state-funded contract appears in some
// witness's blocking set, which is all the removal rule consumes.
inline bool fast_certainly_stable(const FastRun& run,
                                  std::set<std::pair<int, int>>& witness_states) {
  const IndexedMarket& idx = *run.idx;
  int n_students = static_cast<int>(idx.rol.size());
  int n_colleges = static_cast<int>(idx.quota.size());
  witness_states.clear();
  bool stable = true;

  std::vector<std::array<int, 2>> used(n_colleges, {0, 0});
  std::vector<std::array<int, 2>> worst(n_colleges, {-1, -1});
  for (int s = 0; s < n_students; ++s) {
    auto [c, t] = run.assigned[s];
    if (c < 0) continue;
    ++used[c][t];
    worst[c][t] = std::max(worst[c][t], idx.crank[c][s]);
  }

  std::vector<int> arank(n_students);
  for (int s = 0; s < n_students; ++s) arank[s] = fast_arank(idx, run, s);

  // Movers per (college, terms): incumbents strictly preferring the
  // opposite terms at the same college.
  std::vector<std::vector<int>> movers(2 * n_colleges);
  for (int s = 0; s < n_students; ++s) {
    auto [c, t] = run.assigned[s];
    if (c < 0) continue;
    if (fast_orank(idx, s, c, 1 - t) < arank[s]) movers[2 * c + t].push_back(s);
  }

  // Conditions 2 and 3, iterating students over their ROL prefixes.
  std::vector<std::array<char, 2>> swap_eligible(n_colleges, {0, 0});
  for (int s = 0; s < n_students; ++s) {
    const auto& rol = idx.rol[s];
    for (std::size_t i = 0; i < rol.size(); ++i) {
      if (static_cast<int>(i) >= arank[s]) break;
      auto [c, t] = rol[i];
      if (run.assigned[s].first == c) continue;  // cohort exclusion
      int r = idx.crank[c][s];
      if (r == kUnranked) continue;
      if (used[c][t] < idx.quota[c][t]) {
        stable = false;  // singleton block into a slack seat
        if (t == 1) witness_states.insert({s, c});
        continue;
      }
      if (used[c][t] == 0) continue;
      if (r < worst[c][t]) {
        stable = false;  // singleton block displacing a worse incumbent
        if (t == 1) witness_states.insert({s, c});
        continue;
      }
      // Swap-in eligibility for the full (c, t) cohort.
      if (movers[2 * c + t].empty()) continue;
      bool slack_u = used[c][1 - t] < idx.quota[c][1 - t];
      if (!slack_u && (worst[c][1 - t] < 0 || r > worst[c][1 - t])) continue;
      stable = false;
      swap_eligible[c][t] = 1;
      if (t == 1) witness_states.insert({s, c});
    }
  }
  // Swap-in witnesses also carry the mover's opposite-terms contract, which
  // is state-funded when the cohort under scrutiny is the self-funded one.
  for (int c = 0; c < n_colleges; ++c)
    if (swap_eligible[c][0])
      for (int s : movers[2 * c + 0]) witness_states.insert({s, c});

  // Condition 4': per (college, terms), does any incumbent not strictly
  // prefer her own terms over the opposite?
  std::vector<std::array<char, 2>> weak_incumbent(n_colleges, {0, 0});
  for (int s = 0; s < n_students; ++s) {
    auto [c, u] = run.assigned[s];
    if (c < 0) continue;
    if (arank[s] > fast_orank(idx, s, c, 1 - u)) weak_incumbent[c][u] = 1;
  }
  for (int s = 0; s < n_students; ++s) {
    auto [c, t] = run.assigned[s];
    if (c < 0) continue;
    int u = 1 - t;
    if (fast_orank(idx, s, c, u) >= arank[s]) continue;
    if (used[c][u] < idx.quota[c][u] || weak_incumbent[c][u]) {
      stable = false;
      if (u == 1) witness_states.insert({s, c});
    }
  }
  return stable;
}

inline Allocation fast_run_heuristics(const Market& market, std::uint64_t seed,
                                      bool use_flip, bool use_reject) {
  IndexedMarket idx = build_index(market);
  FastRun run;
  run.idx = &idx;
  run.eff.resize(idx.rol.size());
  if (use_flip)
    for (const auto& [sid, cid] : initial_flip_set(market).pairs)
      run.a.insert({idx.student_index.at(sid), idx.college_index.at(cid)});
  if (use_reject)
    for (const auto& [sid, cid] : initial_reject_set(market).pairs)
      run.b.insert({idx.student_index.at(sid), idx.college_index.at(cid)});
  std::mt19937_64 rng(seed);

  std::set<std::pair<int, int>> witness_states;
  while (true) {
    fast_sp_da(run);
    bool stable = fast_certainly_stable(run, witness_states);
    if (stable || (run.a.empty() && run.b.empty())) break;

    // Removal rule, mirrored from select_removal: best witnessed pair by
    // (college id, college rank), else a seeded uniform pick over the
    // sorted union of both sets.
    std::optional<std::pair<int, int>> best;
    int best_rank = kUnranked;
    auto consider = [&](const std::pair<int, int>& pair) {
      if (!witness_states.count({pair.first, pair.second})) return;
      int r = idx.crank[pair.second][pair.first];
      if (!best || pair.second < best->second ||
          (pair.second == best->second && r < best_rank)) {
        best = pair;
        best_rank = r;
      }
    };
    for (const auto& p : run.a) consider(p);
    for (const auto& p : run.b) consider(p);
    std::pair<int, int> removed;
    if (best) {
      removed = *best;
    } else {
      std::set<std::pair<int, int>> candidates = run.a;
      candidates.insert(run.b.begin(), run.b.end());
      std::vector<std::pair<int, int>> flat(candidates.begin(),
                                            candidates.end());
      std::uniform_int_distribution<std::size_t> dist(0, flat.size() - 1);
      removed = flat[dist(rng)];
    }
    run.a.erase(removed);
    run.b.erase(removed);
  }

  Allocation out;
  for (std::size_t s = 0; s < run.assigned.size(); ++s) {
    auto [c, t] = run.assigned[s];
    if (c < 0) continue;
    out.insert(Contract{*idx.student_ids[s], *idx.college_ids[c],
                        t == 1 ? Terms::StateFunded : Terms::SelfFunded});
  }
  return out;
}

// Removal rule: among pairs whose state-funded contract appears in some
// witness's blocking set, the highest-ranked student in its college wins,
// colleges tie-broken by serialization order. Otherwise a uniformly random
// pair.
inline std::pair<StudentCollegePair, RemovalReason> select_removal(
    const Market& market, const std::vector<BlockWitness>& witnesses,
    const std::vector<StudentCollegePair>& candidates, std::mt19937_64& rng) {
  if (candidates.empty())
    throw PreconditionError("select_removal: empty candidate set");
  std::optional<StudentCollegePair> best;
  int best_rank = kUnranked;
  for (const auto& pair : candidates) {
    Contract state_contract{pair.first, pair.second, Terms::StateFunded};
    bool in_witness = false;
    for (const auto& w : witnesses)
      if (w.contracts_in.count(state_contract)) {
        in_witness = true;
        break;
      }
    if (!in_witness) continue;
    int r = market.college_rank(pair.second, pair.first);
    if (!best || pair.second < best->second ||
        (pair.second == best->second && r < best_rank)) {
      best = pair;
      best_rank = r;
    }
  }
  if (best) return {*best, RemovalReason::WitnessRule};
  std::uniform_int_distribution<std::size_t> dist(0, candidates.size() - 1);
  return {candidates[dist(rng)], RemovalReason::RandomFallback};
}

inline Allocation run_heuristics(const Market& market, std::uint64_t seed,
                                 bool use_flip, bool use_reject,
                                 AlgorithmTrace* trace) {
  // The traced path below rebuilds the modified market per iteration, which
  // is fine for inspection but far too slow for large markets; without a
  // trace the indexed engine produces the identical allocation.
  if (!trace) return fast_run_heuristics(market, seed, use_flip, use_reject);
  PairSet a = use_flip ? initial_flip_set(market)
                       : PairSet{PairSetKind::FlipSet, {}};
  PairSet b = use_reject ? initial_reject_set(market)
                         : PairSet{PairSetKind::RejectSet, {}};
  std::mt19937_64 rng(seed);
  if (trace) {
    trace->seed = seed;
    trace->iterations.clear();
  }

  while (true) {
    // Rejection supersedes flipping when a pair sits in both sets.
    std::set<StudentCollegePair> flips;
    for (const auto& p : a.pairs)
      if (!b.pairs.count(p)) flips.insert(p);
    Market modified = apply_flip(market, flips);
    if (!b.pairs.empty()) modified = apply_reject(modified, b.pairs);

    Allocation y = sp_da(modified);
    StabilityVerdict verdict = is_certainly_stable(market, y);
    AlgorithmTrace::Iteration iter;
    iter.result = y;
    iter.certainly_stable = verdict.stable;
    if (verdict.stable || (a.pairs.empty() && b.pairs.empty())) {
      if (trace) trace->iterations.push_back(std::move(iter));
      return y;
    }

    std::vector<StudentCollegePair> candidates(a.pairs.begin(), a.pairs.end());
    candidates.insert(candidates.end(), b.pairs.begin(), b.pairs.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());
    auto [removed, reason] =
        select_removal(market, verdict.witnesses, candidates, rng);
    a.pairs.erase(removed);
    b.pairs.erase(removed);
    iter.removed = removed;
    iter.reason = reason;
    if (trace) trace->iterations.push_back(std::move(iter));
  }
}

}  // namespace detail

// One removal step on a single pair set; exposed for testing the rule.
inline std::pair<StudentCollegePair, RemovalReason> removal_step(
    const Market& market, const std::vector<BlockWitness>& witnesses,
    PairSet& set, std::mt19937_64& rng) {
  std::vector<StudentCollegePair> candidates(set.pairs.begin(),
                                             set.pairs.end());
  auto choice = detail::select_removal(market, witnesses, candidates, rng);
  set.pairs.erase(choice.first);
  return choice;
}

inline Allocation run_algorithm1(const Market& market, std::uint64_t seed,
                                 AlgorithmTrace* trace = nullptr) {
  return detail::run_heuristics(market, seed, true, false, trace);
}

inline Allocation run_algorithm2(const Market& market, std::uint64_t seed,
                                 AlgorithmTrace* trace = nullptr) {
  return detail::run_heuristics(market, seed, false, true, trace);
}

inline Allocation run_algorithm3(const Market& market, std::uint64_t seed,
                                 AlgorithmTrace* trace = nullptr) {
  return detail::run_heuristics(market, seed, true, true, trace);
}

}  // namespace hadm
