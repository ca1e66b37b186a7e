#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hadm/market.hpp"
#include "hadm/types.hpp"

namespace hadm {

enum class BlockCondition { IR, Singleton, SwapIn, Retiming, FourPrime };

inline const char* to_string(BlockCondition c) {
  switch (c) {
    case BlockCondition::IR: return "IR";
    case BlockCondition::Singleton: return "Singleton";
    case BlockCondition::SwapIn: return "SwapIn";
    case BlockCondition::Retiming: return "Retiming";
    case BlockCondition::FourPrime: return "FourPrime";
  }
  return "?";
}

// A blocking witness keyed to the stability characterization. contracts_in is
// the blocking set Z (empty only for IR violations); contracts_out lists the
// contracts displaced or otherwise offending.
struct BlockWitness {
  BlockCondition condition;
  std::set<Contract> contracts_in;
  std::set<Contract> contracts_out;
  CollegeId college;

  auto operator<=>(const BlockWitness&) const = default;
};

enum class StabilityMode { Full, Certain };

struct StabilityVerdict {
  bool stable = false;
  StabilityMode mode = StabilityMode::Full;
  std::vector<BlockWitness> witnesses;
};

namespace detail {

inline std::map<RolEntry, int> terms_counts(const Allocation& y) {
  std::map<RolEntry, int> counts;
  for (const auto& c : y.contracts()) ++counts[c.entry()];
  return counts;
}

inline std::set<Contract> college_cut(const Allocation& y, const CollegeId& c) {
  std::set<Contract> out;
  for (const auto& contract : y.contracts())
    if (contract.college == c) out.insert(contract);
  return out;
}

}  // namespace detail

// Condition 1: individual rationality (plus feasibility and quotas).
inline std::vector<BlockWitness> check_individual_rationality(
    const Market& market, const Allocation& y) {
  std::vector<BlockWitness> out;
  std::map<StudentId, std::vector<Contract>> per_student;
  for (const auto& c : y.contracts()) {
    if (!market.has_student(c.student))
      throw PreconditionError("allocation names unknown student '" +
                              c.student + "'");
    if (!market.has_college(c.college))
      throw PreconditionError("allocation names unknown college '" +
                              c.college + "'");
    per_student[c.student].push_back(c);
  }
  for (const auto& [sid, contracts] : per_student) {
    if (contracts.size() > 1) {
      BlockWitness w{BlockCondition::IR, {}, {}, contracts.front().college};
      for (const auto& c : contracts) w.contracts_out.insert(c);
      out.push_back(std::move(w));
    }
    for (const auto& c : contracts) {
      if (market.student_rank(sid, std::optional<RolEntry>{c.entry()}) ==
          kUnacceptable)
        out.push_back(BlockWitness{BlockCondition::IR, {}, {c}, c.college});
      if (!market.college_accepts(c.college, sid))
        out.push_back(BlockWitness{BlockCondition::IR, {}, {c}, c.college});
    }
  }
  for (const auto& [entry, count] : detail::terms_counts(y)) {
    if (count > market.profile(entry.college).quota(entry.terms)) {
      BlockWitness w{BlockCondition::IR, {}, {}, entry.college};
      for (const auto& c : y.contracts())
        if (c.entry() == entry) w.contracts_out.insert(c);
      out.push_back(std::move(w));
    }
  }
  return out;
}

// Condition 2: no singleton block. Closed form: (s,c,t) outside Y blocks iff
// s finds it a strict improvement, c finds s acceptable, and either the
// (c,t) quota has slack or s outranks some terms-t incumbent.
inline std::vector<BlockWitness> find_singleton_blocks(const Market& market,
                                                       const Allocation& y) {
  std::vector<BlockWitness> out;
  auto counts = detail::terms_counts(y);
  // Lowest-ranked incumbent per (college, terms).
  std::map<RolEntry, std::pair<int, Contract>> worst;
  for (const auto& c : y.contracts()) {
    int r = market.college_rank(c.college, c.student);
    auto it = worst.find(c.entry());
    if (it == worst.end() || r > it->second.first)
      worst[c.entry()] = {r, c};
  }
  for (const auto& [cid, centry] : market.colleges()) {
    for (const auto& sid : centry.profile.ranking) {
      for (Terms t : {Terms::StateFunded, Terms::SelfFunded}) {
        Contract cand{sid, cid, t};
        // A student already at c under the other terms cannot block through
        // a singleton here: moving her would shrink or rearrange the cohort,
        // which is Condition-4 territory, not a new-student block.
        if (y.contains(cand) || y.contains(Contract{sid, cid, opposite(t)}))
          continue;
        int cand_rank =
            market.student_rank(sid, std::optional<RolEntry>{cand.entry()});
        if (cand_rank == kUnacceptable) continue;
        auto assigned = y.assignment(sid);
        if (cand_rank >= market.student_rank(sid, assigned)) continue;
        int q = centry.profile.quota(t);
        int used = counts.count(cand.entry()) ? counts[cand.entry()] : 0;
        if (used < q) {
          out.push_back(BlockWitness{BlockCondition::Singleton, {cand}, {},
                                     cid});
          continue;
        }
        auto it = worst.find(cand.entry());
        if (it != worst.end() &&
            market.college_rank(cid, sid) < it->second.first)
          out.push_back(BlockWitness{
              BlockCondition::Singleton, {cand}, {it->second.second}, cid});
      }
    }
  }
  return out;
}

// Condition 3, closed form from the characterization proof. A pair
// Z = {(s',c,1-t),(s,c,t)} with incumbent (s',c,t) and outside student s
// blocks iff: s strictly improves and s' strictly prefers the opposite
// terms; the terms-t quota is full with every incumbent outranking s (else a
// singleton block covers (s,c,t) instead); and the opposite terms have slack
// or s outranks the lowest-ranked opposite-terms incumbent. Relies only on
// quotas and rankings.
inline std::vector<BlockWitness> find_swap_in_blocks(const Market& market,
                                                     const Allocation& y) {
  std::vector<BlockWitness> out;
  auto counts = detail::terms_counts(y);
  for (const auto& [cid, centry] : market.colleges()) {
    for (Terms t : {Terms::StateFunded, Terms::SelfFunded}) {
      int used_t = counts.count(RolEntry{cid, t}) ? counts[RolEntry{cid, t}] : 0;
      if (used_t < centry.profile.quota(t)) continue;  // singleton territory
      if (used_t == 0) continue;
      Terms u = opposite(t);
      int used_u = counts.count(RolEntry{cid, u}) ? counts[RolEntry{cid, u}] : 0;
      // Worst terms-t incumbent rank, and the lowest-ranked opposite-terms
      // incumbent (the displaced s* when the opposite quota is full).
      int worst_t = -1;
      std::optional<Contract> displaced;
      int worst_u = -1;
      for (const auto& c : y.contracts()) {
        if (c.college != cid) continue;
        int r = market.college_rank(cid, c.student);
        if (c.terms == t) worst_t = std::max(worst_t, r);
        if (c.terms == u && r > worst_u) {
          worst_u = r;
          displaced = c;
        }
      }
      bool slack_u = used_u < centry.profile.quota(u);
      // Incumbents at terms t who strictly prefer the opposite terms.
      std::vector<Contract> movers;
      for (const auto& c : y.contracts()) {
        if (c.college != cid || c.terms != t) continue;
        if (market.student_rank(c.student,
                                std::optional<RolEntry>{RolEntry{cid, u}}) <
            market.student_rank(c.student, std::optional<RolEntry>{c.entry()}))
          movers.push_back(c);
      }
      if (movers.empty()) continue;
      // Outside students eligible to take the freed terms-t seat.
      std::vector<Contract> eligible;
      for (const auto& sid : centry.profile.ranking) {
        Contract cand{sid, cid, t};
        if (y.contains(cand) || y.contains(Contract{sid, cid, u})) continue;
        int cand_rank =
            market.student_rank(sid, std::optional<RolEntry>{cand.entry()});
        if (cand_rank == kUnacceptable) continue;
        if (cand_rank >= market.student_rank(sid, y.assignment(sid))) continue;
        int s_rank = market.college_rank(cid, sid);
        if (s_rank < worst_t) continue;  // singleton block covers this
        if (!slack_u && (worst_u < 0 || s_rank > worst_u)) continue;
        eligible.push_back(cand);
      }
      for (const auto& c : movers) {
        for (const auto& cand : eligible) {
          BlockWitness w{BlockCondition::SwapIn,
                         {Contract{c.student, cid, u}, cand},
                         {c},
                         cid};
          if (!slack_u && displaced) w.contracts_out.insert(*displaced);
          out.push_back(std::move(w));
        }
      }
    }
  }
  return out;
}

// Condition 3 via the exact choice function; independent route used to
// cross-check the closed form on small markets.
inline std::vector<BlockWitness> find_swap_in_blocks_exact(
    const Market& market, const Allocation& y) {
  std::vector<BlockWitness> out;
  for (const auto& [cid, centry] : market.colleges()) {
    std::set<Contract> cut = detail::college_cut(y, cid);
    for (const auto& c : cut) {
      Terms t = c.terms;
      Terms u = opposite(t);
      Contract swapped{c.student, cid, u};
      if (y.contains(swapped)) continue;
      if (market.student_rank(c.student,
                              std::optional<RolEntry>{swapped.entry()}) >=
          market.student_rank(c.student, std::optional<RolEntry>{c.entry()}))
        continue;
      for (const auto& sid : centry.profile.ranking) {
        Contract cand{sid, cid, t};
        if (y.contains(cand) || y.contains(Contract{sid, cid, u})) continue;
        int cand_rank =
            market.student_rank(sid, std::optional<RolEntry>{cand.entry()});
        if (cand_rank == kUnacceptable) continue;
        if (cand_rank >= market.student_rank(sid, y.assignment(sid))) continue;
        std::set<Contract> pool = cut;
        pool.insert(swapped);
        pool.insert(cand);
        std::set<Contract> chosen = market.college_choice_exact(cid, pool);
        if (chosen.count(swapped) && chosen.count(cand))
          out.push_back(
              BlockWitness{BlockCondition::SwapIn, {swapped, cand}, {c}, cid});
      }
    }
  }
  return out;
}

// Condition 4: blocks that keep students in the same college under flipped
// financial terms. Exact subset search over the candidates who strictly
// prefer their opposite terms, bounded by the choice enumeration limit.
inline std::vector<BlockWitness> find_retiming_blocks(const Market& market,
                                                      const Allocation& y) {
  std::vector<BlockWitness> out;
  for (const auto& [cid, centry] : market.colleges()) {
    std::set<Contract> cut = detail::college_cut(y, cid);
    std::vector<Contract> candidates;  // current contracts whose holder
                                       // strictly prefers the opposite terms
    for (const auto& c : cut) {
      Contract flipped{c.student, cid, opposite(c.terms)};
      if (y.contains(flipped)) continue;
      if (market.student_rank(c.student,
                              std::optional<RolEntry>{flipped.entry()}) <
          market.student_rank(c.student, std::optional<RolEntry>{c.entry()}))
        candidates.push_back(c);
    }
    if (candidates.empty()) continue;
    if (static_cast<int>(cut.size() + candidates.size()) >
        kChoiceEnumerationLimit)
      throw EnumerationLimitError(
          "retiming search: cohort at college '" + cid +
          "' exceeds the exact-choice enumeration limit");
    int n = static_cast<int>(candidates.size());
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      std::set<Contract> z;
      std::set<Contract> displaced;
      std::map<Terms, int> delta;
      for (int i = 0; i < n; ++i) {
        if (!(mask & (1u << i))) continue;
        const Contract& c = candidates[i];
        z.insert(Contract{c.student, cid, opposite(c.terms)});
        displaced.insert(c);
        --delta[c.terms];
        ++delta[opposite(c.terms)];
      }
      bool within = true;
      auto counts = detail::terms_counts(y);
      for (Terms t : {Terms::StateFunded, Terms::SelfFunded}) {
        int used = counts.count(RolEntry{cid, t}) ? counts[RolEntry{cid, t}] : 0;
        if (used + delta[t] > centry.profile.quota(t)) within = false;
      }
      if (!within) continue;
      std::set<Contract> pool = cut;
      pool.insert(z.begin(), z.end());
      std::set<Contract> chosen = market.college_choice_exact(cid, pool);
      bool all = std::all_of(z.begin(), z.end(), [&](const Contract& c) {
        return chosen.count(c) > 0;
      });
      if (all)
        out.push_back(
            BlockWitness{BlockCondition::Retiming, z, displaced, cid});
    }
  }
  return out;
}

// Condition 4': the certain-stability strengthening. For every assigned
// student who strictly prefers her opposite terms at her college, the
// opposite quota must be full and every student holding it must strictly
// prefer it. Uses only quotas and rankings.
inline std::vector<BlockWitness> find_four_prime_violations(
    const Market& market, const Allocation& y) {
  std::vector<BlockWitness> out;
  auto counts = detail::terms_counts(y);
  for (const auto& c : y.contracts()) {
    Terms u = opposite(c.terms);
    RolEntry wanted{c.college, u};
    if (market.student_rank(c.student, std::optional<RolEntry>{wanted}) >=
        market.student_rank(c.student, std::optional<RolEntry>{c.entry()}))
      continue;
    int used = counts.count(wanted) ? counts[wanted] : 0;
    if (used < market.profile(c.college).quota(u)) {
      out.push_back(BlockWitness{BlockCondition::FourPrime,
                                 {Contract{c.student, c.college, u}},
                                 {c},
                                 c.college});
      continue;
    }
    for (const auto& other : y.contracts()) {
      if (other.college != c.college || other.terms != u) continue;
      if (market.student_rank(
              other.student, std::optional<RolEntry>{other.entry()}) >
          market.student_rank(other.student,
                              std::optional<RolEntry>{
                                  RolEntry{other.college, c.terms}})) {
        // A holder of the wanted terms does not strictly prefer them.
        out.push_back(BlockWitness{BlockCondition::FourPrime,
                                   {Contract{c.student, c.college, u}},
                                   {c, other},
                                   c.college});
      }
    }
  }
  return out;
}

inline StabilityVerdict is_stable(const Market& market, const Allocation& y) {
  StabilityVerdict v;
  v.mode = StabilityMode::Full;
  v.witnesses = check_individual_rationality(market, y);
  if (v.witnesses.empty()) {
    auto append = [&](std::vector<BlockWitness> w) {
      v.witnesses.insert(v.witnesses.end(), w.begin(), w.end());
    };
    append(find_singleton_blocks(market, y));
    append(find_swap_in_blocks(market, y));
    append(find_retiming_blocks(market, y));
  }
  v.stable = v.witnesses.empty();
  return v;
}

inline StabilityVerdict is_certainly_stable(const Market& market,
                                            const Allocation& y) {
  StabilityVerdict v;
  v.mode = StabilityMode::Certain;
  v.witnesses = check_individual_rationality(market, y);
  if (v.witnesses.empty()) {
    auto append = [&](std::vector<BlockWitness> w) {
      v.witnesses.insert(v.witnesses.end(), w.begin(), w.end());
    };
    append(find_singleton_blocks(market, y));
    append(find_swap_in_blocks(market, y));
    append(find_four_prime_violations(market, y));
  }
  v.stable = v.witnesses.empty();
  return v;
}

struct MeritViolation {
  StudentId envious;   // higher-ranked
  StudentId envied;    // lower-ranked, holds the preferred terms
  CollegeId college;

  auto operator<=>(const MeritViolation&) const = default;
};

// Empty iff no higher-ranked student strictly prefers a same-college
// lower-ranked student's financial terms.
inline std::vector<MeritViolation> check_merit(const Market& market,
                                               const Allocation& y) {
  if (!y.feasible())
    throw PreconditionError("check_merit: allocation is infeasible");
  std::vector<MeritViolation> out;
  for (const auto& a : y.contracts()) {
    for (const auto& b : y.contracts()) {
      if (a.college != b.college || a.student == b.student) continue;
      if (market.college_rank(a.college, a.student) >=
          market.college_rank(a.college, b.student))
        continue;  // a must be the higher-ranked of the pair
      if (market.student_rank(a.student,
                              std::optional<RolEntry>{
                                  RolEntry{a.college, b.terms}}) <
          market.student_rank(a.student, std::optional<RolEntry>{a.entry()}))
        out.push_back(MeritViolation{a.student, b.student, a.college});
    }
  }
  return out;
}

}  // namespace hadm
