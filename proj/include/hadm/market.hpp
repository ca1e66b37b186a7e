#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hadm/types.hpp"

namespace hadm {

struct StudentEntry {
  RankOrderList rol;
  StudentAttributes attrs;
};

struct CollegeEntry {
  CollegeProfile profile;
  CollegeAttributes attrs;
};

// Raw, not-yet-validated market description.
struct MarketData {
  std::map<StudentId, StudentEntry> students;
  std::map<CollegeId, CollegeEntry> colleges;
};

inline constexpr int kChoiceEnumerationLimit = 24;

// Validated market. Immutable after construction; all operations are pure.
class Market {
 public:
  struct ValidationResult;

  static ValidationResult validate(MarketData data);

  const std::map<StudentId, StudentEntry>& students() const {
    return data_.students;
  }
  const std::map<CollegeId, CollegeEntry>& colleges() const {
    return data_.colleges;
  }
  const MarketData& data() const { return data_; }

  bool has_student(const StudentId& s) const {
    return data_.students.count(s) > 0;
  }
  bool has_college(const CollegeId& c) const {
    return data_.colleges.count(c) > 0;
  }

  const RankOrderList& rol(const StudentId& s) const {
    return student_entry(s).rol;
  }
  const CollegeProfile& profile(const CollegeId& c) const {
    return college_entry(c).profile;
  }

  const StudentEntry& student_entry(const StudentId& s) const {
    auto it = data_.students.find(s);
    if (it == data_.students.end())
      throw PreconditionError("unknown student '" + s + "'");
    return it->second;
  }
  const CollegeEntry& college_entry(const CollegeId& c) const {
    auto it = data_.colleges.find(c);
    if (it == data_.colleges.end())
      throw PreconditionError("unknown college '" + c + "'");
    return it->second;
  }

  // Rank of a contract in a student's ROL: 0 is best, |ROL| is the outside
  // option (nullopt), kUnacceptable for anything not listed.
  int student_rank(const StudentId& s,
                   const std::optional<RolEntry>& entry) const {
    auto it = student_rank_.find(s);
    if (it == student_rank_.end())
      throw PreconditionError("unknown student '" + s + "'");
    if (!entry) return static_cast<int>(rol(s).entries.size());
    auto jt = it->second.find(*entry);
    return jt == it->second.end() ? kUnacceptable : jt->second;
  }

  int student_rank(const StudentId& s,
                   const std::optional<Contract>& contract) const {
    if (!contract) return student_rank(s, std::optional<RolEntry>{});
    return student_rank(s, std::optional<RolEntry>{contract->entry()});
  }

  bool student_prefers(const StudentId& s, const std::optional<RolEntry>& a,
                       const std::optional<RolEntry>& b) const {
    return student_rank(s, a) < student_rank(s, b);
  }

  // Rank of a student in a college's ranking; kUnranked if unacceptable.
  int college_rank(const CollegeId& c, const StudentId& s) const {
    auto it = college_rank_.find(c);
    if (it == college_rank_.end())
      throw PreconditionError("unknown college '" + c + "'");
    auto jt = it->second.find(s);
    return jt == it->second.end() ? kUnranked : jt->second;
  }

  bool college_accepts(const CollegeId& c, const StudentId& s) const {
    return college_rank(c, s) != kUnranked;
  }

  // Choice for offer sets in which no student appears twice: per terms
  // independently, keep the top q^t acceptable students by the ranking.
  std::set<Contract> college_choice_streamlined(
      const CollegeId& c, const std::set<Contract>& offers) const {
    std::set<StudentId> seen;
    for (const auto& o : offers) {
      if (o.college != c)
        throw PreconditionError("offer names a different college");
      if (!seen.insert(o.student).second)
        throw PreconditionError("student '" + o.student +
                                "' appears twice in streamlined choice");
    }
    std::set<Contract> chosen;
    for (Terms t : {Terms::StateFunded, Terms::SelfFunded}) {
      std::vector<std::pair<int, Contract>> ranked;
      for (const auto& o : offers) {
        if (o.terms != t) continue;
        int r = college_rank(c, o.student);
        if (r != kUnranked) ranked.emplace_back(r, o);
      }
      std::sort(ranked.begin(), ranked.end());
      int q = profile(c).quota(t);
      for (int i = 0; i < static_cast<int>(ranked.size()) && i < q; ++i)
        chosen.insert(ranked[i].second);
    }
    return chosen;
  }

  // Exact choice: exhaustively enumerates feasible duplicate-free subsets
  // within quotas and returns the maximum under the cohort-lexicographic
  // order, with the funding policy breaking ties between equal cohorts.
  std::set<Contract> college_choice_exact(
      const CollegeId& c, const std::set<Contract>& offers,
      int limit = kChoiceEnumerationLimit) const {
    if (static_cast<int>(offers.size()) > limit)
      throw EnumerationLimitError("college_choice_exact: " +
                                  std::to_string(offers.size()) +
                                  " contracts exceed limit " +
                                  std::to_string(limit));
    const CollegeProfile& prof = profile(c);
    // Students present, best-ranked first; unacceptable students are never
    // chosen and are dropped up front.
    struct Cand {
      int rank;
      StudentId student;
      bool has_state = false;
      bool has_self = false;
    };
    std::map<StudentId, Cand> by_student;
    for (const auto& o : offers) {
      if (o.college != c)
        throw PreconditionError("offer names a different college");
      int r = college_rank(c, o.student);
      if (r == kUnranked) continue;
      auto& cand = by_student[o.student];
      cand.rank = r;
      cand.student = o.student;
      (o.terms == Terms::StateFunded ? cand.has_state : cand.has_self) = true;
    }
    std::vector<Cand> cands;
    for (auto& [_, cand] : by_student) cands.push_back(cand);
    std::sort(cands.begin(), cands.end(),
              [](const Cand& a, const Cand& b) { return a.rank < b.rank; });

    // Selection per candidate: 0 = absent, 1 = state-funded, 2 = self-funded.
    std::vector<int> sel(cands.size(), 0), best;
    bool have_best = false;
    auto better = [&](const std::vector<int>& a, const std::vector<int>& b) {
      // Positionwise cohort comparison, best-ranked first, padded with the
      // empty slot (an acceptable student always beats an empty slot).
      std::vector<int> ra, rb;
      for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] != 0) ra.push_back(cands[k].rank);
      for (std::size_t k = 0; k < b.size(); ++k)
        if (b[k] != 0) rb.push_back(cands[k].rank);
      for (std::size_t pos = 0;; ++pos) {
        bool ae = pos == ra.size(), be = pos == rb.size();
        if (ae && be) break;
        if (be) return true;
        if (ae) return false;
        if (ra[pos] != rb[pos]) return ra[pos] < rb[pos];
      }
      // Equal cohorts: funding tie-break, scanning best-ranked first.
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] == 0 || a[k] == b[k]) continue;
        bool a_state = a[k] == 1;
        return prof.funding_policy == FundingPolicy::Merit ? a_state : !a_state;
      }
      return false;
    };
    auto recurse = [&](auto&& self, std::size_t idx, int used_state,
                       int used_self) -> void {
      if (idx == cands.size()) {
        if (!have_best || better(sel, best)) {
          best = sel;
          have_best = true;
        }
        return;
      }
      const Cand& cand = cands[idx];
      sel[idx] = 0;
      self(self, idx + 1, used_state, used_self);
      if (cand.has_state && used_state < prof.quota_state) {
        sel[idx] = 1;
        self(self, idx + 1, used_state + 1, used_self);
      }
      if (cand.has_self && used_self < prof.quota_self) {
        sel[idx] = 2;
        self(self, idx + 1, used_state, used_self + 1);
      }
      sel[idx] = 0;
    };
    recurse(recurse, 0, 0, 0);

    std::set<Contract> chosen;
    if (!have_best) return chosen;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      if (best[k] == 0) continue;
      chosen.insert(Contract{cands[k].student, c,
                             best[k] == 1 ? Terms::StateFunded
                                          : Terms::SelfFunded});
    }
    return chosen;
  }

 private:
  explicit Market(MarketData data) : data_(std::move(data)) {
    for (const auto& [sid, entry] : data_.students) {
      auto& m = student_rank_[sid];
      int r = 0;
      for (const auto& e : entry.rol.entries) m[e] = r++;
    }
    for (const auto& [cid, entry] : data_.colleges) {
      auto& m = college_rank_[cid];
      int r = 0;
      for (const auto& s : entry.profile.ranking) m[s] = r++;
    }
  }

  MarketData data_;
  std::map<StudentId, std::map<RolEntry, int>> student_rank_;
  std::map<CollegeId, std::map<StudentId, int>> college_rank_;
};

struct Market::ValidationResult {
  std::optional<Market> market;
  std::vector<ValidationError> errors;
  bool ok() const { return market.has_value(); }
};

inline Market::ValidationResult Market::validate(MarketData data) {
  std::vector<ValidationError> errors;
  for (const auto& [sid, entry] : data.students) {
    if (sid.empty())
      errors.push_back({"EmptyId", sid, "student id must be nonempty"});
    std::set<RolEntry> seen;
    for (const auto& e : entry.rol.entries) {
      if (!data.colleges.count(e.college))
        errors.push_back({"DanglingCollegeRef", sid,
                          "ROL names unknown college '" + e.college + "'"});
      if (!seen.insert(e).second)
        errors.push_back({"DuplicateRolEntry", sid,
                          "duplicate ROL entry " + e.college + ":" +
                              std::to_string(terms_value(e.terms))});
    }
    if (entry.attrs.lives_in_capital && entry.attrs.residence_county &&
        !*entry.attrs.lives_in_capital &&
        entry.attrs.residence_county->empty())
      errors.push_back({"InconsistentAttributes", sid, "empty county"});
  }
  for (const auto& [cid, entry] : data.colleges) {
    if (cid.empty())
      errors.push_back({"EmptyId", cid, "college id must be nonempty"});
    if (entry.profile.quota_state < 0 || entry.profile.quota_self < 0)
      errors.push_back({"NegativeQuota", cid, "quotas must be nonnegative"});
    std::set<StudentId> seen;
    for (const auto& s : entry.profile.ranking) {
      if (!data.students.count(s))
        errors.push_back({"DanglingStudentRef", cid,
                          "ranking names unknown student '" + s + "'"});
      if (!seen.insert(s).second)
        errors.push_back(
            {"DuplicateRankingEntry", cid, "student '" + s + "' ranked twice"});
    }
  }
  if (!errors.empty()) return {std::nullopt, std::move(errors)};
  return {Market(std::move(data)), {}};
}

// ---------------------------------------------------------------------------
// Related two-sided market (without contracts): one auxiliary college per
// (college, terms) pair, zero-quota auxiliaries kept with capacity 0.

struct AuxCollege {
  CollegeId college;
  Terms terms;
  int quota = 0;

  RolEntry entry() const { return RolEntry{college, terms}; }
  auto operator<=>(const AuxCollege&) const = default;
};

struct RelatedMarket {
  std::vector<AuxCollege> aux_colleges;  // by college id, state before self
  const Market* market = nullptr;        // rankings and student preferences
};

inline RelatedMarket related_market(const Market& m) {
  RelatedMarket out;
  out.market = &m;
  for (const auto& [cid, entry] : m.colleges()) {
    out.aux_colleges.push_back(
        AuxCollege{cid, Terms::StateFunded, entry.profile.quota_state});
    out.aux_colleges.push_back(
        AuxCollege{cid, Terms::SelfFunded, entry.profile.quota_self});
  }
  return out;
}

// Matching in the related market: student -> auxiliary college.
using RelatedMatching = std::map<StudentId, RolEntry>;

inline Allocation corresponding_allocation(const RelatedMatching& matching) {
  Allocation out;
  for (const auto& [s, e] : matching)
    out.insert(Contract{s, e.college, e.terms});
  return out;
}

inline RelatedMatching corresponding_matching(const Allocation& alloc) {
  if (!alloc.feasible())
    throw PreconditionError("corresponding_matching: allocation is infeasible");
  RelatedMatching out;
  for (const auto& c : alloc.contracts()) out[c.student] = c.entry();
  return out;
}

}  // namespace hadm
