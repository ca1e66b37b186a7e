#pragma once

#include <compare>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hadm {

// Financial terms of a contract. State funding serializes as 1, self funding as 0.
enum class Terms : int { SelfFunded = 0, StateFunded = 1 };

inline Terms opposite(Terms t) {
  return t == Terms::StateFunded ? Terms::SelfFunded : Terms::StateFunded;
}

inline int terms_value(Terms t) { return static_cast<int>(t); }

using StudentId = std::string;
using CollegeId = std::string;

// One entry of a student's rank-order list: a (college, terms) pair.
struct RolEntry {
  CollegeId college;
  Terms terms;

  auto operator<=>(const RolEntry&) const = default;
};

// A (student, college, terms) triple.
struct Contract {
  StudentId student;
  CollegeId college;
  Terms terms;

  auto operator<=>(const Contract&) const = default;

  RolEntry entry() const { return RolEntry{college, terms}; }
};

// Ordered list of acceptable (college, terms) pairs, best first. Anything not
// listed is unacceptable; the outside option sits after the last entry.
struct RankOrderList {
  std::vector<RolEntry> entries;

  auto operator<=>(const RankOrderList&) const = default;
};

// How a college breaks funding ties between equally good cohorts.
enum class FundingPolicy { Merit, InverseMerit };

struct StudentAttributes {
  std::optional<std::string> residence_county;
  std::optional<bool> lives_in_capital;
  std::map<std::string, std::string> tags;

  auto operator<=>(const StudentAttributes&) const = default;
};

struct CollegeAttributes {
  std::optional<std::string> location_county;
  std::optional<bool> in_capital;
  std::optional<bool> full_time;

  auto operator<=>(const CollegeAttributes&) const = default;
};

struct CollegeProfile {
  int quota_state = 0;  // q^1
  int quota_self = 0;   // q^0
  std::vector<StudentId> ranking;  // acceptable students, best first
  FundingPolicy funding_policy = FundingPolicy::Merit;

  int quota(Terms t) const {
    return t == Terms::StateFunded ? quota_state : quota_self;
  }

  auto operator<=>(const CollegeProfile&) const = default;
};

// A feasible-or-not set of contracts. Feasibility (one contract per student)
// is a queryable property, not a constructor invariant, so that checkers can
// report violations instead of refusing the input.
class Allocation {
 public:
  Allocation() = default;
  explicit Allocation(std::set<Contract> contracts)
      : contracts_(std::move(contracts)) {}

  const std::set<Contract>& contracts() const { return contracts_; }
  bool empty() const { return contracts_.empty(); }
  std::size_t size() const { return contracts_.size(); }
  bool contains(const Contract& c) const { return contracts_.count(c) > 0; }

  void insert(const Contract& c) { contracts_.insert(c); }

  bool feasible() const {
    std::set<StudentId> seen;
    for (const auto& c : contracts_)
      if (!seen.insert(c.student).second) return false;
    return true;
  }

  // Assignment of a student; requires feasibility.
  std::optional<Contract> assignment(const StudentId& s) const {
    auto it = contracts_.lower_bound(Contract{s, "", Terms::SelfFunded});
    if (it != contracts_.end() && it->student == s) return *it;
    return std::nullopt;
  }

  std::set<StudentId> assigned_students() const {
    std::set<StudentId> out;
    for (const auto& c : contracts_) out.insert(c.student);
    return out;
  }

  auto operator<=>(const Allocation&) const = default;

 private:
  std::set<Contract> contracts_;
};

struct ValidationError {
  std::string code;     // machine-readable, e.g. "DanglingCollegeRef"
  std::string subject;  // offending id
  std::string detail;
};

class HadmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public HadmError {
 public:
  using HadmError::HadmError;
};

class EnumerationLimitError : public HadmError {
 public:
  using HadmError::HadmError;
};

class BoundExceededError : public HadmError {
 public:
  using HadmError::HadmError;
};

// Rank sentinel for contracts absent from a student's ROL.
inline constexpr int kUnacceptable = std::numeric_limits<int>::max();

// Rank sentinel for students absent from a college's ranking.
inline constexpr int kUnranked = std::numeric_limits<int>::max();

}  // namespace hadm
