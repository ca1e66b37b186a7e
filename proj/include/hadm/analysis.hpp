#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hadm/market.hpp"
#include "hadm/types.hpp"

namespace hadm {

enum class OutcomeClass { Winner, Loser, Unchanged };

enum class OutcomeCategory {
  NewlyAssigned,
  NewProgram,
  SameProgramBetterTerms,
  NewlyUnassigned,
  SameProgramWorseTerms,
  None,
};

inline std::string to_string(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::Winner: return "winner";
    case OutcomeClass::Loser: return "loser";
    case OutcomeClass::Unchanged: return "unchanged";
  }
  return "?";
}

inline std::string to_string(OutcomeCategory c) {
  switch (c) {
    case OutcomeCategory::NewlyAssigned: return "newly-assigned";
    case OutcomeCategory::NewProgram: return "new-program";
    case OutcomeCategory::SameProgramBetterTerms:
      return "same-program-better-terms";
    case OutcomeCategory::NewlyUnassigned: return "newly-unassigned";
    case OutcomeCategory::SameProgramWorseTerms:
      return "same-program-worse-terms";
    case OutcomeCategory::None: return "none";
  }
  return "?";
}

struct OutcomeRecord {
  StudentId student;
  OutcomeClass outcome_class = OutcomeClass::Unchanged;
  OutcomeCategory category = OutcomeCategory::None;
};

// Compares a student's position in two allocations by her own ranking, the
// outside option sitting below every ROL entry. A program change is
// classified as NewProgram regardless of any simultaneous terms change.
inline std::vector<OutcomeRecord> classify_outcomes(const Market& market,
                                                    const Allocation& baseline,
                                                    const Allocation& alternate) {
  for (const Allocation* y : {&baseline, &alternate})
    for (const auto& c : y->contracts())
      if (!market.has_student(c.student))
        throw PreconditionError("classify_outcomes: unknown student '" +
                                c.student + "'");
  std::vector<OutcomeRecord> out;
  for (const auto& [sid, _] : market.students()) {
    auto before = baseline.assignment(sid);
    auto after = alternate.assignment(sid);
    OutcomeRecord rec{sid, OutcomeClass::Unchanged, OutcomeCategory::None};
    if (before == after) {
      out.push_back(rec);
      continue;
    }
    int rb = market.student_rank(sid, before);
    int ra = market.student_rank(sid, after);
    rec.outcome_class = ra < rb ? OutcomeClass::Winner : OutcomeClass::Loser;
    if (!before)
      rec.category = OutcomeCategory::NewlyAssigned;
    else if (!after)
      rec.category = OutcomeCategory::NewlyUnassigned;
    else if (before->college != after->college)
      rec.category = OutcomeCategory::NewProgram;
    else
      rec.category = rec.outcome_class == OutcomeClass::Winner
                         ? OutcomeCategory::SameProgramBetterTerms
                         : OutcomeCategory::SameProgramWorseTerms;
    out.push_back(rec);
  }
  return out;
}

struct AssignmentCounts {
  int assigned = 0;
  int state_funded = 0;
  int self_funded = 0;
  int self_funded_full_time = 0;  // only colleges carrying the attribute
};

struct ComparisonReport {
  AssignmentCounts baseline;
  AssignmentCounts alternate;
  int winners = 0;
  int losers = 0;
  int unchanged = 0;
  std::map<OutcomeCategory, int> winner_categories;
  std::map<OutcomeCategory, int> loser_categories;
};

inline AssignmentCounts count_assignments(const Market& market,
                                          const Allocation& y) {
  AssignmentCounts out;
  for (const auto& c : y.contracts()) {
    ++out.assigned;
    if (c.terms == Terms::StateFunded) {
      ++out.state_funded;
    } else {
      ++out.self_funded;
      const auto& attrs = market.college_entry(c.college).attrs;
      if (attrs.full_time && *attrs.full_time) ++out.self_funded_full_time;
    }
  }
  return out;
}

inline ComparisonReport summarize_comparison(
    const Market& market, const std::vector<OutcomeRecord>& records,
    const Allocation& baseline, const Allocation& alternate) {
  ComparisonReport report;
  report.baseline = count_assignments(market, baseline);
  report.alternate = count_assignments(market, alternate);
  for (const auto& rec : records) {
    switch (rec.outcome_class) {
      case OutcomeClass::Winner:
        ++report.winners;
        ++report.winner_categories[rec.category];
        break;
      case OutcomeClass::Loser:
        ++report.losers;
        ++report.loser_categories[rec.category];
        break;
      case OutcomeClass::Unchanged:
        ++report.unchanged;
        break;
    }
  }
  return report;
}

struct MobilityCounts {
  int movers = 0;             // assigned outside the home county
  int periphery = 0;          // assigned outside the capital
  int moved_to_capital = 0;   // capital program, non-capital resident
  int excluded = 0;           // assigned but missing the needed attributes
};

struct MobilityReport {
  MobilityCounts baseline;
  MobilityCounts alternate;
  // Winner/loser breakdown for the program-level categories.
  std::map<OutcomeCategory, int> winner_categories;
  std::map<OutcomeCategory, int> loser_categories;
};

inline MobilityCounts count_mobility(const Market& market, const Allocation& y) {
  MobilityCounts out;
  for (const auto& c : y.contracts()) {
    const auto& s = market.student_entry(c.student).attrs;
    const auto& col = market.college_entry(c.college).attrs;
    if (!s.residence_county || !s.lives_in_capital || !col.location_county ||
        !col.in_capital) {
      ++out.excluded;
      continue;
    }
    if (*s.residence_county != *col.location_county) ++out.movers;
    if (!*col.in_capital) ++out.periphery;
    if (*col.in_capital && !*s.lives_in_capital) ++out.moved_to_capital;
  }
  return out;
}

inline MobilityReport mobility_report(const Market& market,
                                      const Allocation& baseline,
                                      const Allocation& alternate,
                                      const std::vector<OutcomeRecord>& records) {
  MobilityReport report;
  report.baseline = count_mobility(market, baseline);
  report.alternate = count_mobility(market, alternate);
  for (const auto& rec : records) {
    if (rec.category != OutcomeCategory::NewlyAssigned &&
        rec.category != OutcomeCategory::NewProgram &&
        rec.category != OutcomeCategory::NewlyUnassigned)
      continue;
    if (rec.outcome_class == OutcomeClass::Winner)
      ++report.winner_categories[rec.category];
    else if (rec.outcome_class == OutcomeClass::Loser)
      ++report.loser_categories[rec.category];
  }
  return report;
}

}  // namespace hadm
