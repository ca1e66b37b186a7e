#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "hadm/analysis.hpp"
#include "hadm/da.hpp"

using namespace hadm;

namespace {

OutcomeRecord find(const std::vector<OutcomeRecord>& records,
                   const StudentId& s) {
  for (const auto& r : records)
    if (r.student == s) return r;
  FAIL("no record for " + s);
  return {};
}

}  // namespace

TEST_CASE("classification on the two-student example") {
  Market m = fixtures::ex1();
  Allocation baseline = fixtures::alloc({{"r", "c", Terms::StateFunded}});
  Allocation alternate = fixtures::alloc({{"r", "c", Terms::SelfFunded},
                                          {"p", "c", Terms::StateFunded}});
  auto records = classify_outcomes(m, baseline, alternate);
  auto p = find(records, "p");
  CHECK(p.outcome_class == OutcomeClass::Winner);
  CHECK(p.category == OutcomeCategory::NewlyAssigned);
  auto r = find(records, "r");
  CHECK(r.outcome_class == OutcomeClass::Loser);
  CHECK(r.category == OutcomeCategory::SameProgramWorseTerms);
}

TEST_CASE("identical allocations classify as all unchanged") {
  Market m = fixtures::ex2();
  Allocation y = sp_da(m);
  for (const auto& rec : classify_outcomes(m, y, y)) {
    CHECK(rec.outcome_class == OutcomeClass::Unchanged);
    CHECK(rec.category == OutcomeCategory::None);
  }
}

TEST_CASE("classification on the three-student example") {
  Market m = fixtures::ex2();
  Allocation baseline = sp_da(m);
  Allocation alternate = fixtures::alloc({{"r", "h", Terms::SelfFunded},
                                          {"p", "h", Terms::StateFunded}});
  auto records = classify_outcomes(m, baseline, alternate);
  auto g = find(records, "g");
  CHECK(g.outcome_class == OutcomeClass::Loser);
  CHECK(g.category == OutcomeCategory::NewlyUnassigned);
  auto p = find(records, "p");
  CHECK(p.outcome_class == OutcomeClass::Winner);
  CHECK(p.category == OutcomeCategory::NewProgram);
  auto r = find(records, "r");
  CHECK(r.outcome_class == OutcomeClass::Loser);
  CHECK(r.category == OutcomeCategory::SameProgramWorseTerms);
}

TEST_CASE("classification rejects unknown students") {
  Market m = fixtures::ex1();
  CHECK_THROWS_AS(
      classify_outcomes(m, fixtures::alloc({{"zz", "c", Terms::StateFunded}}),
                        Allocation{}),
      PreconditionError);
}

TEST_CASE("summary counts match the classification") {
  Market m = fixtures::ex1();
  Allocation baseline = fixtures::alloc({{"r", "c", Terms::StateFunded}});
  Allocation alternate = fixtures::alloc({{"r", "c", Terms::SelfFunded},
                                          {"p", "c", Terms::StateFunded}});
  auto records = classify_outcomes(m, baseline, alternate);
  auto report = summarize_comparison(m, records, baseline, alternate);
  CHECK(report.baseline.assigned == 1);
  CHECK(report.alternate.assigned == 2);
  CHECK(report.winners == 1);
  CHECK(report.losers == 1);
  CHECK(report.winner_categories[OutcomeCategory::NewlyAssigned] == 1);
  CHECK(report.loser_categories[OutcomeCategory::SameProgramWorseTerms] == 1);

  auto same = summarize_comparison(m, classify_outcomes(m, baseline, baseline),
                                   baseline, baseline);
  CHECK(same.winners == 0);
  CHECK(same.losers == 0);
}

TEST_CASE("summary on the three-student example") {
  Market m = fixtures::ex2();
  Allocation baseline = sp_da(m);
  Allocation alternate = fixtures::alloc({{"r", "h", Terms::SelfFunded},
                                          {"p", "h", Terms::StateFunded}});
  auto records = classify_outcomes(m, baseline, alternate);
  auto report = summarize_comparison(m, records, baseline, alternate);
  CHECK(report.baseline.assigned == 3);
  CHECK(report.alternate.assigned == 2);
  CHECK(report.winners == 1);
  CHECK(report.losers == 2);
}

TEST_CASE("self-funded full-time row needs the attribute") {
  MarketData data = fixtures::ex1().data();
  Allocation y = fixtures::alloc({{"r", "c", Terms::SelfFunded},
                                  {"p", "c", Terms::StateFunded}});
  Market without = *Market::validate(data).market;
  CHECK(count_assignments(without, y).self_funded_full_time == 0);
  data.colleges["c"].attrs.full_time = true;
  Market with = *Market::validate(std::move(data)).market;
  auto counts = count_assignments(with, y);
  CHECK(counts.self_funded == 1);
  CHECK(counts.self_funded_full_time == 1);
}

TEST_CASE("winner and loser classes swap under reversal") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Market m = generate_market(fixtures::small_config(seed));
    Allocation a = fixtures::random_allocation(m, rng);
    Allocation b = fixtures::random_allocation(m, rng);
    auto fwd = classify_outcomes(m, a, b);
    auto rev = classify_outcomes(m, b, a);
    REQUIRE(fwd.size() == rev.size());
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      REQUIRE(fwd[i].student == rev[i].student);
      if (fwd[i].outcome_class == OutcomeClass::Winner)
        CHECK(rev[i].outcome_class == OutcomeClass::Loser);
      if (fwd[i].outcome_class == OutcomeClass::Unchanged)
        CHECK(rev[i].outcome_class == OutcomeClass::Unchanged);
      if (fwd[i].category == OutcomeCategory::NewlyAssigned)
        CHECK(rev[i].category == OutcomeCategory::NewlyUnassigned);
      if (fwd[i].category == OutcomeCategory::SameProgramBetterTerms)
        CHECK(rev[i].category == OutcomeCategory::SameProgramWorseTerms);
    }
  }
}

TEST_CASE("assigned-count bookkeeping balances winners against losers") {
  std::mt19937_64 rng(7);
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Market m = generate_market(fixtures::small_config(seed));
    Allocation a = fixtures::random_allocation(m, rng);
    Allocation b = fixtures::random_allocation(m, rng);
    auto records = classify_outcomes(m, a, b);
    int newly_assigned = 0, newly_unassigned = 0;
    for (const auto& rec : records) {
      newly_assigned += rec.category == OutcomeCategory::NewlyAssigned;
      newly_unassigned += rec.category == OutcomeCategory::NewlyUnassigned;
    }
    CHECK(newly_assigned - newly_unassigned ==
          static_cast<int>(b.size()) - static_cast<int>(a.size()));
  }
}

TEST_CASE("mobility metrics count movers, periphery, and capital entrants") {
  MarketData data = fixtures::ex1().data();
  data.students["r"].attrs.residence_county = "countyA";
  data.students["r"].attrs.lives_in_capital = false;
  data.students["p"].attrs.residence_county = "countyA";
  data.students["p"].attrs.lives_in_capital = false;
  data.colleges["c"].attrs.location_county = "capital";
  data.colleges["c"].attrs.in_capital = true;
  Market m = *Market::validate(std::move(data)).market;
  Allocation baseline = fixtures::alloc({{"r", "c", Terms::StateFunded}});
  Allocation alternate = fixtures::alloc({{"r", "c", Terms::SelfFunded},
                                          {"p", "c", Terms::StateFunded}});
  auto records = classify_outcomes(m, baseline, alternate);
  auto report = mobility_report(m, baseline, alternate, records);
  CHECK(report.baseline.moved_to_capital == 1);
  CHECK(report.alternate.moved_to_capital == 2);
  CHECK(report.baseline.periphery == 0);
  CHECK(report.baseline.movers == 1);
  CHECK(report.alternate.movers == 2);
  CHECK(report.winner_categories[OutcomeCategory::NewlyAssigned] == 1);
}

TEST_CASE("missing attributes are exclusions, not errors") {
  Market m = fixtures::ex1();  // no attributes at all
  Allocation y = fixtures::alloc({{"r", "c", Terms::StateFunded}});
  auto counts = count_mobility(m, y);
  CHECK(counts.excluded == 1);
  CHECK(counts.movers == 0);
}
