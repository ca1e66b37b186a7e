#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "hadm/generator.hpp"
#include "hadm/io.hpp"

using namespace hadm;

TEST_CASE("generation is deterministic in the seed") {
  GeneratorConfig cfg;
  cfg.n_students = 50;
  cfg.n_colleges = 6;
  cfg.n_counties = 5;
  cfg.seed = 1;
  CHECK(serialize_market(generate_market(cfg)) ==
        serialize_market(generate_market(cfg)));
  cfg.seed = 2;
  CHECK(serialize_market(generate_market(cfg)) !=
        serialize_market(generate_market({})));
}

TEST_CASE("degenerate configs still validate") {
  GeneratorConfig cfg;
  cfg.n_students = 0;
  Market m = generate_market(cfg);
  CHECK(m.students().empty());
  CHECK(m.colleges().size() == 10);
}

TEST_CASE("bad configs are rejected up front") {
  GeneratorConfig cfg;
  cfg.share_state_only = 0.8;
  cfg.share_self_only = 0.4;
  CHECK_THROWS_AS(generate_market(cfg), PreconditionError);

  cfg = {};
  cfg.rol_max = 50;
  cfg.n_colleges = 3;
  CHECK_THROWS_AS(generate_market(cfg), PreconditionError);

  cfg = {};
  cfg.quota_state_min = 3;
  cfg.quota_state_max = 1;
  CHECK_THROWS_AS(generate_market(cfg), PreconditionError);
}

TEST_CASE("a pure state-only share forces state-only lists") {
  GeneratorConfig cfg;
  cfg.n_students = 80;
  cfg.share_state_only = 1.0;
  cfg.share_self_only = 0.0;
  cfg.share_consecutive_pair = 0.0;
  cfg.seed = 3;
  Market m = generate_market(cfg);
  for (const auto& [sid, entry] : m.students())
    for (const auto& e : entry.rol.entries)
      CHECK(e.terms == Terms::StateFunded);
}

TEST_CASE("consecutive-pair students place state immediately before self") {
  GeneratorConfig cfg;
  cfg.n_students = 80;
  cfg.share_state_only = 0.0;
  cfg.share_self_only = 0.0;
  cfg.share_consecutive_pair = 1.0;
  cfg.rol_min = 2;
  cfg.seed = 4;
  Market m = generate_market(cfg);
  for (const auto& [sid, entry] : m.students()) {
    const auto& rol = entry.rol.entries;
    REQUIRE(rol.size() >= 2);
    CHECK(rol[0].terms == Terms::StateFunded);
    CHECK(rol[1].terms == Terms::SelfFunded);
    CHECK(rol[0].college == rol[1].college);
  }
}

TEST_CASE("empirical shares converge at scale") {
  GeneratorConfig cfg;
  cfg.n_students = 10000;
  cfg.n_colleges = 30;
  cfg.rol_min = 2;
  cfg.seed = 5;
  Market m = generate_market(cfg);
  int state_only = 0, self_only = 0, pairs = 0;
  for (const auto& [sid, entry] : m.students()) {
    const auto& rol = entry.rol.entries;
    bool all_state = true, all_self = true;
    for (const auto& e : rol) {
      all_state &= e.terms == Terms::StateFunded;
      all_self &= e.terms == Terms::SelfFunded;
    }
    bool pair = rol.size() >= 2 && rol[0].college == rol[1].college &&
                rol[0].terms == Terms::StateFunded &&
                rol[1].terms == Terms::SelfFunded;
    if (all_state)
      ++state_only;
    else if (all_self)
      ++self_only;
    else if (pair)
      ++pairs;
  }
  auto within = [&](int count, double share) {
    double n = cfg.n_students;
    double se = std::sqrt(share * (1 - share) / n);
    return std::abs(count / n - share) <= 3 * se;
  };
  CHECK(within(state_only, cfg.share_state_only));
  CHECK(within(self_only, cfg.share_self_only));
  CHECK(within(pairs, cfg.share_consecutive_pair));
}

TEST_CASE("break_ties orders by score, lottery only on ties") {
  std::map<StudentId, double> scores{{"a", 0.2}, {"b", 0.9}, {"c", 0.2}};
  std::vector<StudentId> lottery{"c", "b", "a"};
  CHECK(break_ties(scores, lottery) ==
        std::vector<StudentId>{"b", "c", "a"});
  lottery = {"a", "b", "c"};
  CHECK(break_ties(scores, lottery) ==
        std::vector<StudentId>{"b", "a", "c"});
}

TEST_CASE("one lottery serves every college") {
  GeneratorConfig cfg;
  cfg.n_students = 40;
  cfg.n_colleges = 8;
  cfg.score_levels = 1;  // every score collapses to the same level
  cfg.common_weight = 0.0;
  cfg.seed = 6;
  Market m = generate_market(cfg);
  const std::vector<StudentId>* first = nullptr;
  for (const auto& [cid, entry] : m.colleges()) {
    if (!first)
      first = &entry.profile.ranking;
    else
      CHECK(entry.profile.ranking == *first);  // all-tied scores: pure lottery
  }
}

TEST_CASE("tied pairs keep their relative order across colleges") {
  GeneratorConfig cfg;
  cfg.n_students = 30;
  cfg.n_colleges = 6;
  cfg.score_levels = 2;
  cfg.common_weight = 0.0;
  cfg.seed = 7;
  ScoreTable scores;
  Market m = generate_market(cfg, &scores);
  std::vector<StudentId> ids;
  for (const auto& [sid, _] : m.students()) ids.push_back(sid);
  for (const auto& [cid, entry] : m.colleges()) {
    std::map<StudentId, int> pos;
    for (std::size_t i = 0; i < entry.profile.ranking.size(); ++i)
      pos[entry.profile.ranking[i]] = static_cast<int>(i);
    for (const auto& a : ids)
      for (const auto& b : ids) {
        if (a >= b) continue;
        if (scores.at({a, cid}) != scores.at({b, cid})) continue;
        // Same tie at every other college must resolve the same way.
        for (const auto& [cid2, entry2] : m.colleges()) {
          if (scores.at({a, cid2}) != scores.at({b, cid2})) continue;
          std::map<StudentId, int> pos2;
          for (std::size_t i = 0; i < entry2.profile.ranking.size(); ++i)
            pos2[entry2.profile.ranking[i]] = static_cast<int>(i);
          CHECK((pos[a] < pos[b]) == (pos2[a] < pos2[b]));
        }
      }
  }
}

TEST_CASE("generated markets carry attributes when toggled") {
  GeneratorConfig cfg;
  cfg.n_students = 20;
  cfg.n_colleges = 4;
  cfg.n_counties = 3;
  cfg.seed = 8;
  Market m = generate_market(cfg);
  for (const auto& [sid, entry] : m.students()) {
    REQUIRE(entry.attrs.residence_county.has_value());
    REQUIRE(entry.attrs.lives_in_capital.has_value());
    CHECK((*entry.attrs.residence_county == "capital") ==
          *entry.attrs.lives_in_capital);
  }
  for (const auto& [cid, entry] : m.colleges()) {
    CHECK(entry.attrs.location_county.has_value());
    CHECK(entry.attrs.in_capital.has_value());
    CHECK(entry.attrs.full_time.has_value());
  }
}
