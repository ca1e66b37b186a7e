#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hadm/market.hpp"
#include "hadm/types.hpp"

namespace hadm {

struct GeneratorConfig {
  int n_students = 100;
  int n_colleges = 10;
  int quota_state_min = 1;
  int quota_state_max = 3;
  int quota_self_min = 0;
  int quota_self_max = 3;
  // ROL-shape shares; the remainder draws mixed-terms lists.
  double share_state_only = 0.514;
  double share_self_only = 0.185;
  double share_consecutive_pair = 0.155;
  int rol_min = 1;
  int rol_max = 4;
  double merit_share = 1.0;  // remainder uses the inverse-merit policy
  // Attribute synthesis; disabled when n_counties == 0.
  int n_counties = 0;
  double capital_share = 0.3;
  double full_time_share = 0.8;
  // Priority scores: common component weight and quantization levels; few
  // levels mean many ties for the single lottery to break.
  double common_weight = 0.5;
  int score_levels = 10;
  std::uint64_t seed = 0;
};

using ScoreTable = std::map<std::pair<StudentId, CollegeId>, double>;

inline void validate_config(const GeneratorConfig& cfg) {
  auto fail = [](const std::string& what) {
    throw PreconditionError("generate_market: " + what);
  };
  if (cfg.n_students < 0 || cfg.n_colleges < 0) fail("negative sizes");
  if (cfg.quota_state_min < 0 || cfg.quota_state_max < cfg.quota_state_min)
    fail("bad state quota range");
  if (cfg.quota_self_min < 0 || cfg.quota_self_max < cfg.quota_self_min)
    fail("bad self quota range");
  if (cfg.rol_min < 1 || cfg.rol_max < cfg.rol_min) fail("bad rol range");
  if (cfg.rol_max > 2 * cfg.n_colleges && cfg.n_students > 0)
    fail("rol range exceeds contract space");
  double shares = cfg.share_state_only + cfg.share_self_only +
                  cfg.share_consecutive_pair;
  if (cfg.share_state_only < 0 || cfg.share_self_only < 0 ||
      cfg.share_consecutive_pair < 0 || shares > 1.0 + 1e-12)
    fail("shares must be nonnegative and sum to at most 1");
  if (cfg.merit_share < 0 || cfg.merit_share > 1) fail("bad merit share");
  if (cfg.score_levels < 1) fail("score_levels must be positive");
  if (cfg.n_counties < 0) fail("negative county count");
}

// The single lottery: one random permutation of all students, shared by
// every college's tie-break.
inline std::vector<StudentId> draw_lottery(const std::vector<StudentId>& ids,
                                           std::mt19937_64& rng) {
  std::vector<StudentId> lottery = ids;
  std::shuffle(lottery.begin(), lottery.end(), rng);
  return lottery;
}

// Strict ranking for one college: descending score, equal scores ordered by
// the market-wide lottery.
inline std::vector<StudentId> break_ties(
    const std::map<StudentId, double>& scores,
    const std::vector<StudentId>& lottery) {
  std::map<StudentId, int> position;
  for (std::size_t i = 0; i < lottery.size(); ++i)
    position[lottery[i]] = static_cast<int>(i);
  struct Row {
    double score;
    int position;
    const StudentId* id;
  };
  std::vector<Row> rows;
  rows.reserve(scores.size());
  for (const auto& [sid, score] : scores)
    rows.push_back(Row{score, position.at(sid), &sid});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.position < b.position;
  });
  std::vector<StudentId> out;
  out.reserve(rows.size());
  for (const Row& r : rows) out.push_back(*r.id);
  return out;
}

inline Market generate_market(const GeneratorConfig& cfg,
                              ScoreTable* scores_out = nullptr) {
  validate_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto pad = [](const char* prefix, int i, int width) {
    std::string n = std::to_string(i);
    return prefix + std::string(width - std::min<int>(width, n.size()), '0') + n;
  };

  std::vector<StudentId> student_ids;
  for (int i = 0; i < cfg.n_students; ++i)
    student_ids.push_back(pad("s", i, 5));
  std::vector<CollegeId> college_ids;
  for (int i = 0; i < cfg.n_colleges; ++i)
    college_ids.push_back(pad("c", i, 3));

  MarketData data;

  std::map<StudentId, double> common_score;
  for (const auto& sid : student_ids) common_score[sid] = uniform(0.0, 1.0);
  std::vector<StudentId> lottery = draw_lottery(student_ids, rng);

  for (const auto& cid : college_ids) {
    CollegeEntry entry;
    entry.profile.quota_state = uniform_int(cfg.quota_state_min,
                                            cfg.quota_state_max);
    entry.profile.quota_self = uniform_int(cfg.quota_self_min,
                                           cfg.quota_self_max);
    entry.profile.funding_policy = uniform(0.0, 1.0) < cfg.merit_share
                                       ? FundingPolicy::Merit
                                       : FundingPolicy::InverseMerit;
    std::map<StudentId, double> scores;
    for (const auto& sid : student_ids) {
      double raw = cfg.common_weight * common_score[sid] +
                   (1.0 - cfg.common_weight) * uniform(0.0, 1.0);
      double quantized =
          std::floor(raw * cfg.score_levels) / cfg.score_levels;
      scores[sid] = quantized;
      if (scores_out) (*scores_out)[{sid, cid}] = quantized;
    }
    entry.profile.ranking = break_ties(scores, lottery);
    if (cfg.n_counties > 0) {
      bool capital = uniform(0.0, 1.0) < cfg.capital_share;
      entry.attrs.in_capital = capital;
      entry.attrs.location_county =
          capital ? std::string("capital")
                  : "county" + std::to_string(uniform_int(1, cfg.n_counties));
      entry.attrs.full_time = uniform(0.0, 1.0) < cfg.full_time_share;
    }
    data.colleges[cid] = std::move(entry);
  }

  for (const auto& sid : student_ids) {
    StudentEntry entry;
    double shape = uniform(0.0, 1.0);
    int length = uniform_int(cfg.rol_min, std::min(cfg.rol_max,
                                                   2 * cfg.n_colleges));
    std::vector<CollegeId> picks = college_ids;
    std::shuffle(picks.begin(), picks.end(), rng);
    auto& rol = entry.rol.entries;
    if (shape < cfg.share_state_only) {
      for (int i = 0; i < std::min<int>(length, picks.size()); ++i)
        rol.push_back(RolEntry{picks[i], Terms::StateFunded});
    } else if (shape < cfg.share_state_only + cfg.share_self_only) {
      for (int i = 0; i < std::min<int>(length, picks.size()); ++i)
        rol.push_back(RolEntry{picks[i], Terms::SelfFunded});
    } else if (shape < cfg.share_state_only + cfg.share_self_only +
                           cfg.share_consecutive_pair) {
      // The same program twice in a row, state funding first.
      rol.push_back(RolEntry{picks[0], Terms::StateFunded});
      rol.push_back(RolEntry{picks[0], Terms::SelfFunded});
      for (int i = 1; static_cast<int>(rol.size()) < length &&
                      i < static_cast<int>(picks.size());
           ++i)
        rol.push_back(RolEntry{picks[i],
                               uniform(0.0, 1.0) < 0.5 ? Terms::StateFunded
                                                       : Terms::SelfFunded});
    } else {
      // Mixed lists must not collide with the three named shapes, or the
      // configured shares would drift.
      std::vector<RolEntry> space;
      for (const auto& cid : picks) {
        space.push_back(RolEntry{cid, Terms::StateFunded});
        space.push_back(RolEntry{cid, Terms::SelfFunded});
      }
      int len = std::min<int>(std::max(length, 2), space.size());
      for (int attempt = 0; attempt < 100; ++attempt) {
        std::shuffle(space.begin(), space.end(), rng);
        rol.assign(space.begin(), space.begin() + len);
        bool all_state = true, all_self = true;
        for (const auto& e : rol) {
          all_state &= e.terms == Terms::StateFunded;
          all_self &= e.terms == Terms::SelfFunded;
        }
        bool leading_pair = len >= 2 && rol[0].college == rol[1].college &&
                            rol[0].terms == Terms::StateFunded &&
                            rol[1].terms == Terms::SelfFunded;
        if (!all_state && !all_self && !leading_pair) break;
      }
    }
    if (cfg.n_counties > 0) {
      bool capital = uniform(0.0, 1.0) < cfg.capital_share;
      entry.attrs.lives_in_capital = capital;
      entry.attrs.residence_county =
          capital ? std::string("capital")
                  : "county" + std::to_string(uniform_int(1, cfg.n_counties));
    }
    data.students[sid] = std::move(entry);
  }

  auto result = Market::validate(std::move(data));
  if (!result.ok())
    throw PreconditionError("generate_market: produced invalid market");
  return *result.market;
}

}  // namespace hadm
