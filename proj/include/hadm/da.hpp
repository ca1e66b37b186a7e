#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "hadm/market.hpp"
#include "hadm/types.hpp"

namespace hadm {

enum class ProposerSide { Students, Colleges };

// Round-by-round record of a deferred acceptance run.
struct DaTrace {
  struct Round {
    std::vector<Contract> proposals;   // newly issued this round
    std::vector<Contract> rejections;  // issued this round
  };
  ProposerSide proposer = ProposerSide::Students;
  std::vector<Round> rounds;
};

// Student-proposing deferred acceptance. Each round every free student
// proposes the best ROL entry she has not been rejected from; colleges keep
// the streamlined choice from held plus new proposals.
inline Allocation sp_da(const Market& market, DaTrace* trace = nullptr) {
  if (trace) {
    trace->proposer = ProposerSide::Students;
    trace->rounds.clear();
  }
  std::map<StudentId, std::size_t> next;  // index into ROL
  std::map<StudentId, bool> held_by_student;
  for (const auto& [sid, _] : market.students()) {
    next[sid] = 0;
    held_by_student[sid] = false;
  }
  std::map<CollegeId, std::set<Contract>> held;

  while (true) {
    DaTrace::Round round;
    std::map<CollegeId, std::set<Contract>> proposals;
    for (const auto& [sid, entry] : market.students()) {
      if (held_by_student[sid]) continue;
      if (next[sid] >= entry.rol.entries.size()) continue;
      const RolEntry& e = entry.rol.entries[next[sid]];
      Contract c{sid, e.college, e.terms};
      proposals[e.college].insert(c);
      round.proposals.push_back(c);
    }
    if (round.proposals.empty()) break;

    for (auto& [cid, props] : proposals) {
      std::set<Contract> pool = held[cid];
      pool.insert(props.begin(), props.end());
      std::set<Contract> chosen = market.college_choice_streamlined(cid, pool);
      for (const auto& c : pool) {
        if (chosen.count(c)) continue;
        round.rejections.push_back(c);
        held_by_student[c.student] = false;
        ++next[c.student];
      }
      for (const auto& c : chosen) held_by_student[c.student] = true;
      held[cid] = std::move(chosen);
    }
    if (trace) trace->rounds.push_back(std::move(round));
  }

  Allocation out;
  for (const auto& [_, contracts] : held)
    for (const auto& c : contracts) out.insert(c);
  return out;
}

// Student-receiving deferred acceptance, round-by-round: each college
// proposes, per terms, the not-previously-rejected contracts to the
// highest-ranked (up to) q^t acceptable students; each student rejects all
// but the most preferred acceptable proposal.
inline Allocation sr_da(const Market& market, DaTrace* trace = nullptr) {
  if (trace) {
    trace->proposer = ProposerSide::Colleges;
    trace->rounds.clear();
  }
  struct Slot {
    CollegeId college;
    Terms terms;
    int quota = 0;
    std::size_t ptr = 0;                // position in the college ranking
    std::set<StudentId> proposed_to;    // current, not-yet-rejected proposals
  };
  std::vector<Slot> slots;
  for (const auto& [cid, entry] : market.colleges()) {
    slots.push_back(Slot{cid, Terms::StateFunded, entry.profile.quota_state});
    slots.push_back(Slot{cid, Terms::SelfFunded, entry.profile.quota_self});
  }

  // Live offers per student, maintained incrementally: students without new
  // proposals this round already hold at most one acceptable offer and have
  // nothing to re-decide.
  std::map<StudentId, std::set<Slot*>> offers;
  while (true) {
    DaTrace::Round round;
    std::set<StudentId> pending;
    for (auto& slot : slots) {
      const auto& ranking = market.profile(slot.college).ranking;
      while (static_cast<int>(slot.proposed_to.size()) < slot.quota &&
             slot.ptr < ranking.size()) {
        const StudentId& s = ranking[slot.ptr++];
        slot.proposed_to.insert(s);
        offers[s].insert(&slot);
        pending.insert(s);
        if (trace) round.proposals.push_back(Contract{s, slot.college, slot.terms});
      }
    }

    bool any_rejection = false;
    for (const auto& sid : pending) {
      auto& slot_offers = offers[sid];
      Slot* best = nullptr;
      int best_rank = kUnacceptable;
      for (Slot* slot : slot_offers) {
        int r = market.student_rank(
            sid, std::optional<RolEntry>{RolEntry{slot->college, slot->terms}});
        if (r < best_rank) {
          best_rank = r;
          best = slot;
        }
      }
      for (auto it = slot_offers.begin(); it != slot_offers.end();) {
        Slot* slot = *it;
        if (slot == best && best_rank != kUnacceptable) {
          ++it;
          continue;
        }
        any_rejection = true;
        if (trace)
          round.rejections.push_back(Contract{sid, slot->college, slot->terms});
        slot->proposed_to.erase(sid);
        it = slot_offers.erase(it);
      }
    }
    if (trace) trace->rounds.push_back(std::move(round));
    if (!any_rejection) break;
  }

  Allocation out;
  for (const auto& slot : slots)
    for (const auto& s : slot.proposed_to)
      out.insert(Contract{s, slot.college, slot.terms});
  return out;
}

// College-proposing deferred acceptance run in the related market, mapped
// back through the corresponding allocation. Must equal sr_da exactly.
inline Allocation sr_da_via_related(const Market& market) {
  RelatedMarket rel = related_market(market);
  // Sequential proposing: outcomes of DA are order-independent, so a simple
  // worklist over auxiliary colleges with free capacity suffices.
  struct State {
    std::size_t ptr = 0;
    std::set<StudentId> matched;
  };
  std::vector<State> state(rel.aux_colleges.size());
  std::map<StudentId, std::pair<int, std::size_t>> best;  // rank, aux index

  std::vector<std::size_t> work;
  for (std::size_t i = 0; i < rel.aux_colleges.size(); ++i) work.push_back(i);
  while (!work.empty()) {
    std::size_t i = work.back();
    work.pop_back();
    const AuxCollege& aux = rel.aux_colleges[i];
    State& st = state[i];
    const auto& ranking = market.profile(aux.college).ranking;
    while (static_cast<int>(st.matched.size()) < aux.quota &&
           st.ptr < ranking.size()) {
      const StudentId& s = ranking[st.ptr++];
      int r = market.student_rank(s, std::optional<RolEntry>{aux.entry()});
      if (r == kUnacceptable) continue;
      auto it = best.find(s);
      if (it == best.end() || r < it->second.first) {
        if (it != best.end()) {
          std::size_t prev = it->second.second;
          state[prev].matched.erase(s);
          work.push_back(prev);
        }
        best[s] = {r, i};
        st.matched.insert(s);
      }
    }
  }

  RelatedMatching matching;
  for (std::size_t i = 0; i < rel.aux_colleges.size(); ++i)
    for (const auto& s : state[i].matched)
      matching[s] = rel.aux_colleges[i].entry();
  return corresponding_allocation(matching);
}

}  // namespace hadm
