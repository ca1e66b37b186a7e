#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hadm/generator.hpp"
#include "hadm/market.hpp"
#include "hadm/oracle.hpp"
#include "hadm/types.hpp"

namespace hadm {

class ParseError : public HadmError {
 public:
  ParseError(int line, const std::string& what)
      : HadmError("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

class FingerprintMismatchError : public HadmError {
 public:
  using HadmError::HadmError;
};

inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline Terms parse_terms(const std::string& token, int line) {
  if (token == "1") return Terms::StateFunded;
  if (token == "0") return Terms::SelfFunded;
  throw ParseError(line, "InvalidTerms: '" + token + "' (expected 0 or 1)");
}

inline bool parse_bool(const std::string& token, int line) {
  if (token == "1") return true;
  if (token == "0") return false;
  throw ParseError(line, "expected 0 or 1, got '" + token + "'");
}

// Fields after the id come as key=value tokens separated by single spaces.
inline std::vector<std::pair<std::string, std::string>> parse_fields(
    const std::vector<std::string>& tokens, int line) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    auto eq = tokens[i].find('=');
    if (eq == std::string::npos)
      throw ParseError(line, "expected key=value, got '" + tokens[i] + "'");
    out.emplace_back(tokens[i].substr(0, eq), tokens[i].substr(eq + 1));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Market document ("hadm-1").

inline std::string serialize_market(const Market& market,
                                    const SmtiInstance* smti = nullptr) {
  std::ostringstream out;
  out << "hadm-1\n\n[students]\n";
  for (const auto& [sid, entry] : market.students()) {
    out << sid << " rol=";
    if (entry.rol.entries.empty()) {
      out << "-";
    } else {
      bool first = true;
      for (const auto& e : entry.rol.entries) {
        if (!first) out << ",";
        first = false;
        out << e.college << ":" << terms_value(e.terms);
      }
    }
    if (entry.attrs.residence_county)
      out << " county=" << *entry.attrs.residence_county;
    if (entry.attrs.lives_in_capital)
      out << " capital=" << (*entry.attrs.lives_in_capital ? 1 : 0);
    for (const auto& [k, v] : entry.attrs.tags) out << " tag." << k << "=" << v;
    out << "\n";
  }
  out << "\n[colleges]\n";
  for (const auto& [cid, entry] : market.colleges()) {
    const auto& p = entry.profile;
    out << cid << " q1=" << p.quota_state << " q0=" << p.quota_self
        << " ranking=";
    if (p.ranking.empty()) {
      out << "-";
    } else {
      for (std::size_t i = 0; i < p.ranking.size(); ++i)
        out << (i ? "," : "") << p.ranking[i];
    }
    out << " policy="
        << (p.funding_policy == FundingPolicy::Merit ? "merit"
                                                     : "inverse-merit");
    if (entry.attrs.location_county)
      out << " county=" << *entry.attrs.location_county;
    if (entry.attrs.in_capital)
      out << " capital=" << (*entry.attrs.in_capital ? 1 : 0);
    if (entry.attrs.full_time)
      out << " fulltime=" << (*entry.attrs.full_time ? 1 : 0);
    out << "\n";
  }
  if (smti) {
    out << "\n[smti]\n";
    for (const auto& m : smti->men) {
      out << "man " << m.id << " prefs=";
      if (m.prefs.empty())
        out << "-";
      else
        for (std::size_t i = 0; i < m.prefs.size(); ++i)
          out << (i ? "," : "") << m.prefs[i];
      out << "\n";
    }
    for (const auto& w : smti->women_strict) {
      out << "woman " << w.id << " prefs=";
      if (w.prefs.empty())
        out << "-";
      else
        for (std::size_t i = 0; i < w.prefs.size(); ++i)
          out << (i ? "," : "") << w.prefs[i];
      out << "\n";
    }
    for (const auto& w : smti->women_tied)
      out << "tied " << w.id << " men=" << w.men[0] << "," << w.men[1] << "\n";
  }
  return out.str();
}

struct ParsedInstance {
  Market market;
  std::optional<SmtiInstance> smti;
};

inline ParsedInstance parse_instance(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  enum class Section { Header, Students, Colleges, Smti } section =
      Section::Header;
  MarketData data;
  SmtiInstance smti;
  bool has_smti = false;
  bool versioned = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!versioned) {
      if (line != "hadm-1")
        throw ParseError(lineno, "expected version token 'hadm-1'");
      versioned = true;
      continue;
    }
    if (line == "[students]") {
      section = Section::Students;
      continue;
    }
    if (line == "[colleges]") {
      section = Section::Colleges;
      continue;
    }
    if (line == "[smti]") {
      section = Section::Smti;
      has_smti = true;
      continue;
    }
    if (line[0] == '[') throw ParseError(lineno, "unknown section " + line);

    std::vector<std::string> tokens = detail::split(line, ' ');
    switch (section) {
      case Section::Header:
        throw ParseError(lineno, "content before any section header");
      case Section::Students: {
        if (tokens.empty() || tokens[0].empty())
          throw ParseError(lineno, "missing student id");
        if (data.students.count(tokens[0]))
          throw ParseError(lineno, "duplicate student '" + tokens[0] + "'");
        StudentEntry entry;
        bool saw_rol = false;
        for (const auto& [key, value] : detail::parse_fields(tokens, lineno)) {
          if (key == "rol") {
            saw_rol = true;
            if (value == "-") continue;
            for (const auto& item : detail::split(value, ',')) {
              auto parts = detail::split(item, ':');
              if (parts.size() != 2 || parts[0].empty())
                throw ParseError(lineno,
                                 "bad rol entry '" + item + "'");
              entry.rol.entries.push_back(
                  RolEntry{parts[0], detail::parse_terms(parts[1], lineno)});
            }
          } else if (key == "county") {
            entry.attrs.residence_county = value;
          } else if (key == "capital") {
            entry.attrs.lives_in_capital = detail::parse_bool(value, lineno);
          } else if (key.rfind("tag.", 0) == 0) {
            entry.attrs.tags[key.substr(4)] = value;
          } else {
            throw ParseError(lineno, "unknown student field '" + key + "'");
          }
        }
        if (!saw_rol) throw ParseError(lineno, "student line lacks rol=");
        data.students[tokens[0]] = std::move(entry);
        break;
      }
      case Section::Colleges: {
        if (tokens.empty() || tokens[0].empty())
          throw ParseError(lineno, "missing college id");
        if (data.colleges.count(tokens[0]))
          throw ParseError(lineno, "duplicate college '" + tokens[0] + "'");
        CollegeEntry entry;
        bool saw_q1 = false, saw_q0 = false, saw_ranking = false;
        for (const auto& [key, value] : detail::parse_fields(tokens, lineno)) {
          try {
            if (key == "q1") {
              entry.profile.quota_state = std::stoi(value);
              saw_q1 = true;
            } else if (key == "q0") {
              entry.profile.quota_self = std::stoi(value);
              saw_q0 = true;
            } else if (key == "ranking") {
              saw_ranking = true;
              if (value != "-")
                entry.profile.ranking = detail::split(value, ',');
            } else if (key == "policy") {
              if (value == "merit")
                entry.profile.funding_policy = FundingPolicy::Merit;
              else if (value == "inverse-merit")
                entry.profile.funding_policy = FundingPolicy::InverseMerit;
              else
                throw ParseError(lineno, "unknown policy '" + value + "'");
            } else if (key == "county") {
              entry.attrs.location_county = value;
            } else if (key == "capital") {
              entry.attrs.in_capital = detail::parse_bool(value, lineno);
            } else if (key == "fulltime") {
              entry.attrs.full_time = detail::parse_bool(value, lineno);
            } else {
              throw ParseError(lineno, "unknown college field '" + key + "'");
            }
          } catch (const std::invalid_argument&) {
            throw ParseError(lineno, "bad number '" + value + "'");
          }
        }
        if (!saw_q1 || !saw_q0 || !saw_ranking)
          throw ParseError(lineno, "college line needs q1=, q0= and ranking=");
        data.colleges[tokens[0]] = std::move(entry);
        break;
      }
      case Section::Smti: {
        if (tokens.size() < 2)
          throw ParseError(lineno, "bad smti line");
        auto fields = detail::parse_fields(
            std::vector<std::string>(tokens.begin() + 1, tokens.end()), lineno);
        if (fields.size() != 1)
          throw ParseError(lineno, "smti line needs exactly one field");
        const auto& [key, value] = fields[0];
        std::vector<std::string> names;
        if (value != "-") names = detail::split(value, ',');
        if (tokens[0] == "man" && key == "prefs") {
          smti.men.push_back(SmtiMan{tokens[1], names});
        } else if (tokens[0] == "woman" && key == "prefs") {
          smti.women_strict.push_back(SmtiWoman{tokens[1], names});
        } else if (tokens[0] == "tied" && key == "men") {
          if (names.size() != 2)
            throw ParseError(lineno, "tied woman needs exactly two men");
          smti.women_tied.push_back(
              SmtiTiedWoman{tokens[1], {names[0], names[1]}});
        } else {
          throw ParseError(lineno, "unknown smti line kind '" + tokens[0] + "'");
        }
        break;
      }
    }
  }
  if (!versioned) throw ParseError(lineno, "empty document");

  auto result = Market::validate(std::move(data));
  if (!result.ok()) {
    std::string what = "invalid market:";
    for (const auto& e : result.errors)
      what += " [" + e.code + " " + e.subject + "] " + e.detail;
    throw ParseError(lineno, what);
  }
  ParsedInstance out{std::move(*result.market), std::nullopt};
  if (has_smti) {
    validate_smti(smti);  // throws MalformedInstanceError
    out.smti = std::move(smti);
  }
  return out;
}

inline Market parse_market(const std::string& text) {
  return parse_instance(text).market;
}

// Fingerprint binding allocation documents to the market they were solved on.
inline std::uint64_t document_fingerprint(const Market& market) {
  return fnv1a64(serialize_market(market));
}

// ---------------------------------------------------------------------------
// Allocation document ("hadm-alloc-1").

struct AllocationMetadata {
  std::string algorithm;
  std::optional<std::uint64_t> seed;
};

inline std::string serialize_allocation(const Market& market,
                                        const Allocation& y,
                                        const AllocationMetadata& meta) {
  if (!y.feasible())
    throw PreconditionError("serialize_allocation: allocation not feasible");
  std::ostringstream out;
  out << "hadm-alloc-1\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(document_fingerprint(market)));
  out << "fingerprint=" << buf << "\n";
  out << "algorithm=" << meta.algorithm << "\n";
  if (meta.seed) out << "seed=" << *meta.seed << "\n";
  out << "\n[assigned]\n";
  for (const auto& c : y.contracts())
    out << c.student << "," << c.college << "," << terms_value(c.terms) << "\n";
  out << "\n[unassigned]\n";
  auto assigned = y.assigned_students();
  for (const auto& [sid, _] : market.students())
    if (!assigned.count(sid)) out << sid << "\n";
  return out.str();
}

inline Allocation parse_allocation(const std::string& text,
                                   const Market& market,
                                   AllocationMetadata* meta = nullptr) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool versioned = false, saw_fingerprint = false;
  enum class Section { Header, Assigned, Unassigned } section = Section::Header;
  Allocation out;
  std::set<StudentId> listed_unassigned;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!versioned) {
      if (line != "hadm-alloc-1")
        throw ParseError(lineno, "expected version token 'hadm-alloc-1'");
      versioned = true;
      continue;
    }
    if (line == "[assigned]") {
      section = Section::Assigned;
      continue;
    }
    if (line == "[unassigned]") {
      section = Section::Unassigned;
      continue;
    }
    if (section == Section::Header) {
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ParseError(lineno, "expected key=value header line");
      std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "fingerprint") {
        saw_fingerprint = true;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(
                          document_fingerprint(market)));
        if (value != buf)
          throw FingerprintMismatchError(
              "FingerprintMismatch: document was produced for a different "
              "market");
      } else if (key == "algorithm") {
        if (meta) meta->algorithm = value;
      } else if (key == "seed") {
        try {
          if (meta) meta->seed = std::stoull(value);
        } catch (const std::invalid_argument&) {
          throw ParseError(lineno, "bad seed '" + value + "'");
        }
      } else {
        throw ParseError(lineno, "unknown header field '" + key + "'");
      }
      continue;
    }
    if (section == Section::Assigned) {
      auto parts = detail::split(line, ',');
      if (parts.size() != 3)
        throw ParseError(lineno, "expected student,college,terms");
      if (!market.has_student(parts[0]))
        throw ParseError(lineno, "unknown student '" + parts[0] + "'");
      if (!market.has_college(parts[1]))
        throw ParseError(lineno, "unknown college '" + parts[1] + "'");
      out.insert(Contract{parts[0], parts[1],
                          detail::parse_terms(parts[2], lineno)});
    } else {
      if (!market.has_student(line))
        throw ParseError(lineno, "unknown student '" + line + "'");
      listed_unassigned.insert(line);
    }
  }
  if (!versioned) throw ParseError(lineno, "empty document");
  if (!saw_fingerprint) throw ParseError(lineno, "missing fingerprint header");
  for (const auto& [sid, _] : market.students()) {
    bool assigned = out.assignment(sid).has_value();
    if (assigned == (listed_unassigned.count(sid) > 0))
      throw ParseError(lineno, "student '" + sid +
                                   "' must appear in exactly one section");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generator config: flat key=value lines, '#' comments.

inline GeneratorConfig parse_generator_config(const std::string& text) {
  GeneratorConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "expected key=value");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "n_students") cfg.n_students = std::stoi(value);
      else if (key == "n_colleges") cfg.n_colleges = std::stoi(value);
      else if (key == "quota_state_min") cfg.quota_state_min = std::stoi(value);
      else if (key == "quota_state_max") cfg.quota_state_max = std::stoi(value);
      else if (key == "quota_self_min") cfg.quota_self_min = std::stoi(value);
      else if (key == "quota_self_max") cfg.quota_self_max = std::stoi(value);
      else if (key == "share_state_only") cfg.share_state_only = std::stod(value);
      else if (key == "share_self_only") cfg.share_self_only = std::stod(value);
      else if (key == "share_consecutive_pair")
        cfg.share_consecutive_pair = std::stod(value);
      else if (key == "rol_min") cfg.rol_min = std::stoi(value);
      else if (key == "rol_max") cfg.rol_max = std::stoi(value);
      else if (key == "merit_share") cfg.merit_share = std::stod(value);
      else if (key == "n_counties") cfg.n_counties = std::stoi(value);
      else if (key == "capital_share") cfg.capital_share = std::stod(value);
      else if (key == "full_time_share") cfg.full_time_share = std::stod(value);
      else if (key == "common_weight") cfg.common_weight = std::stod(value);
      else if (key == "score_levels") cfg.score_levels = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else throw ParseError(lineno, "unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError(lineno, "bad value '" + value + "'");
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Atomic file output: write to a sibling temp file, then rename over.

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw HadmError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out.flush()) throw HadmError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HadmError("cannot open '" + path.string() + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace hadm
