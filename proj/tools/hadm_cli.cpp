#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hadm/alt_algorithms.hpp"
#include "hadm/analysis.hpp"
#include "hadm/da.hpp"
#include "hadm/generator.hpp"
#include "hadm/io.hpp"
#include "hadm/market.hpp"
#include "hadm/oracle.hpp"
#include "hadm/stability.hpp"

namespace {

using namespace hadm;

std::string render_da_trace(const DaTrace& trace) {
  std::ostringstream out;
  out << "proposer="
      << (trace.proposer == ProposerSide::Students ? "students" : "colleges")
      << "\n";
  for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
    out << "round " << i + 1 << "\n";
    for (const auto& c : trace.rounds[i].proposals)
      out << "  propose " << c.student << "," << c.college << ","
          << terms_value(c.terms) << "\n";
    for (const auto& c : trace.rounds[i].rejections)
      out << "  reject " << c.student << "," << c.college << ","
          << terms_value(c.terms) << "\n";
  }
  return out.str();
}

std::string render_algorithm_trace(const AlgorithmTrace& trace) {
  std::ostringstream out;
  out << "seed=" << trace.seed << "\n";
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& iter = trace.iterations[i];
    out << "iteration " << i + 1
        << " certainly-stable=" << (iter.certainly_stable ? 1 : 0) << "\n";
    for (const auto& c : iter.result.contracts())
      out << "  hold " << c.student << "," << c.college << ","
          << terms_value(c.terms) << "\n";
    if (iter.removed)
      out << "  remove " << iter.removed->first << "," << iter.removed->second
          << (iter.reason == RemovalReason::WitnessRule ? " witness-rule"
                                                        : " random")
          << "\n";
  }
  return out.str();
}

void print_witnesses(const std::vector<BlockWitness>& witnesses) {
  for (const auto& w : witnesses) {
    std::cout << "witness " << to_string(w.condition) << " college="
              << w.college;
    for (const auto& c : w.contracts_in)
      std::cout << " in:" << c.student << "," << c.college << ","
                << terms_value(c.terms);
    for (const auto& c : w.contracts_out)
      std::cout << " out:" << c.student << "," << c.college << ","
                << terms_value(c.terms);
    std::cout << "\n";
  }
}

void print_counts(const char* label, const AssignmentCounts& c) {
  std::cout << label << " assigned=" << c.assigned
            << " state-funded=" << c.state_funded
            << " self-funded=" << c.self_funded
            << " self-funded-full-time=" << c.self_funded_full_time << "\n";
}

void print_category_map(const char* label,
                        const std::map<OutcomeCategory, int>& m) {
  std::cout << label;
  for (const auto& [cat, n] : m) std::cout << " " << to_string(cat) << "=" << n;
  std::cout << "\n";
}

void print_mobility(const char* label, const MobilityCounts& c) {
  std::cout << label << " movers=" << c.movers << " periphery=" << c.periphery
            << " moved-to-capital=" << c.moved_to_capital
            << " excluded=" << c.excluded << "\n";
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Stable matching with financial-terms contracts"};
  app.require_subcommand(1);

  std::string algorithm, market_path, alloc_path, baseline_path, alternate_path,
      mode = "full", config_path, out_path, instance_path, student;
  std::optional<std::string> trace_path;
  std::uint64_t seed = 0;
  bool mobility = false, max_size_only = false;

  auto* solve = app.add_subcommand("solve", "Run a matching algorithm");
  solve->add_option("--algorithm", algorithm)
      ->required()
      ->check(CLI::IsMember({"sp-da", "sr-da", "alg1", "alg2", "alg3"}));
  solve->add_option("--market", market_path)->required();
  solve->add_option("--seed", seed);
  solve->add_option("--trace", trace_path);

  auto* check = app.add_subcommand("check", "Check stability of an allocation");
  check->add_option("--mode", mode)->check(CLI::IsMember({"full", "certain"}));
  check->add_option("--market", market_path)->required();
  check->add_option("--allocation", alloc_path)->required();

  auto* compare = app.add_subcommand("compare", "Compare two allocations");
  compare->add_option("--market", market_path)->required();
  compare->add_option("--baseline", baseline_path)->required();
  compare->add_option("--alternate", alternate_path)->required();
  compare->add_flag("--mobility", mobility);

  auto* enumerate = app.add_subcommand("enumerate",
                                       "Enumerate all stable allocations");
  enumerate->add_option("--market", market_path)->required();
  enumerate->add_option("--mode", mode)
      ->check(CLI::IsMember({"full", "certain"}));
  enumerate->add_flag("--max-size-only", max_size_only);

  auto* generate = app.add_subcommand("generate", "Generate a synthetic market");
  generate->add_option("--config", config_path)->required();
  auto* seed_opt = generate->add_option("--seed", seed);
  generate->add_option("--out", out_path)->required();

  auto* reduce = app.add_subcommand("reduce-smti",
                                    "Reduce a restricted SMTI instance");
  reduce->add_option("--instance", instance_path)->required();
  reduce->add_option("--out", out_path)->required();

  auto* verify = app.add_subcommand("verify-smti-lemma",
                                    "Check the reduction lemma on an instance");
  verify->add_option("--instance", instance_path)->required();

  auto* manipulate = app.add_subcommand(
      "manipulate", "Search for a profitable misreport against SR-DA");
  manipulate->add_option("--market", market_path)->required();
  manipulate->add_option("--student", student)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (solve->parsed()) {
    Market market = parse_market(read_file(market_path));
    Allocation y;
    AllocationMetadata meta{algorithm, std::nullopt};
    std::string trace_text;
    if (algorithm == "sp-da" || algorithm == "sr-da") {
      DaTrace trace;
      y = algorithm == "sp-da" ? sp_da(market, &trace) : sr_da(market, &trace);
      trace_text = render_da_trace(trace);
    } else {
      AlgorithmTrace trace;
      meta.seed = seed;
      if (algorithm == "alg1")
        y = run_algorithm1(market, seed, &trace);
      else if (algorithm == "alg2")
        y = run_algorithm2(market, seed, &trace);
      else
        y = run_algorithm3(market, seed, &trace);
      trace_text = render_algorithm_trace(trace);
    }
    if (trace_path) write_file_atomic(*trace_path, trace_text);
    std::cout << serialize_allocation(market, y, meta);
    return 0;
  }

  if (check->parsed()) {
    Market market = parse_market(read_file(market_path));
    Allocation y = parse_allocation(read_file(alloc_path), market);
    StabilityVerdict verdict = mode == "full" ? is_stable(market, y)
                                              : is_certainly_stable(market, y);
    std::cout << (verdict.stable ? "stable" : "unstable") << " mode=" << mode
              << "\n";
    print_witnesses(verdict.witnesses);
    return verdict.stable ? 0 : 1;
  }

  if (compare->parsed()) {
    Market market = parse_market(read_file(market_path));
    Allocation baseline = parse_allocation(read_file(baseline_path), market);
    Allocation alternate = parse_allocation(read_file(alternate_path), market);
    auto records = classify_outcomes(market, baseline, alternate);
    ComparisonReport report =
        summarize_comparison(market, records, baseline, alternate);
    print_counts("baseline", report.baseline);
    print_counts("alternate", report.alternate);
    std::cout << "winners=" << report.winners << " losers=" << report.losers
              << " unchanged=" << report.unchanged << "\n";
    print_category_map("winner-categories", report.winner_categories);
    print_category_map("loser-categories", report.loser_categories);
    if (mobility) {
      MobilityReport mob = mobility_report(market, baseline, alternate, records);
      print_mobility("baseline-mobility", mob.baseline);
      print_mobility("alternate-mobility", mob.alternate);
      print_category_map("mobility-winner-categories", mob.winner_categories);
      print_category_map("mobility-loser-categories", mob.loser_categories);
    }
    return 0;
  }

  if (enumerate->parsed()) {
    Market market = parse_market(read_file(market_path));
    StabilityMode m =
        mode == "full" ? StabilityMode::Full : StabilityMode::Certain;
    if (max_size_only) {
      auto [size, witness] = max_stable_size(market, m);
      std::cout << "max-size=" << size << "\n";
      std::cout << serialize_allocation(market, witness,
                                        {"enumerate", std::nullopt});
      return 0;
    }
    StableSet set = enumerate_stable(market, m);
    std::cout << "count=" << set.allocations.size() << " mode=" << mode << "\n";
    for (const auto& y : set.allocations) {
      std::cout << "--\n";
      for (const auto& c : y.contracts())
        std::cout << c.student << "," << c.college << "," << terms_value(c.terms)
                  << "\n";
    }
    return 0;
  }

  if (generate->parsed()) {
    GeneratorConfig cfg = parse_generator_config(read_file(config_path));
    if (seed_opt->count() > 0) cfg.seed = seed;
    Market market = generate_market(cfg);
    write_file_atomic(out_path, serialize_market(market));
    return 0;
  }

  if (reduce->parsed()) {
    ParsedInstance inst = parse_instance(read_file(instance_path));
    if (!inst.smti)
      throw MalformedInstanceError("instance document lacks an [smti] section");
    Market market = reduce_smti(*inst.smti);
    write_file_atomic(out_path, serialize_market(market));
    return 0;
  }

  if (verify->parsed()) {
    ParsedInstance inst = parse_instance(read_file(instance_path));
    if (!inst.smti)
      throw MalformedInstanceError("instance document lacks an [smti] section");
    bool perfect = smti_perfect_stable_exists(*inst.smti);
    Market market = reduce_smti(*inst.smti);
    auto [size, _] = max_stable_size(market, StabilityMode::Certain);
    int total = static_cast<int>(market.students().size());
    bool holds = perfect == (size == total);
    std::cout << "lemma-holds=" << (holds ? "true" : "false")
              << " perfect-stable-matching=" << (perfect ? "true" : "false")
              << " max-certainly-stable-size=" << size << " students=" << total
              << "\n";
    return 0;
  }

  if (manipulate->parsed()) {
    Market market = parse_market(read_file(market_path));
    if (!market.has_student(student))
      throw PreconditionError("unknown student '" + student + "'");
    auto witness = find_sr_da_manipulation(market, student);
    if (!witness) {
      std::cout << "none\n";
      return 0;
    }
    std::cout << "misreport";
    for (const auto& e : witness->reported.entries)
      std::cout << " " << e.college << ":" << terms_value(e.terms);
    std::cout << "\n";
    if (witness->outcome)
      std::cout << "achieves " << witness->outcome->college << ","
                << terms_value(witness->outcome->terms) << "\n";
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
