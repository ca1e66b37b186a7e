#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "fixtures.hpp"
#include "hadm/da.hpp"
#include "hadm/io.hpp"

using namespace hadm;

namespace {

#ifndef HADM_CLI_PATH
#error "HADM_CLI_PATH must be defined by the build"
#endif

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  auto out_path = std::filesystem::temp_directory_path() / "hadm_cli_out.txt";
  std::string cmd = std::string(HADM_CLI_PATH) + " " + args + " >" +
                    out_path.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = read_file(out_path);
  return result;
}

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  write_file_atomic(path, content);
  return path;
}

}  // namespace

TEST_CASE("solve emits an allocation document on stdout") {
  auto market = write_temp("cli_m1.hadm", serialize_market(fixtures::ex1()));
  auto r = run("solve --algorithm sp-da --market " + market.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("hadm-alloc-1") == 0);
  CHECK(r.output.find("algorithm=sp-da") != std::string::npos);
  CHECK(r.output.find("[assigned]\nr,c,1\n") != std::string::npos);
  CHECK(r.output.find("[unassigned]\np\n") != std::string::npos);

  // The document parses back against the same market.
  Allocation y = parse_allocation(r.output, fixtures::ex1());
  CHECK(y == sp_da(fixtures::ex1()));
}

TEST_CASE("solve with a heuristic records the seed and writes a trace") {
  auto market = write_temp("cli_m2.hadm", serialize_market(fixtures::ex1()));
  auto trace = std::filesystem::temp_directory_path() / "cli_trace.txt";
  auto r = run("solve --algorithm alg3 --seed 7 --market " + market.string() +
               " --trace " + trace.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("seed=7") != std::string::npos);
  CHECK(r.output.find("r,c,0") != std::string::npos);
  CHECK(r.output.find("p,c,1") != std::string::npos);
  std::string trace_text = read_file(trace);
  CHECK(trace_text.find("seed=7") == 0);
  CHECK(trace_text.find("iteration 1") != std::string::npos);
}

TEST_CASE("check distinguishes stable, unstable, and broken input") {
  Market m = fixtures::ex1();
  auto market = write_temp("cli_m3.hadm", serialize_market(m));
  auto stable = write_temp(
      "cli_a1.alloc", serialize_allocation(m, sp_da(m), {"sp-da", {}}));
  auto r = run("check --market " + market.string() + " --allocation " +
               stable.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("stable mode=full") == 0);

  Allocation bad = fixtures::alloc({{"p", "c", Terms::StateFunded}});
  auto unstable = write_temp("cli_a2.alloc",
                             serialize_allocation(m, bad, {"manual", {}}));
  r = run("check --market " + market.string() + " --allocation " +
          unstable.string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("unstable mode=full") == 0);
  CHECK(r.output.find("witness ") != std::string::npos);

  r = run("check --mode certain --market " + market.string() +
          " --allocation " + stable.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("stable mode=certain") == 0);

  auto garbage = write_temp("cli_a3.alloc", "not a document\n");
  r = run("check --market " + market.string() + " --allocation " +
          garbage.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("missing files and bad flags exit with code 2") {
  auto r = run("solve --algorithm sp-da --market /nonexistent.hadm");
  CHECK(r.exit_code == 2);
  r = run("solve --algorithm bogus --market /nonexistent.hadm");
  CHECK(r.exit_code == 2);
  r = run("frobnicate");
  CHECK(r.exit_code == 2);
}

TEST_CASE("compare reports winners and losers") {
  Market m = fixtures::ex1();
  auto market = write_temp("cli_m4.hadm", serialize_market(m));
  Allocation base = fixtures::alloc({{"r", "c", Terms::StateFunded}});
  Allocation alt = fixtures::alloc({{"r", "c", Terms::SelfFunded},
                                    {"p", "c", Terms::StateFunded}});
  auto base_path = write_temp("cli_b.alloc",
                              serialize_allocation(m, base, {"sp-da", {}}));
  auto alt_path = write_temp("cli_c.alloc",
                             serialize_allocation(m, alt, {"alg3", 7}));
  auto r = run("compare --market " + market.string() + " --baseline " +
               base_path.string() + " --alternate " + alt_path.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("baseline assigned=1") != std::string::npos);
  CHECK(r.output.find("alternate assigned=2") != std::string::npos);
  CHECK(r.output.find("winners=1 losers=1 unchanged=0") != std::string::npos);
  CHECK(r.output.find("newly-assigned=1") != std::string::npos);

  r = run("compare --mobility --market " + market.string() + " --baseline " +
          base_path.string() + " --alternate " + alt_path.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("baseline-mobility") != std::string::npos);
  CHECK(r.output.find("excluded=") != std::string::npos);
}

TEST_CASE("enumerate lists the example's two stable allocations") {
  auto market = write_temp("cli_m5.hadm", serialize_market(fixtures::ex1()));
  auto r = run("enumerate --market " + market.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("count=2 mode=full") == 0);
  CHECK(r.output.find("r,c,1\n") != std::string::npos);
  CHECK(r.output.find("p,c,1\nr,c,0\n") != std::string::npos);

  r = run("enumerate --max-size-only --market " + market.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("max-size=2") == 0);
}

TEST_CASE("generate writes a parseable market") {
  auto config = write_temp("cli_gen.cfg",
                           "n_students=12\nn_colleges=3\nrol_max=4\nseed=5\n");
  auto out = std::filesystem::temp_directory_path() / "cli_gen.hadm";
  auto r = run("generate --config " + config.string() + " --out " +
               out.string());
  CHECK(r.exit_code == 0);
  Market m = parse_market(read_file(out));
  CHECK(m.students().size() == 12);
  CHECK(m.colleges().size() == 3);

  // --seed overrides the config file.
  auto out2 = std::filesystem::temp_directory_path() / "cli_gen2.hadm";
  r = run("generate --config " + config.string() + " --seed 6 --out " +
          out2.string());
  CHECK(r.exit_code == 0);
  CHECK(read_file(out) != read_file(out2));
}

TEST_CASE("reduce-smti and verify-smti-lemma work on an instance document") {
  SmtiInstance smti;
  smti.men = {{"m1", {"w1", "w2"}}, {"m2", {"w1"}}};
  smti.women_strict = {{"w2", {"m1"}}};
  smti.women_tied = {{"w1", {{"m1", "m2"}}}};
  Market empty = parse_market("hadm-1\n\n[students]\n\n[colleges]\n");
  auto instance = write_temp("cli_smti.hadm", serialize_market(empty, &smti));

  auto out = std::filesystem::temp_directory_path() / "cli_reduced.hadm";
  auto r = run("reduce-smti --instance " + instance.string() + " --out " +
               out.string());
  CHECK(r.exit_code == 0);
  Market reduced = parse_market(read_file(out));
  CHECK(reduced.colleges().size() == 2);
  CHECK(reduced.students().size() == 3);

  r = run("verify-smti-lemma --instance " + instance.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("lemma-holds=true") == 0);
  CHECK(r.output.find("perfect-stable-matching=true") != std::string::npos);
  CHECK(r.output.find("students=3") != std::string::npos);

  // A plain market document is not an SMTI instance.
  auto plain = write_temp("cli_plain.hadm", serialize_market(fixtures::ex1()));
  r = run("reduce-smti --instance " + plain.string() + " --out " +
          out.string());
  CHECK(r.exit_code == 2);
}

TEST_CASE("manipulate reports none when the two mechanisms agree") {
  auto market = write_temp("cli_m6.hadm", serialize_market(fixtures::ex1()));
  auto r = run("manipulate --market " + market.string() + " --student r");
  CHECK(r.exit_code == 0);
  CHECK(r.output == "none\n");

  r = run("manipulate --market " + market.string() + " --student zz");
  CHECK(r.exit_code == 2);
}

TEST_CASE("manipulate prints the misreport when one exists") {
  MarketData data;
  data.students["s1"].rol.entries = {{"c1", Terms::StateFunded},
                                     {"c2", Terms::StateFunded}};
  data.students["s2"].rol.entries = {{"c2", Terms::StateFunded},
                                     {"c1", Terms::StateFunded}};
  data.colleges["c1"].profile.quota_state = 1;
  data.colleges["c1"].profile.ranking = {"s2", "s1"};
  data.colleges["c2"].profile.quota_state = 1;
  data.colleges["c2"].profile.ranking = {"s1", "s2"};
  Market m = *Market::validate(std::move(data)).market;
  auto market = write_temp("cli_m7.hadm", serialize_market(m));
  auto r = run("manipulate --market " + market.string() + " --student s1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("misreport c1:1") == 0);
  CHECK(r.output.find("achieves c1,1") != std::string::npos);
}
