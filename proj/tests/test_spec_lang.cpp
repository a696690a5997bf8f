#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/testutil.hpp"
#include "support/generators.hpp"

#include "tempora/spec_lang.hpp"

using namespace tempora;

namespace {

std::string all_messages(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) out += diagnostic_to_string(d) + "\n";
  return out;
}

bool mentions(const std::vector<Diagnostic>& ds, const std::string& needle, Severity sev) {
  for (const auto& d : ds)
    if (d.severity == sev && d.message.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("parsing the skipping scenario", "[spec_lang]") {
  auto res = parse_problem(
      "init { Time@1.5, F@3.5 }\n"
      "critical { Time@T, F@T1 | T1 = T }\n"
      "goal { Time@T, F@T1 | T = T1 + 1 }\n"
      "dmax auto\n");
  INFO(all_messages(res.diagnostics));
  REQUIRE(res.ok());
  const auto& p = *res.problem;
  CHECK(p.m() == 2);
  CHECK(p.dmax == 5);
  CHECK(p.rules.empty());
  REQUIRE(p.critical.pairs.size() == 1);
  REQUIRE(p.goal.pairs.size() == 1);
  CHECK(p.goal.pairs[0].constraints ==
        std::vector<Constraint>{{"T", Rel::Eq, "T1", 1}});
  CHECK(p.initial.time() == rat("1.5"));
}

TEST_CASE("parsing rules with persistence, consumption, and creation", "[spec_lang]") {
  auto res = parse_problem(
      "init { Time@0, F(a)@0, R@0 }\n"
      "rule step: Time@T, F(X)@T1, R@T2 | T >= T1 -o Time@T, R@T2, G(X)@(T+2)\n"
      "goal { G(X)@T1 }\n");
  INFO(all_messages(res.diagnostics));
  REQUIRE(res.ok());
  const auto& r = res.problem->rules.at(0);
  CHECK(r.name == "step");
  CHECK(r.time_var == "T");
  REQUIRE(r.pre.size() == 3);
  // F(X)@T1 is not in the post: consumed. R@T2 reappears: persistent.
  CHECK(r.consumed == std::vector<size_t>{1});
  REQUIRE(r.created.size() == 1);
  CHECK(r.created[0].delay == 2);
  CHECK(fact_to_string(r.created[0].fact) == "G(X)");
  CHECK(r.balanced());
}

TEST_CASE("existentials and nonce creation", "[spec_lang]") {
  auto res = parse_problem(
      "init { Time@0, P(a)@0 }\n"
      "rule mint: Time@T, P(X)@T1 -o exists Z . Time@T, P(Z)@(T+1)\n"
      "goal { P(X)@T1 }\n");
  INFO(all_messages(res.diagnostics));
  REQUIRE(res.ok());
  const auto& r = res.problem->rules.at(0);
  CHECK(r.existentials == std::vector<std::string>{"Z"});
  CHECK(r.consumed.size() == 1);
}

TEST_CASE("parse diagnostics carry locations", "[spec_lang]") {
  SECTION("unbalanced rule fails the balance check") {
    auto res = parse_problem(
        "init { Time@0, F(a)@0 }\n"
        "rule r: Time@T, F(X)@T1 -o Time@T, G(X)@(T+2), H@(T+0)\n");
    REQUIRE(res.ok());  // representable, but flagged
    CHECK(mentions(res.diagnostics, "consumes 1", Severity::Warning));
    auto bd = balance_diagnostics(*res.problem);
    REQUIRE(bd.size() == 1);
    CHECK(mentions(bd, "consumes 1 facts but creates 2", Severity::Error));
  }
  SECTION("missing clock in the pre-condition") {
    auto res = parse_problem("init { Time@0, F(a)@0 }\nrule r: F(X)@T1 -o F(X)@T1\n");
    CHECK_FALSE(res.ok());
    CHECK(mentions(res.diagnostics, "Time", Severity::Error));
  }
  SECTION("syntax error location") {
    auto res = parse_problem("init { Time@@0 }\n");
    CHECK_FALSE(res.ok());
    REQUIRE_FALSE(res.diagnostics.empty());
    CHECK(res.diagnostics[0].line == 1);
  }
  SECTION("guard over a variable missing from the pre-condition") {
    auto res = parse_problem(
        "init { Time@0, F@0 }\n"
        "rule r: Time@T, F@T1 | T > T9 -o Time@T, F@T1\n");
    CHECK_FALSE(res.ok());
    CHECK(mentions(res.diagnostics, "T9", Severity::Error));
  }
  SECTION("a name cannot be both a time variable and a term variable") {
    auto res = parse_problem(
        "init { Time@0, F(a)@0 }\n"
        "rule r: Time@T, F(T1)@T1 -o Time@T, F(T1)@T1\n");
    CHECK_FALSE(res.ok());
    CHECK(mentions(res.diagnostics, "T1", Severity::Error));
  }
  SECTION("negative delays are rejected at the grammar level") {
    auto res = parse_problem(
        "init { Time@0, F@0 }\n"
        "rule r: Time@T, F@T1 -o Time@T, F@(T + -1)\n");
    CHECK_FALSE(res.ok());
  }
  SECTION("explicit dmax below the computed horizon") {
    auto res = parse_problem("init { Time@3.5 }\ndmax 2\n");
    CHECK_FALSE(res.ok());
    CHECK(mentions(res.diagnostics, "dmax", Severity::Error));
  }
  SECTION("explicit dmax at or above the computed horizon is accepted") {
    auto res = parse_problem("init { Time@3.5 }\ndmax 7\n");
    REQUIRE(res.ok());
    CHECK(res.problem->dmax == 7);
  }
}

TEST_CASE("unbalanced rules warn rather than fail", "[spec_lang]") {
  // A rule that consumes without creating is representable; the validator
  // flags it as outside the complete symbolic fragment.
  auto res = parse_problem(
      "init { Time@0, F@0 }\n"
      "rule drop: Time@T, F@T1 -o Time@T\n"
      "goal { F@T1 }\n");
  INFO(all_messages(res.diagnostics));
  REQUIRE(res.ok());
  CHECK(mentions(res.diagnostics, "not guaranteed", Severity::Warning));
}

TEST_CASE("serialization round-trips", "[spec_lang]") {
  SECTION("hand-written problem") {
    auto res = parse_problem(
        "dmax 6\n"
        "init { Time@1.5, F(a)@3.5, P(g(a,b))@0.25 }\n"
        "rule step: Time@T, F(X)@T1 | T >= T1 + 1 -o Time@T, F(X)@T1, Q(X)@(T+0)\n"
        "rule mint: Time@T, Q(X)@T1 -o exists Z . Time@T, P(g(Z,X))@(T+2)\n"
        "critical { Time@T, Q(X)@T1 | T1 > T }\n"
        "goal { P(X)@T1, Time@T | T = T1 + 2 }\n");
    INFO(all_messages(res.diagnostics));
    REQUIRE(res.ok());
    auto text = serialize_problem(*res.problem);
    auto again = parse_problem(text);
    INFO(text << "\n" << all_messages(again.diagnostics));
    REQUIRE(again.ok());
    CHECK(*again.problem == *res.problem);
  }
  SECTION("generated problems") {
    std::mt19937_64 rng(20260817);
    gen::ProblemOptions o;
    for (int i = 0; i < 200; ++i) {
      auto p = gen::random_problem(rng, o);
      auto ds = validate_problem(p);
      INFO(serialize_problem(p) << "\n" << all_messages(ds));
      CHECK_FALSE(has_errors(ds));
      auto again = parse_problem(serialize_problem(p));
      REQUIRE(again.ok());
      CHECK(*again.problem == p);
    }
  }
  SECTION("rationals canonicalize to fraction form") {
    auto res = parse_problem("init { Time@3.5 }\n");
    REQUIRE(res.ok());
    auto text = serialize_problem(*res.problem);
    CHECK(text.find("7/2") != std::string::npos);
  }
  SECTION("empty goal serializes away") {
    auto res = parse_problem("init { Time@0 }\n");
    REQUIRE(res.ok());
    CHECK(res.problem->goal.pairs.empty());
    auto text = serialize_problem(*res.problem);
    CHECK(text.find("goal") == std::string::npos);
    auto again = parse_problem(text);
    REQUIRE(again.ok());
    CHECK(again.problem->goal.pairs.empty());
  }
}

TEST_CASE("configuration literals", "[spec_lang]") {
  auto res = parse_configuration_literal("{ Time@1, Q@1.54, S@2.4 }");
  REQUIRE(res.ok());
  CHECK(configuration_to_string(*res.configuration) == "{Time@1, Q@77/50, S@12/5}");

  CHECK_FALSE(parse_configuration_literal("{ Q@1 }").ok());
  CHECK_FALSE(parse_configuration_literal("{ Time@1, P(X)@2 }").ok());
}

TEST_CASE("the fuzz corpus parses its own serialization deterministically", "[spec_lang]") {
  std::mt19937_64 rng(7);
  gen::ProblemOptions o;
  o.arity0_only = true;
  o.max_extra_facts = 1;
  for (int i = 0; i < 50; ++i) {
    auto p = gen::random_problem(rng, o);
    auto t1 = serialize_problem(p);
    auto t2 = serialize_problem(*parse_problem(t1).problem);
    CHECK(t1 == t2);
  }
}
