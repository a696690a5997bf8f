// Command-line front door: parse problems, decide reachability, dump
// abstractions, compute state bounds, and validate witness traces. Exit
// codes: 0 reachable/valid, 1 unreachable/invalid, 2 usage, parse, or
// validation errors. Output under --json is byte-stable for fixed inputs;
// randomness exists only in the hidden fuzz subcommand.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tempora/trace_json.hpp"

namespace {

using namespace tempora;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Errors always reach stderr; under --json, warnings are withheld from the
// streams and surface in the envelope instead, so stdout+stderr stay
// machine-parseable on every exit code below 2.
void route_diagnostics(const std::vector<Diagnostic>& diags, bool json, Json* out) {
  for (const auto& d : diags) {
    if (d.severity == Severity::Warning && json) {
      if (out) out->push_back(diagnostic_to_string(d));
    } else {
      std::cerr << diagnostic_to_string(d) << "\n";
    }
  }
}

std::optional<Problem> load_problem(const std::string& path, bool json = false,
                                    Json* diags = nullptr) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read '" << path << "'\n";
    return std::nullopt;
  }
  ParseResult res = parse_problem(*text);
  route_diagnostics(res.diagnostics, json, diags);
  if (!res.ok()) return std::nullopt;
  return std::move(res.problem);
}

void emit(bool json, const std::string& command, int code, const Json& payload,
          const std::string& human, const Json& diagnostics = Json::array()) {
  if (json) {
    Json doc = Json::object();
    doc["schema"] = "v1";
    doc["command"] = command;
    doc["exitCode"] = code;
    doc["diagnostics"] = diagnostics;
    doc["payload"] = payload;
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << human;
  }
}

std::string substitution_text(const Substitution& sub) {
  std::string out = "{";
  bool first = true;
  for (const auto& [v, t] : sub.times) {
    out += (first ? "" : ", ") + v + "=" + format_rat(t);
    first = false;
  }
  for (const auto& [v, t] : sub.terms) {
    out += (first ? "" : ", ") + v + "=" + term_to_string(t);
    first = false;
  }
  return out + "}";
}

struct CheckFlags {
  std::string path;
  std::string mode = "visited";
  std::optional<long long> dmax;
  bool json = false;
  bool witness = false;
  unsigned long long max_states = 1'000'000;
  int workers = 1;
  std::optional<unsigned long long> concrete_depth;
};

int cmd_check(const CheckFlags& f) {
  Json diags = Json::array();
  auto p = load_problem(f.path, f.json, &diags);
  if (!p) return 2;
  if (f.dmax) {
    long long need = compute_dmax(*p);
    if (*f.dmax < need) {
      std::cerr << "error: --dmax " << *f.dmax << " is below the computed lower bound " << need
                << "\n";
      return 2;
    }
    p->dmax = *f.dmax;
  }
  if (f.concrete_depth) {
    // Experimentation-only path for unbalanced problems: explores the
    // concrete system to a step budget. Not finding the goal proves nothing.
    ConcreteSearchVerdict cv = solve_concrete_depth(*p, *f.concrete_depth, f.max_states);
    int code = cv.found ? 0 : 1;
    Json payload = Json::object();
    payload["reachable"] = cv.found;
    payload["complete"] = false;
    payload["depth"] = *f.concrete_depth;
    payload["statesVisited"] = cv.states_visited;
    if (cv.trace) payload["witness"] = concrete_trace_to_json(*cv.trace, *p);
    std::ostringstream hs;
    if (cv.found) {
      hs << "goal found by bounded concrete search (" << cv.states_visited << " states)\n";
      hs << "witness:\n  start " << configuration_to_string(cv.trace->start) << "\n";
      for (const auto& step : cv.trace->steps) {
        if (step.kind == ConcreteStep::Kind::Tick)
          hs << "  tick " << format_rat(step.epsilon) << "\n";
        else
          hs << "  apply " << step.rule << " " << substitution_text(step.sub) << "\n";
      }
    } else {
      hs << "no goal within depth " << *f.concrete_depth << " (" << cv.states_visited
         << " states); the bounded concrete search is incomplete\n";
    }
    emit(f.json, "check", code, payload, hs.str(), diags);
    return code;
  }

  SolveOptions opts;
  opts.mode = f.mode == "depth" ? SearchMode::DepthBounded : SearchMode::VisitedSet;
  opts.workers = f.workers;
  opts.max_states = f.max_states;
  Verdict v = solve(*p, opts);

  std::optional<ConcreteTrace> wit;
  bool wit_valid = true;
  if (f.witness && v.trace) {
    wit = concretize_trace(*v.trace, *p);
    wit_valid = validate_concrete_trace(*wit, *p, true).valid;
  }
  int code = wit_valid ? (v.reachable ? 0 : 1) : 2;

  Json payload = verdict_to_json(v, *p, wit);
  if (wit) payload["witnessValid"] = wit_valid;

  std::ostringstream hs;
  hs << "reachable: " << (v.reachable ? "yes" : "no") << "\n";
  hs << "states visited: " << v.states_visited << "\n";
  hs << "bound: " << v.bound.str() << "\n";
  if (v.trace) {
    hs << "trace (" << v.trace->steps.size() << " steps):\n";
    hs << "  start " << canonicalize(v.trace->start) << "\n";
    for (const auto& step : v.trace->steps) {
      if (step.kind == SymbolicStep::Kind::Rule)
        hs << "  apply " << step.rule << " " << substitution_text(step.sub);
      else
        hs << "  advance";
      hs << " -> " << canonicalize(step.result) << "\n";
    }
  }
  if (wit) {
    hs << "witness:\n";
    hs << "  start " << configuration_to_string(wit->start) << "\n";
    for (const auto& step : wit->steps) {
      if (step.kind == ConcreteStep::Kind::Tick)
        hs << "  tick " << format_rat(step.epsilon) << "\n";
      else
        hs << "  apply " << step.rule << " " << substitution_text(step.sub) << "\n";
    }
    hs << "witness validates: " << (wit_valid ? "yes" : "no") << "\n";
  }
  emit(f.json, "check", code, payload, hs.str(), diags);
  return code;
}

struct AbstractFlags {
  std::string target;
  std::optional<long long> dmax;
  bool json = false;
};

int cmd_abstract(const AbstractFlags& f) {
  Configuration s({{Fact{kTimePred, {}}, Rat(0)}});
  long long d = 0;
  Json diags = Json::array();
  if (!f.target.empty() && f.target.front() == '{') {
    ConfigParseResult res = parse_configuration_literal(f.target);
    route_diagnostics(res.diagnostics, f.json, &diags);
    if (!res.ok()) return 2;
    s = *res.configuration;
    if (f.dmax) {
      d = *f.dmax;
    } else {
      std::vector<Rat> times;
      for (const auto& tf : s.facts()) times.push_back(tf.time);
      d = dmax_from_numbers(times);
    }
  } else {
    auto p = load_problem(f.target, f.json, &diags);
    if (!p) return 2;
    s = p->initial;
    d = f.dmax.value_or(p->dmax);
  }
  std::string text = circle_to_string(abstract(s, d));
  Json payload = Json::object();
  payload["dmax"] = d;
  payload["abstraction"] = text;
  emit(f.json, "abstract", 0, payload, text + "\n", diags);
  return 0;
}

struct BoundFlags {
  std::string path;
  std::optional<long long> J, E, m, k, dmax;
  bool json = false;
};

int cmd_bound(const BoundFlags& f) {
  long long J = 0, E = 0, m = 0, k = 0, d = 0;
  Json diags = Json::array();
  if (!f.path.empty()) {
    auto p = load_problem(f.path, f.json, &diags);
    if (!p) return 2;
    J = p->alphabet.J();
    E = p->alphabet.E();
    m = p->m();
    k = p->k;
    d = p->dmax;
  } else if (!(f.J && f.E && f.m && f.k && f.dmax)) {
    std::cerr << "error: bound needs a problem file or all of --J --E --m --k --dmax\n";
    return 2;
  }
  if (f.J) J = *f.J;
  if (f.E) E = *f.E;
  if (f.m) m = *f.m;
  if (f.k) k = *f.k;
  if (f.dmax) d = *f.dmax;
  BigInt L = state_bound(J, E, m, k, d);

  Json payload = Json::object();
  payload["J"] = J;
  payload["E"] = E;
  payload["m"] = m;
  payload["k"] = k;
  payload["dmax"] = d;
  payload["bound"] = L.str();
  std::ostringstream hs;
  hs << "J = " << J << "\nE = " << E << "\nm = " << m << "\nk = " << k << "\ndmax = " << d
     << "\nbound = " << L.str() << "\n";
  emit(f.json, "bound", 0, payload, hs.str(), diags);
  return 0;
}

struct ValidateFlags {
  std::string problem;
  std::string trace;
  bool json = false;
};

int cmd_validate(const ValidateFlags& f) {
  Json env_diags = Json::array();
  auto p = load_problem(f.problem, f.json, &env_diags);
  if (!p) return 2;
  auto text = read_file(f.trace);
  if (!text) {
    std::cerr << "error: cannot read '" << f.trace << "'\n";
    return 2;
  }
  Json doc = Json::parse(*text, nullptr, false);
  if (doc.is_discarded()) {
    std::cerr << "error: '" << f.trace << "' is not valid JSON\n";
    return 2;
  }
  std::vector<Diagnostic> diags;
  auto trace = concrete_trace_from_json(doc, diags);
  route_diagnostics(diags, f.json, &env_diags);
  if (!trace) return 2;

  ValidationReport rep = validate_concrete_trace(*trace, *p, !p->goal.pairs.empty());
  int code = rep.valid ? 0 : 1;

  Json payload = Json::object();
  payload["valid"] = rep.valid;
  std::ostringstream hs;
  if (rep.valid) {
    hs << "valid\n";
  } else {
    Json viol = Json::object();
    viol["step"] = rep.violation->step;
    viol["message"] = rep.violation->message;
    if (rep.violation->state_key) viol["state"] = *rep.violation->state_key;
    payload["violation"] = viol;
    hs << "invalid at step " << rep.violation->step << ": " << rep.violation->message;
    if (rep.violation->state_key) hs << " [" << *rep.violation->state_key << "]";
    hs << "\n";
  }
  emit(f.json, "validate", code, payload, hs.str(), env_diags);
  return code;
}

Term swap_nonces(const Term& t) {
  Term out = t;
  if (out.kind == Term::Kind::Nonce) out.name = out.name == "n1" ? "n2" : "n1";
  for (auto& a : out.args) a = swap_nonces(a);
  return out;
}

Configuration random_config(std::mt19937_64& rng, long long d) {
  const char* preds[3] = {"P", "Q", "R"};
  const char* consts[2] = {"a", "b"};
  std::uniform_int_distribution<int> mdist(1, 5);
  std::uniform_int_distribution<long long> num(0, 4 * (d - 1));
  std::uniform_int_distribution<int> pick(0, 2);
  std::uniform_int_distribution<int> nargs(0, 2);
  std::vector<TimestampedFact> facts;
  facts.push_back({Fact{kTimePred, {}}, Rat(num(rng), 4)});
  int m = mdist(rng);
  for (int i = 1; i < m; ++i) {
    Fact f;
    f.pred = preds[pick(rng)];
    int na = nargs(rng);
    for (int a = 0; a < na; ++a) {
      int c = pick(rng);
      if (c == 2)
        f.args.push_back(Term::nonce(a % 2 ? "n1" : "n2"));
      else
        f.args.push_back(Term::constant(consts[c]));
    }
    facts.push_back({std::move(f), Rat(num(rng), 4)});
  }
  return Configuration(std::move(facts));
}

// Randomized structural self-checks over in-range configurations: the
// abstraction round-trip, agreement of next() with the concrete immediate
// successor, and canonical-key invariance under nonce renaming. Development
// aid only; everything user-facing is deterministic.
int cmd_fuzz(unsigned long long count) {
  unsigned long long seed = 1;
  if (const char* env = std::getenv("TEMPORA_SEED")) seed = std::strtoull(env, nullptr, 10);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long long> ddist(2, 4);
  for (unsigned long long i = 0; i < count; ++i) {
    long long d = ddist(rng);
    Configuration s = random_config(rng, d);
    CircleConfiguration a = abstract(s, d);
    if (abstract(concretize(a), d) != a) {
      std::cerr << "fuzz: round-trip failure on " << configuration_to_string(s) << " dmax " << d
                << "\n";
      return 2;
    }
    SuccessorStep step = immediate_successor_reps(s, d);
    Configuration advanced = concretize(next(a));
    const auto& tc = a.facts[a.time_index()];
    int share = 0, zero = 0;
    for (const auto& pf : a.facts) {
      if (pf.circle == tc.circle) ++share;
      if (pf.circle == 0) ++zero;
    }
    bool sanctioned = tc.circle == 0 ? share == 1
                                     : share == 1 && tc.circle == a.circle_count() && zero == 0;
    if (!equivalent(advanced, step.representative, d) &&
        !(sanctioned && equivalent(advanced, s, d))) {
      std::cerr << "fuzz: successor disagreement on " << configuration_to_string(s) << " dmax "
                << d << "\n";
      return 2;
    }
    std::vector<TimestampedFact> swapped;
    for (const auto& tf : s.facts()) {
      Fact f = tf.fact;
      for (auto& arg : f.args) arg = swap_nonces(arg);
      swapped.push_back({std::move(f), tf.time});
    }
    if (canonicalize(abstract(Configuration(std::move(swapped)), d)) != canonicalize(a)) {
      std::cerr << "fuzz: canonical key not renaming-invariant on " << configuration_to_string(s)
                << " dmax " << d << "\n";
      return 2;
    }
  }
  std::cout << "fuzz: " << count << " iterations with seed " << seed << ": ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verification toolkit for multiset rewriting with dense real time"};
  app.require_subcommand(1);

  CheckFlags cf;
  auto* check = app.add_subcommand("check", "decide non-critical reachability of the goal");
  check->add_option("problem", cf.path, "problem file (.tmsr)")->required();
  check->add_option("--mode", cf.mode, "search mode")
      ->check(CLI::IsMember({"visited", "depth"}));
  check->add_option("--dmax", cf.dmax, "horizon override (must be at least the computed bound)");
  check->add_flag("--json", cf.json, "machine-readable output");
  check->add_flag("--witness", cf.witness, "emit and re-validate a concrete witness trace");
  check->add_option("--max-states", cf.max_states, "search budget");
  check->add_option("--workers", cf.workers, "frontier expansion threads")
      ->check(CLI::Range(1, 64));
  check->add_option("--concrete-depth", cf.concrete_depth,
                    "bounded concrete search instead of the symbolic engine (incomplete; "
                    "accepts unbalanced problems)");

  AbstractFlags af;
  auto* abs = app.add_subcommand("abstract", "print the circle-configuration of a state");
  abs->add_option("target", af.target, "problem file or '{...}' configuration literal")
      ->required();
  abs->add_option("--dmax", af.dmax, "horizon")->check(CLI::Range(1ll, 1'000'000'000ll));
  abs->add_flag("--json", af.json, "machine-readable output");

  BoundFlags bf;
  auto* bound = app.add_subcommand("bound", "print the symbolic state-count bound");
  bound->add_option("problem", bf.path, "problem file (.tmsr)");
  bound->add_option("--J", bf.J, "predicate symbol count");
  bound->add_option("--E", bf.E, "constant and function symbol count");
  bound->add_option("--m", bf.m, "fact count");
  bound->add_option("--k", bf.k, "fact size ceiling");
  bound->add_option("--dmax", bf.dmax, "horizon");
  bound->add_flag("--json", bf.json, "machine-readable output");

  ValidateFlags vf;
  auto* val = app.add_subcommand("validate", "replay a trace file against a problem");
  val->add_option("problem", vf.problem, "problem file (.tmsr)")->required();
  val->add_option("trace", vf.trace, "trace file (JSON schema v1)")->required();
  val->add_flag("--json", vf.json, "machine-readable output");

  unsigned long long fuzz_count = 1000;
  auto* fuzz = app.add_subcommand("fuzz", "randomized structural self-checks");
  fuzz->add_option("--count", fuzz_count, "iterations");
  fuzz->group("");  // dev tool, hidden from help

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int ret = app.exit(e);
    return ret == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(check)) return cmd_check(cf);
    if (app.got_subcommand(abs)) return cmd_abstract(af);
    if (app.got_subcommand(bound)) return cmd_bound(bf);
    if (app.got_subcommand(val)) return cmd_validate(vf);
    if (app.got_subcommand(fuzz)) return cmd_fuzz(fuzz_count);
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
