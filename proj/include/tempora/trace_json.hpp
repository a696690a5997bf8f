#pragma once

// JSON encoding of verdicts and concrete traces (schema "v1"). Field order
// is fixed and maps are emitted in sorted key order, so encoding the same
// value twice yields identical bytes. Rationals and big naturals travel as
// decimal strings; "state" fields carry canonical keys of the class reached
// after each step.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempora/reachability.hpp"
#include "tempora/spec_lang.hpp"

namespace tempora {

using Json = nlohmann::ordered_json;

inline Json substitution_to_json(const Substitution& sub) {
  Json times = Json::object();
  for (const auto& [v, t] : sub.times) times[v] = format_rat(t);
  Json terms = Json::object();
  for (const auto& [v, t] : sub.terms) terms[v] = term_to_string(t);
  Json out = Json::object();
  out["times"] = std::move(times);
  out["terms"] = std::move(terms);
  return out;
}

inline std::optional<Substitution> substitution_from_json(const Json& j,
                                                          std::vector<Diagnostic>& diags) {
  auto err = [&](const std::string& m) {
    diags.push_back({Severity::Error, 0, 0, m});
    return std::nullopt;
  };
  if (!j.is_object()) return err("substitution must be an object");
  Substitution sub;
  if (j.contains("times")) {
    if (!j["times"].is_object()) return err("substitution 'times' must be an object");
    for (const auto& [v, t] : j["times"].items()) {
      if (!t.is_string()) return err("time binding for '" + v + "' must be a string");
      auto r = parse_rat(t.get<std::string>());
      if (!r) return err("time binding for '" + v + "' is not a rational");
      sub.times[v] = *r;
    }
  }
  if (j.contains("terms")) {
    if (!j["terms"].is_object()) return err("substitution 'terms' must be an object");
    for (const auto& [v, t] : j["terms"].items()) {
      if (!t.is_string()) return err("term binding for '" + v + "' must be a string");
      auto term = parse_term_text(t.get<std::string>());
      if (!term) return err("term binding for '" + v + "' does not parse");
      sub.terms[v] = *term;
    }
  }
  return sub;
}

// Encodes a concrete trace, replaying it to stamp each step with the
// canonical key of the class it lands in. The input must replay cleanly;
// traces produced by concretize_trace always do.
inline Json concrete_trace_to_json(const ConcreteTrace& t, const Problem& p) {
  Json out = Json::object();
  out["schema"] = "v1";
  out["start"] = configuration_to_string(t.start);
  Json steps = Json::array();
  Configuration s = t.start;
  for (const auto& step : t.steps) {
    Json js = Json::object();
    if (step.kind == ConcreteStep::Kind::Tick) {
      js["kind"] = "tick";
      js["epsilon"] = format_rat(step.epsilon);
      s = tick(s, step.epsilon);
    } else {
      js["kind"] = "rule";
      js["rule"] = step.rule;
      js["substitution"] = substitution_to_json(step.sub);
      const Rule& r = detail::rule_by_name(p, step.rule);
      if (auto msg = detail::check_rule_step(r, step.sub, s))
        throw Error(Errc::ReplayMismatch, "trace does not replay: " + *msg);
    }
    js["state"] = canonicalize(abstract(s, p.dmax));
    steps.push_back(std::move(js));
  }
  out["trace"] = std::move(steps);
  return out;
}

inline std::optional<ConcreteTrace> concrete_trace_from_json(const Json& j,
                                                             std::vector<Diagnostic>& diags) {
  auto err = [&](const std::string& m) -> std::optional<ConcreteTrace> {
    diags.push_back({Severity::Error, 0, 0, m});
    return std::nullopt;
  };
  if (!j.is_object()) return err("trace document must be an object");
  if (j.contains("schema") && j["schema"] != "v1") return err("unsupported trace schema");
  if (!j.contains("start") || !j["start"].is_string())
    return err("trace document needs a 'start' configuration string");
  auto start = parse_configuration_literal(j["start"].get<std::string>());
  for (auto& d : start.diagnostics) diags.push_back(d);
  if (!start.ok()) return std::nullopt;
  ConcreteTrace t;
  t.start = *start.configuration;
  if (!j.contains("trace") || !j["trace"].is_array()) return err("'trace' must be an array");
  for (const auto& js : j["trace"]) {
    if (!js.is_object() || !js.contains("kind") || !js["kind"].is_string())
      return err("each trace step needs a 'kind'");
    std::string kind = js["kind"].get<std::string>();
    ConcreteStep step;
    if (kind == "tick") {
      step.kind = ConcreteStep::Kind::Tick;
      if (!js.contains("epsilon") || !js["epsilon"].is_string())
        return err("tick step needs an 'epsilon' string");
      auto eps = parse_rat(js["epsilon"].get<std::string>());
      if (!eps) return err("tick epsilon is not a rational");
      step.epsilon = *eps;
    } else if (kind == "rule") {
      step.kind = ConcreteStep::Kind::Rule;
      if (!js.contains("rule") || !js["rule"].is_string())
        return err("rule step needs a 'rule' name");
      step.rule = js["rule"].get<std::string>();
      auto sub = substitution_from_json(js.value("substitution", Json::object()), diags);
      if (!sub) return std::nullopt;
      step.sub = *sub;
    } else {
      return err("unknown step kind '" + kind + "'");
    }
    t.steps.push_back(std::move(step));
  }
  return t;
}

// Verdict document for the reachability check. The symbolic trace appears
// only for reachable verdicts; a concrete witness can be nested alongside.
inline Json verdict_to_json(const Verdict& v, const Problem& p,
                            const std::optional<ConcreteTrace>& witness = std::nullopt) {
  Json out = Json::object();
  out["schema"] = "v1";
  out["reachable"] = v.reachable;
  out["statesVisited"] = v.states_visited;
  out["bound"] = v.bound.str();
  if (v.trace) {
    out["start"] = canonicalize(v.trace->start);
    Json steps = Json::array();
    for (const auto& step : v.trace->steps) {
      Json js = Json::object();
      if (step.kind == SymbolicStep::Kind::Rule) {
        js["kind"] = "rule";
        js["rule"] = step.rule;
        js["substitution"] = substitution_to_json(step.sub);
      } else {
        js["kind"] = "next";
      }
      js["state"] = canonicalize(step.result);
      steps.push_back(std::move(js));
    }
    out["trace"] = std::move(steps);
  }
  if (witness) out["witness"] = concrete_trace_to_json(*witness, p);
  return out;
}

}  // namespace tempora
