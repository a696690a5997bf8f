#pragma once

// First-order terms and facts.
//
// Design decisions:
// - Terms are small immutable value types; comparisons are structural.
// - Nonce names live in their own namespace ("n" + digits) so renaming
//   never collides with constants.
// - Arities are checked where symbols are collected (Alphabet), not on
//   every construction; hot paths assume well-formed input.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tempora/error.hpp"
#include "tempora/rational.hpp"

namespace tempora {

struct Term {
  enum class Kind { Constant, Nonce, Variable, Apply };

  Kind kind = Kind::Constant;
  std::string name;
  std::vector<Term> args;  // non-empty only for Apply

  static Term constant(std::string n) { return {Kind::Constant, std::move(n), {}}; }
  static Term nonce(std::string n) { return {Kind::Nonce, std::move(n), {}}; }
  static Term variable(std::string n) { return {Kind::Variable, std::move(n), {}}; }
  static Term apply(std::string fn, std::vector<Term> a) {
    return {Kind::Apply, std::move(fn), std::move(a)};
  }

  friend bool operator==(const Term&, const Term&) = default;
  friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.name <=> b.name; c != 0) return c;
    return a.args <=> b.args;
  }
};

inline int term_size(const Term& t) {
  int n = 1;
  for (const auto& a : t.args) n += term_size(a);
  return n;
}

inline bool term_is_ground(const Term& t) {
  if (t.kind == Term::Kind::Variable) return false;
  for (const auto& a : t.args)
    if (!term_is_ground(a)) return false;
  return true;
}

inline std::string term_to_string(const Term& t) {
  std::string s = t.name;
  if (t.kind == Term::Kind::Apply) {
    s += '(';
    for (size_t i = 0; i < t.args.size(); ++i) {
      if (i) s += ',';
      s += term_to_string(t.args[i]);
    }
    s += ')';
  }
  return s;
}

// "n1", "n42", ... Plain "n" is an ordinary constant.
inline bool is_nonce_name(std::string_view s) {
  if (s.size() < 2 || s[0] != 'n') return false;
  for (size_t i = 1; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

struct Fact {
  std::string pred;
  std::vector<Term> args;

  friend bool operator==(const Fact&, const Fact&) = default;
  friend std::strong_ordering operator<=>(const Fact& a, const Fact& b) {
    if (auto c = a.pred <=> b.pred; c != 0) return c;
    return a.args <=> b.args;
  }
};

inline const std::string kTimePred = "Time";

inline bool is_time_fact(const Fact& f) { return f.pred == kTimePred; }

// Number of symbol occurrences: predicate, functions, constants, nonces and
// variables all count 1 each. Time has size 1.
inline int fact_size(const Fact& f) {
  int n = 1;
  for (const auto& a : f.args) n += term_size(a);
  return n;
}

inline bool fact_is_ground(const Fact& f) {
  for (const auto& a : f.args)
    if (!term_is_ground(a)) return false;
  return true;
}

inline std::string fact_to_string(const Fact& f) {
  std::string s = f.pred;
  if (!f.args.empty()) {
    s += '(';
    for (size_t i = 0; i < f.args.size(); ++i) {
      if (i) s += ',';
      s += term_to_string(f.args[i]);
    }
    s += ')';
  }
  return s;
}

template <typename Out>
void collect_variables(const Term& t, Out& out) {
  if (t.kind == Term::Kind::Variable) out.insert(t.name);
  for (const auto& a : t.args) collect_variables(a, out);
}

template <typename Out>
void collect_nonces(const Term& t, Out& out) {
  if (t.kind == Term::Kind::Nonce) out.insert(t.name);
  for (const auto& a : t.args) collect_nonces(a, out);
}

inline std::set<std::string> fact_variables(const Fact& f) {
  std::set<std::string> vs;
  for (const auto& a : f.args) collect_variables(a, vs);
  return vs;
}

inline std::set<std::string> fact_nonces(const Fact& f) {
  std::set<std::string> ns;
  for (const auto& a : f.args) collect_nonces(a, ns);
  return ns;
}

// Symbol table. J = predicate symbols (Time included once it is observed),
// E = function and constant symbols. Nonces are deliberately not part of the
// alphabet; the search-space bound accounts for them separately.
struct Alphabet {
  std::map<std::string, int> predicates;
  std::map<std::string, int> functions;

  int J() const { return static_cast<int>(predicates.size()); }
  int E() const { return static_cast<int>(functions.size()); }

  // Registers every symbol in f. Returns an error message on an arity clash
  // with an earlier observation, nullopt otherwise.
  std::optional<std::string> observe(const Fact& f) {
    if (auto e = record(predicates, f.pred, static_cast<int>(f.args.size()), "predicate")) return e;
    for (const auto& a : f.args)
      if (auto e = observe_term(a)) return e;
    return std::nullopt;
  }

  std::optional<std::string> observe_term(const Term& t) {
    if (t.kind == Term::Kind::Constant || t.kind == Term::Kind::Apply) {
      if (auto e = record(functions, t.name, static_cast<int>(t.args.size()), "symbol")) return e;
    }
    for (const auto& a : t.args)
      if (auto e = observe_term(a)) return e;
    return std::nullopt;
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  static std::optional<std::string> record(std::map<std::string, int>& table,
                                           const std::string& name, int arity,
                                           const char* what) {
    auto [it, inserted] = table.emplace(name, arity);
    if (!inserted && it->second != arity)
      return std::string(what) + " '" + name + "' used with arity " + std::to_string(arity) +
             " after arity " + std::to_string(it->second);
    return std::nullopt;
  }
};

// Bindings produced by matching: term variables to ground terms, time
// variables to rationals, and an injective nonce renaming used when a
// specification pattern is matched against a configuration.
struct Substitution {
  std::map<std::string, Term> terms;
  std::map<std::string, Rat> times;
  std::map<std::string, std::string> nonces;

  friend bool operator==(const Substitution&, const Substitution&) = default;
};

// When require_ground is set, an unbound variable is a caller bug and throws;
// matching uses the relaxed form while bindings are still being accumulated.
inline Term apply_substitution(const Term& t, const Substitution& s, bool require_ground = true) {
  switch (t.kind) {
    case Term::Kind::Variable: {
      auto it = s.terms.find(t.name);
      if (it != s.terms.end()) return it->second;
      if (require_ground)
        throw Error(Errc::UnboundVariable, "variable '" + t.name + "' has no binding");
      return t;
    }
    case Term::Kind::Nonce: {
      auto it = s.nonces.find(t.name);
      return it != s.nonces.end() ? Term::nonce(it->second) : t;
    }
    case Term::Kind::Constant:
      return t;
    case Term::Kind::Apply: {
      Term out = t;
      for (auto& a : out.args) a = apply_substitution(a, s, require_ground);
      return out;
    }
  }
  return t;  // unreachable
}

inline Fact apply_substitution(const Fact& f, const Substitution& s, bool require_ground = true) {
  Fact out = f;
  for (auto& a : out.args) a = apply_substitution(a, s, require_ground);
  return out;
}

// compose(a, b): applying the result equals applying a, then b.
inline Substitution compose(const Substitution& a, const Substitution& b) {
  Substitution out = b;
  for (const auto& [v, t] : a.terms) out.terms[v] = apply_substitution(t, b, false);
  for (const auto& [v, r] : a.times) out.times[v] = r;
  for (const auto& [n, m] : a.nonces) {
    auto it = b.nonces.find(m);
    out.nonces[n] = it != b.nonces.end() ? it->second : m;
  }
  return out;
}

}  // namespace tempora
