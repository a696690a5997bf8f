#pragma once

// Non-critical reachability over circle-configurations. The search graph's
// nodes are canonical keys; edges are the symbolic rule instances plus the
// single time-advancement step. Criticality is always tested before the
// goal, so a state matching both specifications is a dead end, never a
// witness. Two engines share the edge generator: a breadth-first search
// over a visited set (shortest symbolic traces), and iterative deepening
// that stores only the current path with the state-count bound as its
// depth ceiling.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "tempora/circle.hpp"
#include "tempora/error.hpp"
#include "tempora/semantics.hpp"

namespace tempora {

// Count of distinct circle-configurations over J predicate symbols, E
// constant/function symbols, m facts of size at most k, and the given
// horizon: J^m * (E + 2mk)^(mk) * m^m * (dmax + 2)^(m-1). Any longer
// non-critical trace necessarily repeats a state.
inline BigInt state_bound(long long J, long long E, long long m, long long k, long long dmax) {
  if (J < 0 || E < 0 || k < 0 || dmax < 0)
    throw Error(Errc::InvalidConfiguration, "state bound parameters must be non-negative");
  if (m < 1)
    throw Error(Errc::InvalidConfiguration, "state bound needs at least the Time fact (m >= 1)");
  using boost::multiprecision::pow;
  BigInt out = pow(BigInt(J), static_cast<unsigned>(m));
  out *= pow(BigInt(E) + 2 * m * k, static_cast<unsigned>(m * k));
  out *= pow(BigInt(m), static_cast<unsigned>(m));
  out *= pow(BigInt(dmax) + 2, static_cast<unsigned>(m - 1));
  return out;
}

inline BigInt state_bound(const Problem& p) {
  return state_bound(p.alphabet.J(), p.alphabet.E(), p.m(), p.k, p.dmax);
}

struct SymbolicStep {
  enum class Kind { Rule, Next };
  Kind kind = Kind::Next;
  std::string rule;  // Kind::Rule only
  Substitution sub;  // Kind::Rule only
  CircleConfiguration result;
};

struct SymbolicTrace {
  CircleConfiguration start;
  std::vector<SymbolicStep> steps;
};

struct Verdict {
  bool reachable = false;
  std::optional<SymbolicTrace> trace;
  unsigned long long states_visited = 0;
  BigInt bound;
};

enum class SearchMode { VisitedSet, DepthBounded };

struct SolveOptions {
  SearchMode mode = SearchMode::VisitedSet;
  int workers = 1;  // visited-set mode only; results are worker-count invariant
  // Hard ceiling on visited-set insertions / depth-mode node visits. The
  // search reports the overflow instead of silently truncating.
  unsigned long long max_states = 1'000'000;
};

namespace detail {

struct Edge {
  SymbolicStep::Kind kind;
  std::string rule;
  Substitution sub;
  CircleConfiguration cc;
  std::string key;
  bool critical = false;
  bool goal = false;
};

// Deterministic edge order: rules in declaration order, instances in match
// order, the Next step last.
inline std::vector<Edge> expand(const Problem& p, const CircleConfiguration& cc) {
  std::vector<Edge> out;
  NoncePool pool(NoncePool::Mode::Symbolic, p.nonce_pool_capacity());
  for (const auto& r : p.rules)
    for (auto& inst : apply_symbolic(r, cc, pool, p.k))
      out.push_back({SymbolicStep::Kind::Rule, r.name, std::move(inst.sub),
                     std::move(inst.result), "", false, false});
  out.push_back({SymbolicStep::Kind::Next, "", {}, next(cc), "", false, false});
  for (auto& e : out) {
    e.key = canonicalize(e.cc);
    e.critical = cc_matches_spec(e.cc, p.critical);
    e.goal = !e.critical && cc_matches_spec(e.cc, p.goal);
  }
  return out;
}

inline void check_solver_preconditions(const Problem& p) {
  for (const auto& r : p.rules)
    if (!r.balanced())
      throw Error(Errc::NotBalanced,
                  "rule '" + r.name + "' is unbalanced; the symbolic search would be incomplete");
  for (const auto* spec : {&p.critical, &p.goal})
    for (const auto& pair : spec->pairs)
      for (const auto& c : pair.constraints)
        if (c.offset > p.dmax || c.offset < -p.dmax)
          throw Error(Errc::OffsetExceedsDmax,
                      "specification constraint offset " + std::to_string(c.offset) +
                          " outside horizon " + std::to_string(p.dmax));
}

struct BfsNode {
  CircleConfiguration cc;
  long long parent = -1;
  SymbolicStep::Kind kind = SymbolicStep::Kind::Next;
  std::string rule;
  Substitution sub;
};

inline SymbolicTrace build_trace(const std::vector<BfsNode>& nodes, long long goal_index) {
  std::vector<long long> chain;
  for (long long i = goal_index; i >= 0; i = nodes[i].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  SymbolicTrace t;
  t.start = nodes[chain.front()].cc;
  for (size_t i = 1; i < chain.size(); ++i) {
    const BfsNode& n = nodes[chain[i]];
    t.steps.push_back({n.kind, n.rule, n.sub, n.cc});
  }
  return t;
}

inline Verdict solve_visited(const Problem& p, const SolveOptions& opts) {
  Verdict v;
  v.bound = state_bound(p);

  CircleConfiguration a0 = abstract(p.initial, p.dmax);
  std::vector<BfsNode> nodes;
  nodes.push_back({a0, -1, SymbolicStep::Kind::Next, "", {}});
  std::set<std::string> visited{canonicalize(a0)};

  if (cc_matches_spec(a0, p.critical)) {
    v.states_visited = 1;
    return v;  // the initial class is critical: nothing is reachable
  }
  if (cc_matches_spec(a0, p.goal)) {
    v.reachable = true;
    v.trace = SymbolicTrace{a0, {}};
    v.states_visited = 1;
    return v;
  }

  std::vector<long long> frontier{0};
  while (!frontier.empty()) {
    // Expansion is pure, so a layer can be chunked across workers; the
    // merge below runs sequentially in frontier order, which makes the
    // outcome identical for every worker count.
    std::vector<std::vector<Edge>> results(frontier.size());
    int workers = std::max(1, opts.workers);
    if (workers == 1 || frontier.size() == 1) {
      for (size_t i = 0; i < frontier.size(); ++i) results[i] = expand(p, nodes[frontier[i]].cc);
    } else {
      size_t chunk = (frontier.size() + workers - 1) / workers;
      std::vector<std::thread> threads;
      for (int w = 0; w < workers; ++w) {
        size_t lo = w * chunk, hi = std::min(frontier.size(), lo + chunk);
        if (lo >= hi) break;
        threads.emplace_back([&, lo, hi] {
          for (size_t i = lo; i < hi; ++i) results[i] = expand(p, nodes[frontier[i]].cc);
        });
      }
      for (auto& th : threads) th.join();
    }

    std::vector<long long> next_frontier;
    for (size_t i = 0; i < frontier.size(); ++i)
      for (auto& e : results[i]) {
        if (!visited.insert(e.key).second) continue;
        if (visited.size() > opts.max_states)
          throw Error(Errc::BoundOverflow,
                      "visited-state budget of " + std::to_string(opts.max_states) +
                          " exhausted before the search completed");
        nodes.push_back({std::move(e.cc), frontier[i], e.kind, std::move(e.rule),
                         std::move(e.sub)});
        long long idx = static_cast<long long>(nodes.size()) - 1;
        if (e.critical) continue;  // tested before goal: a dead end
        if (e.goal) {
          v.reachable = true;
          v.trace = build_trace(nodes, idx);
          v.states_visited = visited.size();
          return v;
        }
        next_frontier.push_back(idx);
      }
    frontier = std::move(next_frontier);
  }
  v.states_visited = visited.size();
  return v;
}

inline Verdict solve_depth(const Problem& p, const SolveOptions& opts) {
  Verdict v;
  v.bound = state_bound(p);

  CircleConfiguration a0 = abstract(p.initial, p.dmax);
  std::string key0 = canonicalize(a0);
  if (cc_matches_spec(a0, p.critical)) {
    v.states_visited = 1;
    return v;
  }
  if (cc_matches_spec(a0, p.goal)) {
    v.reachable = true;
    v.trace = SymbolicTrace{a0, {}};
    v.states_visited = 1;
    return v;
  }

  struct Frame {
    CircleConfiguration cc;
    std::string key;
    std::vector<Edge> edges;
    size_t next_edge = 0;
    SymbolicStep::Kind kind = SymbolicStep::Kind::Next;
    std::string rule;
    Substitution sub;
  };

  unsigned long long budget = opts.max_states;
  unsigned long long visits = 0;
  unsigned long long peak_path = 1;
  // Any non-critical trace visiting only distinct states is shorter than
  // the state bound, and the on-path check below prunes repeats, so no
  // deeper path needs exploring.
  BigInt cap = v.bound;

  for (BigInt limit = 1;; limit = limit * 2 > cap ? cap : limit * 2) {
    bool cutoff = false;
    std::vector<Frame> stack;
    std::set<std::string> on_path;

    stack.push_back({a0, key0, expand(p, a0), 0, SymbolicStep::Kind::Next, "", {}});
    on_path.insert(key0);
    ++visits;

    while (!stack.empty()) {
      Frame& top = stack.back();
      if (top.next_edge >= top.edges.size()) {
        on_path.erase(top.key);
        stack.pop_back();
        continue;
      }
      Edge& e = top.edges[top.next_edge++];
      if (e.critical) continue;
      if (e.goal) {
        SymbolicTrace t;
        t.start = a0;
        for (size_t i = 1; i < stack.size(); ++i)
          t.steps.push_back({stack[i].kind, stack[i].rule, stack[i].sub, stack[i].cc});
        t.steps.push_back({e.kind, e.rule, e.sub, e.cc});
        v.reachable = true;
        v.trace = std::move(t);
        v.states_visited = std::max<unsigned long long>(peak_path, stack.size() + 1);
        return v;
      }
      if (on_path.count(e.key)) continue;  // a loop cannot help reachability
      if (BigInt(stack.size()) >= limit) {
        cutoff = true;
        continue;
      }
      if (++visits > budget)
        throw Error(Errc::BoundOverflow,
                    "depth-search visit budget of " + std::to_string(budget) +
                        " exhausted before the search completed");
      Frame f;
      f.cc = e.cc;
      f.key = e.key;
      f.kind = e.kind;
      f.rule = e.rule;
      f.sub = e.sub;
      f.edges = expand(p, f.cc);
      on_path.insert(f.key);
      stack.push_back(std::move(f));
      peak_path = std::max<unsigned long long>(peak_path, stack.size());
    }

    if (!cutoff || limit >= cap) {
      v.states_visited = peak_path;
      return v;  // the whole pruned tree fits under the limit: definitive
    }
  }
}

}  // namespace detail

inline Verdict solve(const Problem& p, const SolveOptions& opts = {}) {
  detail::check_solver_preconditions(p);
  return opts.mode == SearchMode::VisitedSet ? detail::solve_visited(p, opts)
                                             : detail::solve_depth(p, opts);
}

// Concrete witness traces: a start configuration and tick / rule steps.
struct ConcreteStep {
  enum class Kind { Tick, Rule };
  Kind kind = Kind::Tick;
  Rat epsilon;       // Kind::Tick
  std::string rule;  // Kind::Rule
  Substitution sub;  // Kind::Rule
};

struct ConcreteTrace {
  Configuration start;
  std::vector<ConcreteStep> steps;
};

namespace detail {

// The exact advance that realizes one structural move of the clock's
// fraction, mirroring the case analysis of a single advancement step on s's
// actual fractional values.
inline Rat single_hop_epsilon(const Configuration& s) {
  Rat fr = frac_part(s.time());
  std::optional<Rat> higher;  // least other-fact fraction strictly above fr
  int sharing = 0;
  bool any_other = false;
  for (size_t i = 0; i < s.facts().size(); ++i) {
    if (i == s.time_index()) continue;
    any_other = true;
    Rat f = frac_part(s.facts()[i].time);
    if (f == fr) ++sharing;
    if (f > fr && (!higher || f < *higher)) higher = f;
  }
  if (fr == 0) {
    if (!any_other) return Rat(1);       // clock-only: class never changes
    if (higher) return *higher / 2;      // into the region before the first class
    return Rat(1, 2);                    // all fractions zero: mid-turn
  }
  if (sharing > 0) {
    // Leaves its classmates: land mid-region.
    if (higher) return (*higher - fr) / 2;
    return (1 - fr) / 2;
  }
  if (higher) return *higher - fr;  // alone: merge exactly onto the next class
  return 1 - fr;                    // alone on top: wrap onto the next integer
}

// The exact advance that moves s into the class of next(abstract(s)).
// next() fuses structural moves that leave the equivalence class unchanged,
// so the mirror accumulates single hops under the same stopping rule: one
// hop when the clock sits in one of the two sanctioned self-loop shapes,
// otherwise hop until the class changes, with the same iteration cap and
// first-hop fallback for orbits whose class never changes.
inline Rat next_hop_epsilon(const Configuration& s, long long d) {
  Rat first = single_hop_epsilon(s);
  Rat fr = frac_part(s.time());
  bool share = false, zero = false, above = false;
  for (size_t i = 0; i < s.facts().size(); ++i) {
    if (i == s.time_index()) continue;
    Rat f = frac_part(s.facts()[i].time);
    if (f == fr) share = true;
    if (f == 0) zero = true;
    if (f > fr) above = true;
  }
  bool sanctioned = fr == 0 ? !share : (!share && !above && !zero);
  if (sanctioned) return first;
  Rat total = first;
  Configuration cur = tick(s, first);
  int cap = 2 * static_cast<int>(s.size()) + 8;
  for (int i = 0; i < cap; ++i) {
    if (!equivalent(cur, s, d)) return total;
    Rat hop = single_hop_epsilon(cur);
    cur = tick(cur, hop);
    total += hop;
  }
  return first;
}

inline const Rule& rule_by_name(const Problem& p, const std::string& name) {
  for (const auto& r : p.rules)
    if (r.name == name) return r;
  throw Error(Errc::ReplayMismatch, "trace names unknown rule '" + name + "'");
}

}  // namespace detail

// Rational-time witness: replays the symbolic trace on concrete
// configurations, charging each maximal run of Next steps as one tick whose
// epsilon is accumulated hop by hop. Abstracting every intermediate state
// of the result reproduces the symbolic node sequence; any divergence is an
// engine bug surfaced as ReplayMismatch.
inline ConcreteTrace concretize_trace(const SymbolicTrace& t, const Problem& p) {
  ConcreteTrace out;
  out.start = concretize(t.start);
  Configuration s = out.start;
  NoncePool pool(NoncePool::Mode::Concrete, p.nonce_pool_capacity());

  for (size_t i = 0; i < t.steps.size(); ++i) {
    const auto& step = t.steps[i];
    if (step.kind == SymbolicStep::Kind::Next) {
      Rat total = 0;
      Rat hop = detail::next_hop_epsilon(s, p.dmax);
      s = tick(s, hop);
      total += hop;
      if (canonicalize(abstract(s, p.dmax)) != canonicalize(step.result))
        throw Error(Errc::ReplayMismatch,
                    "time advancement diverged from the symbolic trace at step " +
                        std::to_string(i));
      // Extend the tick while the trace keeps advancing time.
      while (i + 1 < t.steps.size() && t.steps[i + 1].kind == SymbolicStep::Kind::Next) {
        ++i;
        hop = detail::next_hop_epsilon(s, p.dmax);
        s = tick(s, hop);
        total += hop;
        if (canonicalize(abstract(s, p.dmax)) != canonicalize(t.steps[i].result))
          throw Error(Errc::ReplayMismatch,
                      "time advancement diverged from the symbolic trace at step " +
                          std::to_string(i));
      }
      ConcreteStep cs;
      cs.kind = ConcreteStep::Kind::Tick;
      cs.epsilon = total;
      out.steps.push_back(std::move(cs));
      continue;
    }
    const Rule& r = detail::rule_by_name(p, step.rule);
    std::string target = canonicalize(step.result);
    bool found = false;
    for (auto& inst : applicable_instances(r, s, pool)) {
      if (canonicalize(abstract(inst.result, p.dmax)) != target) continue;
      ConcreteStep cs;
      cs.kind = ConcreteStep::Kind::Rule;
      cs.rule = r.name;
      cs.sub = inst.sub;
      out.steps.push_back(std::move(cs));
      s = std::move(inst.result);
      found = true;
      break;
    }
    if (!found)
      throw Error(Errc::ReplayMismatch, "rule '" + step.rule +
                                            "' has no concrete instance matching the symbolic "
                                            "result at step " +
                                            std::to_string(i));
  }
  return out;
}

// Bounded-depth exploration of the concrete transition system, for problems
// the symbolic engine refuses (unbalanced rules). Tick edges advance to
// immediate-successor representatives; states are deduplicated by the
// canonical key of their abstraction, a sound over-approximation of
// equivalence. Incomplete by construction: exhausting the depth proves
// nothing about unreachability.
struct ConcreteSearchVerdict {
  bool found = false;
  std::optional<ConcreteTrace> trace;
  unsigned long long states_visited = 0;
};

inline ConcreteSearchVerdict solve_concrete_depth(const Problem& p, unsigned long long depth,
                                                  unsigned long long max_states = 1'000'000) {
  struct Node {
    Configuration s;
    long long parent;
    ConcreteStep step;  // edge that produced this node; unused at the root
  };
  ConcreteSearchVerdict v;
  auto build = [&](const std::vector<Node>& nodes, long long i) {
    std::vector<ConcreteStep> steps;
    for (; nodes[i].parent >= 0; i = nodes[i].parent) steps.push_back(nodes[i].step);
    std::reverse(steps.begin(), steps.end());
    return ConcreteTrace{nodes[0].s, std::move(steps)};
  };

  std::vector<Node> nodes;
  std::set<std::string> seen;
  if (matches_spec(p.initial, p.critical)) {
    v.states_visited = 1;
    return v;
  }
  nodes.push_back({p.initial, -1, {}});
  seen.insert(canonicalize(abstract(p.initial, p.dmax)));
  if (matches_spec(p.initial, p.goal)) {
    v.found = true;
    v.trace = ConcreteTrace{p.initial, {}};
    v.states_visited = 1;
    return v;
  }

  NoncePool pool(NoncePool::Mode::Concrete, p.nonce_pool_capacity());
  std::vector<long long> frontier{0};
  for (unsigned long long layer = 0; layer < depth && !frontier.empty(); ++layer) {
    std::vector<long long> nf;
    for (long long idx : frontier) {
      Configuration s = nodes[idx].s;
      std::vector<std::pair<Configuration, ConcreteStep>> succs;
      for (const auto& r : p.rules)
        for (auto& inst : applicable_instances(r, s, pool)) {
          ConcreteStep cs;
          cs.kind = ConcreteStep::Kind::Rule;
          cs.rule = r.name;
          cs.sub = inst.sub;
          succs.emplace_back(std::move(inst.result), std::move(cs));
        }
      SuccessorStep is = immediate_successor_reps(s, p.dmax);
      ConcreteStep ts;
      ts.kind = ConcreteStep::Kind::Tick;
      ts.epsilon = is.advance;
      succs.emplace_back(std::move(is.representative), std::move(ts));
      for (auto& [nxt, cs] : succs) {
        if (!seen.insert(canonicalize(abstract(nxt, p.dmax))).second) continue;
        if (seen.size() > max_states)
          throw Error(Errc::BoundOverflow,
                      "concrete search budget of " + std::to_string(max_states) + " exhausted");
        bool crit = matches_spec(nxt, p.critical);
        bool goal = !crit && matches_spec(nxt, p.goal);
        nodes.push_back({std::move(nxt), idx, std::move(cs)});
        if (crit) continue;
        if (goal) {
          v.found = true;
          v.trace = build(nodes, static_cast<long long>(nodes.size()) - 1);
          v.states_visited = seen.size();
          return v;
        }
        nf.push_back(static_cast<long long>(nodes.size()) - 1);
      }
    }
    frontier = std::move(nf);
  }
  v.states_visited = seen.size();
  return v;
}

struct TraceViolation {
  size_t step = 0;  // 0 = the start configuration, n = after the n-th step
  std::string message;
  std::optional<std::string> state_key;  // interpolated critical class, if any
};

struct ValidationReport {
  bool valid = true;
  std::optional<TraceViolation> violation;
};

namespace detail {

inline std::optional<std::string> check_rule_step(const Rule& r, const Substitution& sub,
                                                  Configuration& s) {
  for (const auto& pat : r.pre)
    if (!sub.times.count(pat.time_var))
      return "substitution misses time variable '" + pat.time_var + "'";
  for (const auto& c : r.guard)
    if (!eval_constraint(c, sub)) return "guard " + constraint_to_string(c) + " is violated";

  // Existential images must be distinct nonces unseen in the configuration.
  std::set<std::string> live = s.nonce_names();
  std::set<std::string> minted;
  for (const auto& x : r.existentials) {
    auto it = sub.terms.find(x);
    if (it == sub.terms.end() || it->second.kind != Term::Kind::Nonce)
      return "existential '" + x + "' is not bound to a nonce";
    if (live.count(it->second.name) || !minted.insert(it->second.name).second)
      return "nonce " + it->second.name + " is not fresh";
  }

  std::vector<TimestampedFact> needed;
  for (const auto& pat : r.pre) {
    Fact f;
    try {
      f = apply_substitution(pat.fact, sub);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    needed.push_back({std::move(f), sub.times.at(pat.time_var)});
  }
  std::vector<bool> used(s.size(), false);
  std::vector<size_t> picked(needed.size());
  for (size_t i = 0; i < needed.size(); ++i) {
    bool ok = false;
    for (size_t j = 0; j < s.size(); ++j)
      if (!used[j] && s.facts()[j].fact == needed[i].fact &&
          s.facts()[j].time == needed[i].time) {
        used[j] = true;
        picked[i] = j;
        ok = true;
        break;
      }
    if (!ok)
      return "pre-condition fact " + timestamped_to_string(needed[i]) +
             " is not in the configuration";
  }

  std::vector<bool> removed(s.size(), false);
  for (size_t pi : r.consumed) removed[picked[pi]] = true;
  std::vector<TimestampedFact> facts;
  for (size_t j = 0; j < s.size(); ++j)
    if (!removed[j]) facts.push_back(s.facts()[j]);
  const Rat& now = sub.times.at(r.time_var);
  for (const auto& cr : r.created) {
    Fact f;
    try {
      f = apply_substitution(cr.fact, sub);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    facts.push_back({std::move(f), now + Rat(cr.delay)});
  }
  s = Configuration(std::move(facts));
  return std::nullopt;
}

}  // namespace detail

// Replays the trace and enforces the non-criticality required of witnesses:
// every explicit configuration is tested against the critical spec, and
// every tick is expanded into the chain of classes it passes through, by
// iterating next() from the pre-tick abstraction until a class equivalent
// to the post-tick configuration is reached. Stopping at the first match is
// enough: fact-to-clock offsets only shrink as time advances, so the chain
// never revisits a class it has left.
inline ValidationReport validate_concrete_trace(const ConcreteTrace& t, const Problem& p,
                                                bool check_goal = true) {
  ValidationReport rep;
  auto fail = [&](size_t step, std::string msg, std::optional<std::string> key = std::nullopt) {
    rep.valid = false;
    rep.violation = TraceViolation{step, std::move(msg), std::move(key)};
    return rep;
  };

  Configuration s = t.start;
  if (matches_spec(s, p.critical)) return fail(0, "the start configuration is critical");

  BigInt budget = state_bound(p);
  for (size_t i = 0; i < t.steps.size(); ++i) {
    const auto& step = t.steps[i];
    if (step.kind == ConcreteStep::Kind::Tick) {
      if (step.epsilon < 0) return fail(i + 1, "negative tick");
      Configuration before = s;
      s = tick(s, step.epsilon);
      // Only a tick that leaves its class has an interior to walk; the
      // endpoint itself is tested below like any other step result.
      if (!equivalent(before, s, p.dmax)) {
        CircleConfiguration cur = abstract(before, p.dmax);
        std::set<std::string> seen{canonicalize(cur)};
        BigInt hops = 0;
        while (true) {
          cur = next(cur);
          if (equivalent(concretize(cur), s, p.dmax)) break;
          std::string key = canonicalize(cur);
          if (!seen.insert(key).second)
            throw Error(Errc::NonTerminatingExpansion,
                        "tick expansion cycled without reaching the target class; the "
                        "configuration lies outside the solver-reachable region");
          if (++hops > budget)
            throw Error(Errc::NonTerminatingExpansion,
                        "tick expansion exceeded the state-bound budget");
          if (cc_matches_spec(cur, p.critical))
            return fail(i + 1, "tick passes through a critical class", key);
        }
      }
    } else {
      const Rule& r = detail::rule_by_name(p, step.rule);
      if (auto msg = detail::check_rule_step(r, step.sub, s))
        return fail(i + 1, "rule '" + step.rule + "': " + *msg);
    }
    if (matches_spec(s, p.critical))
      return fail(i + 1, "the configuration after this step is critical");
  }
  if (check_goal && !matches_spec(s, p.goal))
    return fail(t.steps.size(), "the final configuration does not match the goal");
  return rep;
}

}  // namespace tempora
