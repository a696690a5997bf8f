#pragma once

// Independent reference implementations the fast paths are tested against.
// Everything here favors obviousness over speed: exhaustive enumeration,
// direct definitions, no sharing of the library's matching or equivalence
// internals.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tempora/circle.hpp"
#include "tempora/match.hpp"
#include "tempora/reachability.hpp"
#include "tempora/semantics.hpp"

namespace oracle {

using namespace tempora;

struct BruteState {
  std::map<std::string, Term> terms;
  std::map<std::string, Rat> times;
  std::map<std::string, std::string> fwd, rev;  // injective nonce renaming
};

inline bool brute_unify_term(const Term& pat, const Term& g, BruteState& st, bool ren) {
  switch (pat.kind) {
    case Term::Kind::Variable: {
      auto it = st.terms.find(pat.name);
      if (it != st.terms.end()) return it->second == g;
      st.terms[pat.name] = g;
      return true;
    }
    case Term::Kind::Nonce: {
      if (!ren) return pat == g;
      if (g.kind != Term::Kind::Nonce) return false;
      auto f = st.fwd.find(pat.name);
      auto r = st.rev.find(g.name);
      if (f != st.fwd.end() || r != st.rev.end())
        return f != st.fwd.end() && f->second == g.name && r != st.rev.end() &&
               r->second == pat.name;
      st.fwd[pat.name] = g.name;
      st.rev[g.name] = pat.name;
      return true;
    }
    case Term::Kind::Constant:
      return g.kind == Term::Kind::Constant && g.name == pat.name;
    case Term::Kind::Apply: {
      if (g.kind != Term::Kind::Apply || g.name != pat.name || g.args.size() != pat.args.size())
        return false;
      for (size_t i = 0; i < pat.args.size(); ++i)
        if (!brute_unify_term(pat.args[i], g.args[i], st, ren)) return false;
      return true;
    }
  }
  return false;
}

inline bool brute_unify(const Pattern& pat, const TimestampedFact& tf, BruteState& st, bool ren) {
  if (pat.fact.pred != tf.fact.pred || pat.fact.args.size() != tf.fact.args.size()) return false;
  auto it = st.times.find(pat.time_var);
  if (it != st.times.end()) {
    if (it->second != tf.time) return false;
  } else {
    st.times[pat.time_var] = tf.time;
  }
  for (size_t i = 0; i < pat.fact.args.size(); ++i)
    if (!brute_unify_term(pat.fact.args[i], tf.fact.args[i], st, ren)) return false;
  return true;
}

inline void brute_match_rec(const std::vector<Pattern>& pats,
                            const std::vector<TimestampedFact>& target, size_t i,
                            std::vector<bool>& used, std::vector<size_t>& occ, BruteState st,
                            bool ren, std::vector<Match>& out) {
  if (i == pats.size()) {
    Substitution sub;
    sub.terms = st.terms;
    sub.times = st.times;
    sub.nonces = st.fwd;
    out.push_back({std::move(sub), occ});
    return;
  }
  for (size_t j = 0; j < target.size(); ++j) {
    if (used[j]) continue;
    BruteState copy = st;
    if (!brute_unify(pats[i], target[j], copy, ren)) continue;
    used[j] = true;
    occ.push_back(j);
    brute_match_rec(pats, target, i + 1, used, occ, std::move(copy), ren, out);
    occ.pop_back();
    used[j] = false;
  }
}

// Every injective assignment of patterns to target facts, by exhaustion.
inline std::vector<Match> brute_matches(const std::vector<Pattern>& pats,
                                        const std::vector<TimestampedFact>& target,
                                        bool rename_nonces = false) {
  std::vector<Match> out;
  std::vector<bool> used(target.size(), false);
  std::vector<size_t> occ;
  brute_match_rec(pats, target, 0, used, occ, {}, rename_nonces, out);
  return out;
}

// Order-independent fingerprint for comparing match sets across
// implementations.
inline std::vector<std::string> match_fingerprint(const std::vector<Match>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) {
    std::string s = "occ:";
    for (size_t j : m.occurrences) s += std::to_string(j) + ",";
    s += " times:";
    for (const auto& [v, t] : m.sub.times) s += v + "=" + format_rat(t) + ",";
    s += " terms:";
    for (const auto& [v, t] : m.sub.terms) s += v + "=" + term_to_string(t) + ",";
    s += " nonces:";
    for (const auto& [a, b] : m.sub.nonces) s += a + "->" + b + ",";
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Truncated difference class, recomputed from scratch: below the window,
// inside it (integer part plus integrality), or above it.
inline std::string brute_diff_class(const Rat& diff, long long d) {
  if (diff > Rat(d)) return "above";
  if (diff < Rat(-d)) return "below";
  BigInt fl = rat_floor(diff);
  return "in(" + fl.str() + "," + (is_integer(diff) ? "int" : "mid") + ")";
}

namespace detail {

inline std::vector<std::vector<const Fact*>> time_groups(const Configuration& s,
                                                         std::vector<Rat>& times) {
  std::vector<std::vector<const Fact*>> groups;
  for (const auto& tf : s.facts()) {
    if (!times.empty() && times.back() == tf.time) {
      groups.back().push_back(&tf.fact);
    } else {
      times.push_back(tf.time);
      groups.push_back({&tf.fact});
    }
  }
  return groups;
}

inline Term rename_term(const Term& t, const std::map<std::string, std::string>& ren) {
  Term out = t;
  if (out.kind == Term::Kind::Nonce) out.name = ren.at(out.name);
  for (auto& a : out.args) a = rename_term(a, ren);
  return out;
}

inline std::multiset<std::string> group_strings(const std::vector<const Fact*>& g,
                                                const std::map<std::string, std::string>* ren) {
  std::multiset<std::string> out;
  for (const Fact* f : g) {
    Fact copy = *f;
    if (ren)
      for (auto& a : copy.args) a = rename_term(a, *ren);
    out.insert(fact_to_string(copy));
  }
  return out;
}

}  // namespace detail

// Equivalence by the definition: equal sizes, aligned time groups with
// identical truncated differences, and one global injective nonce renaming
// mapping each group onto its partner. All renamings are enumerated.
inline bool brute_equivalent(const Configuration& s1, const Configuration& s2, long long d) {
  if (s1.size() != s2.size()) return false;
  auto a = s1.sorted_facts();
  auto b = s2.sorted_facts();
  Configuration c1(std::vector<TimestampedFact>(a.begin(), a.end()));
  Configuration c2(std::vector<TimestampedFact>(b.begin(), b.end()));
  std::vector<Rat> t1, t2;
  auto g1 = detail::time_groups(c1, t1);
  auto g2 = detail::time_groups(c2, t2);
  if (g1.size() != g2.size()) return false;
  for (size_t i = 0; i < g1.size(); ++i)
    if (g1[i].size() != g2[i].size()) return false;
  for (size_t i = 0; i < t1.size(); ++i)
    for (size_t j = 0; j < t1.size(); ++j)
      if (i != j && brute_diff_class(t1[i] - t1[j], d) != brute_diff_class(t2[i] - t2[j], d))
        return false;

  std::set<std::string> n1s, n2s;
  for (const auto& tf : c1.facts())
    for (const auto& n : fact_nonces(tf.fact)) n1s.insert(n);
  for (const auto& tf : c2.facts())
    for (const auto& n : fact_nonces(tf.fact)) n2s.insert(n);
  if (n1s.size() != n2s.size()) return false;
  std::vector<std::string> from(n1s.begin(), n1s.end()), to(n2s.begin(), n2s.end());
  std::sort(to.begin(), to.end());
  do {
    std::map<std::string, std::string> ren;
    for (size_t i = 0; i < from.size(); ++i) ren[from[i]] = to[i];
    bool ok = true;
    for (size_t i = 0; ok && i < g1.size(); ++i)
      if (detail::group_strings(g1[i], &ren) != detail::group_strings(g2[i], nullptr)) ok = false;
    if (ok) return true;
  } while (std::next_permutation(to.begin(), to.end()));
  return false;
}

// Event-driven search over concrete configurations, quotiented by
// equivalence: rule edges plus one tick edge onto the immediate-successor
// representative. Critical states are dead ends tested before the goal.
// Returns nullopt when the state budget is exhausted.
inline std::optional<bool> concrete_quotient_verdict(const Problem& p, size_t max_states = 50000) {
  // Cheap equivalence-invariant bucket key: group sizes, blinded untimed
  // facts per group, and all pairwise truncated differences.
  auto bucket_key = [&](const Configuration& s) {
    auto sorted = s.sorted_facts();
    Configuration c(std::vector<TimestampedFact>(sorted.begin(), sorted.end()));
    std::vector<Rat> times;
    auto groups = detail::time_groups(c, times);
    std::string key;
    for (size_t i = 0; i < groups.size(); ++i) {
      key += "[";
      std::multiset<std::string> fs;
      for (const Fact* f : groups[i]) fs.insert(tempora::detail::blind_fact(*f));
      for (const auto& s2 : fs) key += s2 + ";";
      key += "]";
      for (size_t j = 0; j < groups.size(); ++j)
        if (i != j) key += brute_diff_class(times[i] - times[j], p.dmax) + ",";
    }
    return key;
  };

  std::vector<Configuration> states;
  std::map<std::string, std::vector<size_t>> buckets;
  auto seen = [&](const Configuration& s) -> bool {
    for (size_t idx : buckets[bucket_key(s)])
      if (equivalent(states[idx], s, p.dmax)) return true;
    return false;
  };
  auto remember = [&](const Configuration& s) {
    buckets[bucket_key(s)].push_back(states.size());
    states.push_back(s);
  };

  NoncePool pool(NoncePool::Mode::Concrete, p.nonce_pool_capacity());
  std::vector<size_t> frontier;

  if (matches_spec(p.initial, p.critical)) return false;
  if (matches_spec(p.initial, p.goal)) return true;
  remember(p.initial);
  frontier.push_back(0);

  while (!frontier.empty()) {
    std::vector<size_t> nf;
    for (size_t idx : frontier) {
      Configuration s = states[idx];
      std::vector<Configuration> succs;
      for (const auto& r : p.rules)
        for (auto& inst : applicable_instances(r, s, pool)) succs.push_back(inst.result);
      succs.push_back(immediate_successor_reps(s, p.dmax).representative);
      for (auto& nxt : succs) {
        if (seen(nxt)) continue;
        if (states.size() >= max_states) return std::nullopt;
        bool crit = matches_spec(nxt, p.critical);
        bool goal = !crit && matches_spec(nxt, p.goal);
        remember(nxt);
        if (crit) continue;
        if (goal) return true;
        nf.push_back(states.size() - 1);
      }
    }
    frontier = std::move(nf);
  }
  return false;
}

// Direct interpolation of a tick: collect every point in (0, eps) where the
// truncated-difference profile can change, and test the configuration at
// each event and at each midpoint between consecutive sample points.
inline std::optional<Rat> tick_interpolation_critical(const Configuration& s, const Rat& eps,
                                                      const PairSpec& critical, long long d) {
  std::set<Rat> points;
  const Rat& now = s.time();
  for (size_t i = 0; i < s.size(); ++i) {
    if (i == s.time_index()) continue;
    for (long long n = -d; n <= d; ++n) {
      Rat x = s.facts()[i].time + Rat(n) - now;
      if (x > 0 && x < eps) points.insert(x);
    }
  }
  std::vector<Rat> samples;
  Rat prev = 0;
  for (const Rat& x : points) {
    samples.push_back(prev + (x - prev) / 2);
    samples.push_back(x);
    prev = x;
  }
  if (eps > prev) samples.push_back(prev + (eps - prev) / 2);
  for (const Rat& x : samples)
    if (x > 0 && x < eps && matches_spec(tick(s, x), critical)) return x;
  return std::nullopt;
}

}  // namespace oracle
