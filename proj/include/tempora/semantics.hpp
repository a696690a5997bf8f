#pragma once

// Concrete semantics: configurations with one global clock fact, guarded
// instantaneous rules, time advancement, equivalence up to an integer
// horizon, and the event machinery (constraint profiles and immediate
// successors) that drives both trace validation and the search oracles.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tempora/error.hpp"
#include "tempora/match.hpp"
#include "tempora/rational.hpp"
#include "tempora/term.hpp"

namespace tempora {

enum class Rel { Gt, Ge, Eq };

inline const char* rel_text(Rel r) {
  switch (r) {
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
    case Rel::Eq: return "=";
  }
  return "?";
}

// left REL right + offset, both sides time variables, offset a signed
// integer whose magnitude is bounded by the problem horizon.
struct Constraint {
  std::string left;
  Rel rel;
  std::string right;
  long long offset = 0;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

inline std::string constraint_to_string(const Constraint& c) {
  std::string s = c.left + " " + rel_text(c.rel) + " " + c.right;
  if (c.offset > 0) s += " + " + std::to_string(c.offset);
  if (c.offset < 0) s += " - " + std::to_string(-c.offset);
  return s;
}

inline bool eval_constraint(const Constraint& c, const Substitution& sub) {
  auto lookup = [&](const std::string& v) -> const Rat& {
    auto it = sub.times.find(v);
    if (it == sub.times.end())
      throw Error(Errc::UnboundVariable, "time variable '" + v + "' has no binding");
    return it->second;
  };
  const Rat& l = lookup(c.left);
  Rat r = lookup(c.right) + Rat(c.offset);
  switch (c.rel) {
    case Rel::Gt: return l > r;
    case Rel::Ge: return l >= r;
    case Rel::Eq: return l == r;
  }
  return false;
}

// A multiset of ground timestamped facts containing exactly one Time fact.
// Facts are sorted once at construction; tick() deliberately preserves the
// stored order so that positions stay aligned across a tick, which is what
// constraint-profile comparisons rely on. Semantic equality is multiset
// equality, independent of storage order.
class Configuration {
 public:
  Configuration() = default;

  explicit Configuration(std::vector<TimestampedFact> facts) : facts_(std::move(facts)) {
    std::sort(facts_.begin(), facts_.end(), [](const TimestampedFact& a, const TimestampedFact& b) {
      if (a.time != b.time) return a.time < b.time;
      return a.fact < b.fact;
    });
    int time_count = 0;
    for (size_t i = 0; i < facts_.size(); ++i) {
      const auto& tf = facts_[i];
      if (!fact_is_ground(tf.fact))
        throw Error(Errc::InvalidConfiguration, "non-ground fact " + fact_to_string(tf.fact));
      if (tf.time < 0)
        throw Error(Errc::InvalidConfiguration, "negative timestamp on " + fact_to_string(tf.fact));
      if (is_time_fact(tf.fact)) {
        ++time_count;
        time_index_ = i;
      }
    }
    if (time_count != 1)
      throw Error(Errc::InvalidConfiguration,
                  "expected exactly one Time fact, found " + std::to_string(time_count));
  }

  const std::vector<TimestampedFact>& facts() const { return facts_; }
  size_t size() const { return facts_.size(); }
  size_t time_index() const { return time_index_; }
  const Rat& time() const { return facts_[time_index_].time; }

  std::set<std::string> nonce_names() const {
    std::set<std::string> out;
    for (const auto& tf : facts_)
      for (const auto& a : tf.fact.args) collect_nonces(a, out);
    return out;
  }

  std::vector<TimestampedFact> sorted_facts() const {
    auto copy = facts_;
    std::sort(copy.begin(), copy.end(), [](const TimestampedFact& a, const TimestampedFact& b) {
      if (a.time != b.time) return a.time < b.time;
      return a.fact < b.fact;
    });
    return copy;
  }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.sorted_facts() == b.sorted_facts();
  }

 private:
  friend Configuration tick(const Configuration&, const Rat&);
  std::vector<TimestampedFact> facts_;
  size_t time_index_ = 0;
};

inline std::string configuration_to_string(const Configuration& s) {
  std::string out = "{";
  auto facts = s.sorted_facts();
  for (size_t i = 0; i < facts.size(); ++i) {
    if (i) out += ", ";
    out += timestamped_to_string(facts[i]);
  }
  out += "}";
  return out;
}

// Only the clock moves; every other timestamp is frozen at creation.
inline Configuration tick(const Configuration& s, const Rat& epsilon) {
  if (epsilon < 0) throw Error(Errc::NegativeEpsilon, "tick by " + format_rat(epsilon));
  Configuration out = s;
  out.facts_[out.time_index_].time += epsilon;
  return out;
}

// Diagnostic classification relative to the clock.
enum class TimePosition { Past, Present, Future };

inline TimePosition time_position(const Configuration& s, size_t index) {
  const Rat& t = s.facts()[index].time;
  if (t < s.time()) return TimePosition::Past;
  if (t > s.time()) return TimePosition::Future;
  return TimePosition::Present;
}

// Instantaneous rule: consumes some of the matched pre-condition facts,
// keeps the rest (Time and the persistent facts), and creates new facts
// whose timestamps sit `delay` whole units after the current time.
// Existential variables are instantiated with fresh nonces on application.
struct Rule {
  struct Created {
    Fact fact;
    long long delay = 0;  // natural

    friend bool operator==(const Created&, const Created&) = default;
  };

  std::string name;
  std::string time_var;               // the variable of the Time@T pattern
  std::vector<Pattern> pre;           // includes Time@time_var exactly once
  std::vector<size_t> consumed;       // indices into pre; never the Time pattern
  std::vector<Constraint> guard;
  std::vector<std::string> existentials;
  std::vector<Created> created;

  bool balanced() const { return consumed.size() == created.size(); }

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleInstance {
  Substitution sub;
  Configuration result;
};

// Every way r fires on s, in deterministic match order. Pattern nonces are
// taken literally here; rules are validated not to contain any.
inline std::vector<RuleInstance> applicable_instances(const Rule& r, const Configuration& s,
                                                      NoncePool& pool) {
  std::vector<RuleInstance> out;
  auto matches = match_multiset(r.pre, s.facts(), /*rename_nonces=*/false);
  for (auto& m : matches) {
    bool ok = true;
    for (const auto& c : r.guard)
      if (!eval_constraint(c, m.sub)) {
        ok = false;
        break;
      }
    if (!ok) continue;

    Substitution sub = m.sub;
    if (!r.existentials.empty()) {
      auto names = pool.fresh(s.nonce_names(), static_cast<int>(r.existentials.size()));
      for (size_t i = 0; i < r.existentials.size(); ++i)
        sub.terms[r.existentials[i]] = Term::nonce(names[i]);
    }

    std::vector<bool> removed(s.size(), false);
    for (size_t pi : r.consumed) removed[m.occurrences[pi]] = true;
    std::vector<TimestampedFact> facts;
    facts.reserve(s.size());
    for (size_t j = 0; j < s.size(); ++j)
      if (!removed[j]) facts.push_back(s.facts()[j]);

    const Rat& now = sub.times.at(r.time_var);
    for (const auto& c : r.created)
      facts.push_back({apply_substitution(c.fact, sub), now + Rat(c.delay)});

    out.push_back({std::move(sub), Configuration(std::move(facts))});
  }
  return out;
}

// Critical and goal specifications: a configuration matches when some pair
// embeds into it. Pattern nonces may be renamed injectively here.
struct SpecPair {
  std::vector<Pattern> patterns;
  std::vector<Constraint> constraints;

  friend bool operator==(const SpecPair&, const SpecPair&) = default;
};

struct PairSpec {
  std::vector<SpecPair> pairs;

  friend bool operator==(const PairSpec&, const PairSpec&) = default;
};

struct SpecMatch {
  size_t pair_index;
  Match match;
};

inline std::optional<SpecMatch> find_spec_match(const Configuration& s, const PairSpec& spec) {
  for (size_t i = 0; i < spec.pairs.size(); ++i) {
    const auto& pair = spec.pairs[i];
    for (auto& m : match_multiset(pair.patterns, s.facts(), /*rename_nonces=*/true)) {
      bool ok = true;
      for (const auto& c : pair.constraints)
        if (!eval_constraint(c, m.sub)) {
          ok = false;
          break;
        }
      if (ok) return SpecMatch{i, std::move(m)};
    }
  }
  return std::nullopt;
}

inline bool matches_spec(const Configuration& s, const PairSpec& spec) {
  return find_spec_match(s, spec).has_value();
}

// A reachability problem. `k` bounds fact sizes, `dmax` is the integer
// horizon beyond which timestamp differences are indistinguishable.
struct Problem {
  Alphabet alphabet;
  std::vector<Rule> rules;
  Configuration initial;
  PairSpec critical;
  PairSpec goal;
  int k = 1;
  long long dmax = 2;

  int m() const { return static_cast<int>(initial.size()); }
  int nonce_pool_capacity() const { return 2 * m() * k; }

  friend bool operator==(const Problem&, const Problem&) = default;
};

// Smallest natural strictly greater than n + 1 for every number n occurring
// in the problem. The horizon must exceed every reachable constraint test.
inline long long dmax_from_numbers(const std::vector<Rat>& numbers) {
  Rat n_max = 0;
  for (const auto& r : numbers)
    if (r > n_max) n_max = r;
  return static_cast<long long>(rat_floor(n_max + 1)) + 1;
}

inline long long compute_dmax(const Problem& p) {
  std::vector<Rat> numbers;
  for (const auto& tf : p.initial.facts()) numbers.push_back(tf.time);
  auto add_constraints = [&](const std::vector<Constraint>& cs) {
    for (const auto& c : cs) numbers.push_back(Rat(c.offset < 0 ? -c.offset : c.offset));
  };
  for (const auto& r : p.rules) {
    add_constraints(r.guard);
    for (const auto& c : r.created) numbers.push_back(Rat(c.delay));
  }
  for (const auto& pair : p.critical.pairs) add_constraints(pair.constraints);
  for (const auto& pair : p.goal.pairs) add_constraints(pair.constraints);
  return dmax_from_numbers(numbers);
}

namespace detail {

// Exact encoding of how a timestamp difference relates to every integer
// offset within the horizon: clamped to (-inf, in-range, +inf), and in range
// the floor plus whether the difference is a whole number. Two differences
// with equal encodings satisfy exactly the same horizon constraints.
struct DiffClass {
  int clamp = 0;  // -1: below -d, 0: in [-d, d], +1: above d
  BigInt floor_ = 0;
  bool integral = false;

  friend bool operator==(const DiffClass&, const DiffClass&) = default;
};

inline DiffClass classify_diff(const Rat& diff, long long d) {
  if (diff > d) return {+1, 0, false};
  if (diff < -d) return {-1, 0, false};
  return {0, rat_floor(diff), is_integer(diff)};
}

inline bool diff_satisfies(const DiffClass& dc, Rel rel, long long offset) {
  switch (rel) {
    case Rel::Gt:
      if (dc.clamp != 0) return dc.clamp > 0;
      return dc.floor_ > offset || (dc.floor_ == offset && !dc.integral);
    case Rel::Eq:
      return dc.clamp == 0 && dc.integral && dc.floor_ == offset;
    case Rel::Ge:
      return diff_satisfies(dc, Rel::Gt, offset) || diff_satisfies(dc, Rel::Eq, offset);
  }
  return false;
}

}  // namespace detail

// The set of horizon constraints a configuration satisfies, indexed by
// ordered pairs of storage positions. Profiles of s and tick(s, e) are
// positionally comparable because tick preserves storage order; profiles of
// unrelated configurations are comparable only given an agreed alignment.
class ConstraintProfile {
 public:
  ConstraintProfile() = default;

  ConstraintProfile(const Configuration& s, long long d) : d_(d), n_(s.size()) {
    entries_.reserve(n_ * n_);
    for (size_t i = 0; i < n_; ++i)
      for (size_t j = 0; j < n_; ++j)
        entries_.push_back(detail::classify_diff(s.facts()[i].time - s.facts()[j].time, d));
  }

  long long horizon() const { return d_; }

  // Does "t_i REL t_j + offset" hold?
  bool satisfies(size_t i, size_t j, Rel rel, long long offset) const {
    if (offset > d_ || offset < -d_)
      throw Error(Errc::OffsetExceedsDmax,
                  "offset " + std::to_string(offset) + " outside horizon " + std::to_string(d_));
    return detail::diff_satisfies(entries_[i * n_ + j], rel, offset);
  }

  friend bool operator==(const ConstraintProfile&, const ConstraintProfile&) = default;

 private:
  long long d_ = 0;
  size_t n_ = 0;
  std::vector<detail::DiffClass> entries_;
};

inline ConstraintProfile constraint_profile(const Configuration& s, long long d) {
  return ConstraintProfile(s, d);
}

// Equivalence up to the horizon: same fact multiset shape after some global
// nonce renaming, with timestamp sequences satisfying exactly the same
// horizon constraints. Facts are paired within equal-timestamp groups; the
// pairing inside a group is found by search rather than by a fixed textual
// order, because an order that reads nonce names would not be invariant
// under renaming.
namespace detail {

inline bool unify_nonces(const Term& a, const Term& b, std::map<std::string, std::string>& fwd,
                         std::set<std::string>& images) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  if (a.kind == Term::Kind::Nonce) {
    auto it = fwd.find(a.name);
    if (it != fwd.end()) return it->second == b.name;
    if (images.count(b.name)) return false;
    fwd.emplace(a.name, b.name);
    images.insert(b.name);
    return true;
  }
  if (a.name != b.name) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!unify_nonces(a.args[i], b.args[i], fwd, images)) return false;
  return true;
}

inline bool unify_nonces(const Fact& a, const Fact& b, std::map<std::string, std::string>& fwd,
                         std::set<std::string>& images) {
  if (a.pred != b.pred || a.args.size() != b.args.size()) return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!unify_nonces(a.args[i], b.args[i], fwd, images)) return false;
  return true;
}

// Backtracking search for a single global bijection aligning each group of
// left facts with the group of right facts at the same position.
inline bool align_groups(const std::vector<std::vector<const Fact*>>& left,
                         const std::vector<std::vector<const Fact*>>& right, size_t gi, size_t fi,
                         std::vector<std::vector<bool>>& taken,
                         std::map<std::string, std::string>& fwd, std::set<std::string>& images) {
  if (gi == left.size()) return true;
  if (fi == left[gi].size()) return align_groups(left, right, gi + 1, 0, taken, fwd, images);
  for (size_t j = 0; j < right[gi].size(); ++j) {
    if (taken[gi][j]) continue;
    auto saved_fwd = fwd;
    auto saved_images = images;
    if (unify_nonces(*left[gi][fi], *right[gi][j], fwd, images)) {
      taken[gi][j] = true;
      if (align_groups(left, right, gi, fi + 1, taken, fwd, images)) return true;
      taken[gi][j] = false;
    }
    fwd = std::move(saved_fwd);
    images = std::move(saved_images);
  }
  return false;
}

}  // namespace detail

inline bool equivalent(const Configuration& s1, const Configuration& s2, long long dmax) {
  if (s1.size() != s2.size()) return false;
  auto f1 = s1.sorted_facts();
  auto f2 = s2.sorted_facts();

  // Group by equal timestamps; the grouping pattern itself is part of the
  // constraint agreement (offset-zero equalities), checked structurally here.
  auto group = [](const std::vector<TimestampedFact>& fs) {
    std::vector<std::pair<Rat, std::vector<const Fact*>>> gs;
    for (const auto& tf : fs) {
      if (gs.empty() || gs.back().first != tf.time) gs.push_back({tf.time, {}});
      gs.back().second.push_back(&tf.fact);
    }
    return gs;
  };
  auto g1 = group(f1);
  auto g2 = group(f2);
  if (g1.size() != g2.size()) return false;
  for (size_t i = 0; i < g1.size(); ++i)
    if (g1[i].second.size() != g2[i].second.size()) return false;

  for (size_t i = 0; i < g1.size(); ++i)
    for (size_t j = 0; j < g1.size(); ++j) {
      if (i == j) continue;
      if (detail::classify_diff(g1[i].first - g1[j].first, dmax) !=
          detail::classify_diff(g2[i].first - g2[j].first, dmax))
        return false;
    }

  std::vector<std::vector<const Fact*>> left, right;
  for (auto& g : g1) left.push_back(std::move(g.second));
  for (auto& g : g2) right.push_back(std::move(g.second));
  std::vector<std::vector<bool>> taken;
  for (auto& r : right) taken.emplace_back(r.size(), false);
  std::map<std::string, std::string> fwd;
  std::set<std::string> images;
  return detail::align_groups(left, right, 0, 0, taken, fwd, images);
}

// Immediate-successor computation. The clock can only change which horizon
// constraints hold when it aligns with some fact's timestamp shifted by a
// whole number of units, so the candidate advances are exactly
// (t_F + n) - t_Time for non-clock facts F and |n| <= d.
struct SuccessorStep {
  enum class Kind { Boundary, Open };
  Kind kind;
  Configuration representative;
  std::optional<Rat> epsilon_star;
  Rat advance;  // the tick applied to produce the representative
};

inline SuccessorStep immediate_successor_reps(const Configuration& s, long long d) {
  const Rat& now = s.time();
  std::optional<Rat> eps_star;
  bool at_event = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i == s.time_index()) continue;
    const Rat& tf = s.facts()[i].time;
    for (long long n = -d; n <= d; ++n) {
      Rat e = tf + Rat(n) - now;
      if (e == 0) at_event = true;
      if (e > 0 && (!eps_star || e < *eps_star)) eps_star = e;
    }
  }
  if (at_event) {
    // Every positive advance below eps_star lands in the same successor
    // class; the midpoint is as good a representative as any.
    Rat adv = eps_star ? *eps_star / 2 : Rat(1);
    return {SuccessorStep::Kind::Boundary, tick(s, adv), eps_star, adv};
  }
  if (eps_star) {
    // Strictly inside a region: the unique immediate successor sits exactly
    // on the next event.
    return {SuccessorStep::Kind::Open, tick(s, *eps_star), eps_star, *eps_star};
  }
  // The profile never changes again; any advance stays in class. There is
  // no immediate successor, the representative is just a stand-in.
  return {SuccessorStep::Kind::Open, tick(s, Rat(1)), std::nullopt, Rat(1)};
}

}  // namespace tempora
