#pragma once

// Finite abstraction of timed configurations. A circle configuration keeps,
// for every fact, only its timestamp's integer-part class (with inter-class
// distances truncated at the horizon) and the ordering class of its
// fractional part laid out around a circle whose zero point holds the facts
// with whole-number timestamps. Equivalent configurations have equal
// abstractions, and every abstraction is realized by a concrete
// representative, so reachability questions transfer both ways.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tempora/error.hpp"
#include "tempora/semantics.hpp"

namespace tempora {

// Inter-class distance in whole units; disengaged means beyond the horizon.
using Gap = std::optional<long long>;

inline std::string gap_to_string(const Gap& g) { return g ? std::to_string(*g) : "inf"; }

inline Gap truncate_gap(const BigInt& n, long long dmax) {
  if (n > dmax) return std::nullopt;
  return Gap(static_cast<long long>(n));
}

struct PlacedFact {
  Fact fact;
  int delta = 0;   // integer-part class, increasing timestamp order
  int circle = 0;  // 0 = zero point, then increasing fractional part

  friend bool operator==(const PlacedFact&, const PlacedFact&) = default;
};

class CircleConfiguration {
 public:
  std::vector<PlacedFact> facts;
  std::vector<Gap> gaps;  // between consecutive integer-part classes
  long long dmax = 2;

  int delta_count() const {
    int d = -1;
    for (const auto& pf : facts) d = std::max(d, pf.delta);
    return d + 1;
  }

  // Number of non-zero circle classes.
  int circle_count() const {
    int k = 0;
    for (const auto& pf : facts) k = std::max(k, pf.circle);
    return k;
  }

  size_t time_index() const {
    for (size_t i = 0; i < facts.size(); ++i)
      if (is_time_fact(facts[i].fact)) return i;
    throw Error(Errc::InconsistentCircleConfiguration, "no Time fact");
  }

  // Storage order is part of the structural identity: sorted by class
  // indices, ties broken by the fact's structural order.
  void normalize() {
    std::sort(facts.begin(), facts.end(), [](const PlacedFact& a, const PlacedFact& b) {
      if (a.delta != b.delta) return a.delta < b.delta;
      if (a.circle != b.circle) return a.circle < b.circle;
      return a.fact < b.fact;
    });
  }

  void validate() const {
    if (facts.empty())
      throw Error(Errc::InconsistentCircleConfiguration, "no facts");
    if (dmax < 1)
      throw Error(Errc::InconsistentCircleConfiguration, "horizon must be positive");
    int time_count = 0;
    for (const auto& pf : facts) {
      if (!fact_is_ground(pf.fact))
        throw Error(Errc::InconsistentCircleConfiguration,
                    "non-ground fact " + fact_to_string(pf.fact));
      if (pf.delta < 0 || pf.circle < 0)
        throw Error(Errc::InconsistentCircleConfiguration, "negative class index");
      if (is_time_fact(pf.fact)) ++time_count;
    }
    if (time_count != 1)
      throw Error(Errc::InconsistentCircleConfiguration,
                  "expected exactly one Time fact, found " + std::to_string(time_count));
    int d = delta_count();
    int k = circle_count();
    std::vector<bool> delta_seen(d, false), circle_seen(k + 1, false);
    for (const auto& pf : facts) {
      delta_seen[pf.delta] = true;
      circle_seen[pf.circle] = true;
    }
    for (int i = 0; i < d; ++i)
      if (!delta_seen[i])
        throw Error(Errc::InconsistentCircleConfiguration,
                    "empty integer-part class " + std::to_string(i));
    // The zero point may be empty; every other circle class must not be.
    for (int i = 1; i <= k; ++i)
      if (!circle_seen[i])
        throw Error(Errc::InconsistentCircleConfiguration,
                    "empty circle class " + std::to_string(i));
    if (gaps.size() + 1 != static_cast<size_t>(d))
      throw Error(Errc::InconsistentCircleConfiguration,
                  "expected " + std::to_string(d - 1) + " gaps, found " +
                      std::to_string(gaps.size()));
    for (const auto& g : gaps)
      if (g && (*g < 1 || *g > dmax))
        throw Error(Errc::InconsistentCircleConfiguration,
                    "gap " + std::to_string(*g) + " outside [1, " + std::to_string(dmax) + "]");
  }

  friend bool operator==(const CircleConfiguration&, const CircleConfiguration&) = default;
};

inline std::string circle_to_string(const CircleConfiguration& a) {
  int d = a.delta_count();
  int k = a.circle_count();
  auto render_class = [&](auto pred) {
    std::string out = "{";
    bool first = true;
    for (const auto& pf : a.facts)
      if (pred(pf)) {
        if (!first) out += ",";
        out += fact_to_string(pf.fact);
        first = false;
      }
    return out + "}";
  };
  std::string out = "<";
  for (int i = 0; i < d; ++i) {
    if (i) out += "," + gap_to_string(a.gaps[i - 1]) + ",";
    out += render_class([&](const PlacedFact& pf) { return pf.delta == i; });
  }
  out += "> / [";
  out += render_class([&](const PlacedFact& pf) { return pf.circle == 0; }) + "_Z";
  for (int i = 1; i <= k; ++i)
    out += "," + render_class([&](const PlacedFact& pf) { return pf.circle == i; });
  out += "]";
  return out;
}

inline CircleConfiguration abstract(const Configuration& s, long long dmax) {
  auto fs = s.sorted_facts();
  std::vector<BigInt> ints;
  std::vector<Rat> fracs;  // distinct positive fractional parts, increasing
  for (const auto& tf : fs) {
    BigInt ip = rat_floor(tf.time);
    if (ints.empty() || ints.back() != ip) ints.push_back(ip);
    Rat fp = frac_part(tf.time);
    if (fp > 0) fracs.push_back(fp);
  }
  std::sort(fracs.begin(), fracs.end());
  fracs.erase(std::unique(fracs.begin(), fracs.end()), fracs.end());

  CircleConfiguration a;
  a.dmax = dmax;
  for (const auto& tf : fs) {
    PlacedFact pf;
    pf.fact = tf.fact;
    BigInt ip = rat_floor(tf.time);
    pf.delta = static_cast<int>(std::lower_bound(ints.begin(), ints.end(), ip) - ints.begin());
    Rat fp = frac_part(tf.time);
    pf.circle = fp == 0 ? 0
                        : static_cast<int>(std::lower_bound(fracs.begin(), fracs.end(), fp) -
                                           fracs.begin()) +
                              1;
    a.facts.push_back(std::move(pf));
  }
  for (size_t i = 0; i + 1 < ints.size(); ++i)
    a.gaps.push_back(truncate_gap(ints[i + 1] - ints[i], dmax));
  a.normalize();
  return a;
}

// Canonical representative: integer parts laid out from zero using the gaps
// (a truncated gap is materialized as one past the horizon), fractional
// parts spread uniformly so that class j of K sits at j/(K+1).
inline Configuration concretize(const CircleConfiguration& a) {
  a.validate();
  int d = a.delta_count();
  std::vector<Rat> base(d, Rat(0));
  for (int i = 1; i < d; ++i)
    base[i] = base[i - 1] + Rat(a.gaps[i - 1] ? *a.gaps[i - 1] : a.dmax + 1);
  int k = a.circle_count();
  std::vector<TimestampedFact> facts;
  facts.reserve(a.facts.size());
  for (const auto& pf : a.facts) {
    Rat t = base[pf.delta];
    if (pf.circle > 0) t += Rat(pf.circle, k + 1);
    facts.push_back({pf.fact, t});
  }
  return Configuration(std::move(facts));
}

namespace detail {

// Time wrapped past the next whole number: it leaves the last circle class
// for the zero point, and its integer part grows by one, which can split it
// from its old class, merge it into the next one, or shorten the gap ahead.
inline void wrap_integer_part(CircleConfiguration& out, size_t ti) {
  out.facts[ti].circle = 0;

  int c = out.facts[ti].delta;
  int d = out.delta_count();
  int classmates = 0;
  for (const auto& pf : out.facts)
    if (pf.delta == c) ++classmates;
  bool alone = classmates == 1;
  bool has_left = c > 0;
  bool has_right = c < d - 1;
  auto plus_one = [&](const Gap& g) -> Gap {
    if (!g) return std::nullopt;
    return truncate_gap(BigInt(*g) + 1, out.dmax);
  };

  if (alone) {
    if (!has_right) {
      // Still the last class, one unit further from its predecessor.
      if (has_left) out.gaps[c - 1] = plus_one(out.gaps[c - 1]);
      return;
    }
    Gap gr = out.gaps[c];
    if (gr && *gr == 1) {
      // Lands exactly on the next class: merge, fusing the two gaps.
      out.facts[ti].delta = c + 1;
      for (auto& pf : out.facts)
        if (pf.delta > c) --pf.delta;
      if (has_left) out.gaps[c - 1] = plus_one(out.gaps[c - 1]);
      out.gaps.erase(out.gaps.begin() + c);
      return;
    }
    // Stays a class of its own, one unit closer to the next. A gap beyond
    // the horizon re-enters it at exactly the horizon, matching the
    // representative chosen by concretize.
    if (has_left) out.gaps[c - 1] = plus_one(out.gaps[c - 1]);
    out.gaps[c] = gr ? Gap(*gr - 1) : Gap(out.dmax);
    return;
  }

  // Classmates keep the old integer part; Time splits off one unit later.
  if (!has_right) {
    out.facts[ti].delta = d;
    out.gaps.push_back(Gap(1));
    return;
  }
  Gap gr = out.gaps[c];
  if (gr && *gr == 1) {
    out.facts[ti].delta = c + 1;
    return;
  }
  for (auto& pf : out.facts)
    if (pf.delta > c) ++pf.delta;
  out.facts[ti].delta = c + 1;
  Gap right = gr ? Gap(*gr - 1) : Gap(out.dmax);
  out.gaps[c] = Gap(1);
  out.gaps.insert(out.gaps.begin() + c + 1, right);
}

}  // namespace detail

// The abstraction of time advancing to the next equivalence class: Time's
// fractional part moves clockwise, joining or passing the other classes,
// and wraps onto the zero point when it completes a turn.
namespace detail {

// One structural move of the clock around the unit circle: leave the zero
// point, split from classmates, catch up with the class ahead, or wrap back
// onto the zero point with an integer-part bump.
inline CircleConfiguration advance_once(const CircleConfiguration& a) {
  CircleConfiguration out = a;
  size_t ti = out.time_index();
  int p = out.facts[ti].circle;
  int k = out.circle_count();
  int same = 0;
  for (const auto& pf : out.facts)
    if (pf.circle == p) ++same;
  bool alone = same == 1;

  if (p == 0) {
    if (k == 0 && alone) return a;  // clock-only configuration, final class
    for (auto& pf : out.facts)
      if (pf.circle >= 1) ++pf.circle;
    out.facts[ti].circle = 1;
  } else if (p < k) {
    if (alone) {
      // Catches up with the class ahead.
      out.facts[ti].circle = p + 1;
      for (auto& pf : out.facts)
        if (pf.circle > p) --pf.circle;
    } else {
      // Leaves its classmates behind.
      for (auto& pf : out.facts)
        if (pf.circle > p) ++pf.circle;
      out.facts[ti].circle = p + 1;
    }
  } else {  // p == k >= 1, Time holds the highest fractional part
    if (!alone) {
      out.facts[ti].circle = k + 1;
    } else {
      detail::wrap_integer_part(out, ti);
    }
  }
  out.normalize();
  return out;
}

// The two shapes whose advancement step may stay inside the equivalence
// class: the clock alone at the zero point, or the clock alone in the last
// unit class wrapping onto an empty zero point.
inline bool sanctioned_self_loop(const CircleConfiguration& a) {
  const auto& time = a.facts[a.time_index()];
  int share = 0, zero = 0;
  for (const auto& pf : a.facts) {
    if (pf.circle == time.circle) ++share;
    if (pf.circle == 0) ++zero;
  }
  if (time.circle == 0) return share == 1;
  return share == 1 && time.circle == a.circle_count() && zero == 0;
}

}  // namespace detail

inline CircleConfiguration next(const CircleConfiguration& a) {
  a.validate();
  CircleConfiguration first = detail::advance_once(a);
  if (detail::sanctioned_self_loop(a)) return first;
  // When every pairwise difference the move touches lies beyond the horizon
  // the structural step does not change the equivalence class; fuse through
  // such moves so each advancement makes progress whenever progress is
  // possible. Terminal classes cycle, so a full orbit falls back to the
  // plain single move.
  Configuration src = concretize(a);
  CircleConfiguration cur = first;
  int cap = 2 * static_cast<int>(a.facts.size()) + 8;
  for (int i = 0; i < cap; ++i) {
    if (!equivalent(concretize(cur), src, a.dmax)) return cur;
    cur = detail::advance_once(cur);
  }
  return first;
}

struct SymbolicInstance {
  Substitution sub;
  CircleConfiguration result;
};

// Fire a rule on the abstraction by firing it on the canonical
// representative and abstracting the results. Sound because rule
// enabledness and the successor's class are invariant across a class.
// Only balanced rules preserve the finite-state argument, so anything
// else is rejected outright. A positive k bounds created fact sizes.
inline std::vector<SymbolicInstance> apply_symbolic(const Rule& r, const CircleConfiguration& a,
                                                    NoncePool& pool, int k = 0) {
  if (!r.balanced())
    throw Error(Errc::NotBalanced, "rule " + r.name + " consumes " +
                                       std::to_string(r.consumed.size()) + " facts but creates " +
                                       std::to_string(r.created.size()));
  Configuration s = concretize(a);
  std::vector<SymbolicInstance> out;
  for (auto& inst : applicable_instances(r, s, pool)) {
    if (k > 0)
      for (const auto& c : r.created) {
        Fact f = apply_substitution(c.fact, inst.sub);
        if (fact_size(f) > k)
          throw Error(Errc::SizeBoundExceeded, "rule " + r.name + " creates " + fact_to_string(f) +
                                                   " of size " + std::to_string(fact_size(f)) +
                                                   " > " + std::to_string(k));
      }
    out.push_back({std::move(inst.sub), abstract(inst.result, a.dmax)});
  }
  return out;
}

// Spec matching on the abstraction, via the canonical representative.
// Constraint offsets past the horizon cannot be decided class-wide.
inline bool cc_matches_spec(const CircleConfiguration& a, const PairSpec& spec) {
  for (const auto& pair : spec.pairs)
    for (const auto& c : pair.constraints)
      if (c.offset > a.dmax || c.offset < -a.dmax)
        throw Error(Errc::OffsetExceedsDmax,
                    "constraint offset " + std::to_string(c.offset) + " outside horizon " +
                        std::to_string(a.dmax));
  return matches_spec(concretize(a), spec);
}

namespace detail {

inline void blind_term(const Term& t, std::string& out) {
  switch (t.kind) {
    case Term::Kind::Nonce:
      out += '~';
      return;
    case Term::Kind::Constant:
    case Term::Kind::Variable:
      out += t.name;
      return;
    case Term::Kind::Apply:
      out += t.name;
      out += '(';
      for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ',';
        blind_term(t.args[i], out);
      }
      out += ')';
      return;
  }
}

// Serialization with every nonce name erased; facts equal under some
// renaming have equal blind forms (though not conversely).
inline std::string blind_fact(const Fact& f) {
  std::string out = f.pred;
  if (!f.args.empty()) {
    out += '(';
    for (size_t i = 0; i < f.args.size(); ++i) {
      if (i) out += ',';
      blind_term(f.args[i], out);
    }
    out += ')';
  }
  return out;
}

inline void rename_term(const Term& t, const std::map<std::string, std::string>& ren,
                        std::string& out) {
  switch (t.kind) {
    case Term::Kind::Nonce:
      out += ren.at(t.name);
      return;
    case Term::Kind::Constant:
    case Term::Kind::Variable:
      out += t.name;
      return;
    case Term::Kind::Apply:
      out += t.name;
      out += '(';
      for (size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ',';
        rename_term(t.args[i], ren, out);
      }
      out += ')';
      return;
  }
}

inline std::string rename_fact(const Fact& f, const std::map<std::string, std::string>& ren) {
  std::string out = f.pred;
  if (!f.args.empty()) {
    out += '(';
    for (size_t i = 0; i < f.args.size(); ++i) {
      if (i) out += ',';
      rename_term(f.args[i], ren, out);
    }
    out += ')';
  }
  return out;
}

// Nonces in first-occurrence order of the fact's argument serialization.
// Renaming must follow this order, not name order: a key is only blind to
// renaming bijections if the i-th fresh nonce of a fact always becomes n_i.
inline void append_nonces(const Term& t, std::vector<std::string>& out) {
  if (t.kind == Term::Kind::Nonce &&
      std::find(out.begin(), out.end(), t.name) == out.end())
    out.push_back(t.name);
  for (const auto& a : t.args) append_nonces(a, out);
}

// Rendering of the still-unplaced facts where nonces already given a
// canonical name show it and the rest are numbered by first occurrence
// within the suffix. Branches of the canonical-order search that agree on
// this (and on everything already emitted) have identical best completions.
inline std::string suffix_state_key(const std::vector<const PlacedFact*>& remaining,
                                    const std::map<std::string, std::string>& ren) {
  std::map<std::string, std::string> local = ren;
  int fresh = 0;
  std::string out;
  for (const auto* pf : remaining) {
    std::vector<std::string> ns;
    for (const auto& a : pf->fact.args) append_nonces(a, ns);
    for (const auto& n : ns)
      if (!local.count(n)) local.emplace(n, "?" + std::to_string(++fresh));
    out += std::to_string(pf->delta) + ":" + std::to_string(pf->circle) + ":" +
           rename_fact(pf->fact, local) + ";";
  }
  return out;
}

}  // namespace detail

// Nonce-independent textual key: the circle form rendered with nonces
// renamed n1, n2, ... in order of first appearance, minimized over the
// orderings of facts that are interchangeable up to renaming. Two
// configurations get the same key exactly when they are identical up to a
// bijection on nonce names. The horizon is deliberately not part of the key;
// every state in one search shares it.
inline std::string canonicalize(const CircleConfiguration& a) {
  a.validate();
  std::vector<const PlacedFact*> order(a.facts.size());
  for (size_t i = 0; i < a.facts.size(); ++i) order[i] = &a.facts[i];
  std::stable_sort(order.begin(), order.end(), [](const PlacedFact* x, const PlacedFact* y) {
    if (x->delta != y->delta) return x->delta < y->delta;
    if (x->circle != y->circle) return x->circle < y->circle;
    return detail::blind_fact(x->fact) < detail::blind_fact(y->fact);
  });

  struct Branch {
    std::vector<const PlacedFact*> chosen;
    std::vector<const PlacedFact*> remaining;
    std::map<std::string, std::string> ren;
    int next_id = 0;
  };
  Branch root;
  root.remaining = order;
  std::vector<Branch> live{std::move(root)};

  for (size_t pos = 0; pos < a.facts.size(); ++pos) {
    // Candidates must stay inside the current cell: facts from later cells
    // are only eligible once the cell is exhausted, which the blind sort
    // guarantees happens for all branches at the same position.
    std::string best;
    std::vector<Branch> advanced;
    for (const auto& br : live) {
      const PlacedFact* head = br.remaining.front();
      std::string head_blind = detail::blind_fact(head->fact);
      for (size_t i = 0; i < br.remaining.size(); ++i) {
        const PlacedFact* cand = br.remaining[i];
        if (cand->delta != head->delta || cand->circle != head->circle ||
            detail::blind_fact(cand->fact) != head_blind)
          break;
        Branch nb = br;
        std::vector<std::string> ns;
        for (const auto& t : cand->fact.args) detail::append_nonces(t, ns);
        for (const auto& n : ns)
          if (!nb.ren.count(n)) nb.ren.emplace(n, "n" + std::to_string(++nb.next_id));
        std::string rendered = detail::rename_fact(cand->fact, nb.ren);
        if (!advanced.empty() && rendered > best) continue;
        nb.chosen.push_back(cand);
        nb.remaining.erase(nb.remaining.begin() + i);
        if (advanced.empty() || rendered < best) {
          best = rendered;
          advanced.clear();
        }
        advanced.push_back(std::move(nb));
      }
    }
    std::set<std::string> seen;
    live.clear();
    for (auto& br : advanced) {
      auto key = detail::suffix_state_key(br.remaining, br.ren);
      if (seen.insert(key).second) live.push_back(std::move(br));
    }
  }

  // All surviving branches render identically position by position; take
  // the first and lay out the circle form with its renaming.
  const Branch& winner = live.front();
  int d = a.delta_count();
  int k = a.circle_count();
  auto render_class = [&](auto pred) {
    std::string out = "{";
    bool first = true;
    for (const auto* pf : winner.chosen)
      if (pred(*pf)) {
        if (!first) out += ",";
        out += detail::rename_fact(pf->fact, winner.ren);
        first = false;
      }
    return out + "}";
  };
  std::string out = "cc1:<";
  for (int i = 0; i < d; ++i) {
    if (i) out += "," + gap_to_string(a.gaps[i - 1]) + ",";
    out += render_class([&](const PlacedFact& pf) { return pf.delta == i; });
  }
  out += "> / [";
  out += render_class([&](const PlacedFact& pf) { return pf.circle == 0; }) + "_Z";
  for (int i = 1; i <= k; ++i)
    out += "," + render_class([&](const PlacedFact& pf) { return pf.circle == i; });
  out += "]";
  return out;
}

namespace detail {

// Hand-rolled scanner for the circle form; accepts exactly what
// circle_to_string and canonicalize emit, modulo whitespace.
class CircleTextParser {
 public:
  CircleTextParser(std::string_view text, long long dmax) : text_(text), dmax_(dmax) {}

  CircleConfiguration parse() {
    CircleConfiguration a;
    a.dmax = dmax_;
    skip_ws();
    expect('<');
    int delta = 0;
    for (auto& f : parse_class()) a.facts.push_back({std::move(f), delta, -1});
    skip_ws();
    while (peek() == ',') {
      ++pos_;
      a.gaps.push_back(parse_gap());
      expect(',');
      ++delta;
      for (auto& f : parse_class()) a.facts.push_back({std::move(f), delta, -1});
      skip_ws();
    }
    expect('>');
    skip_ws();
    expect('/');
    skip_ws();
    expect('[');
    assign_circle(a, 0, parse_class());
    skip_ws();
    expect('_');
    expect('Z');
    skip_ws();
    int circle = 0;
    while (peek() == ',') {
      ++pos_;
      assign_circle(a, ++circle, parse_class());
      skip_ws();
    }
    expect(']');
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    for (const auto& pf : a.facts)
      if (pf.circle < 0)
        fail("fact " + fact_to_string(pf.fact) + " missing from the circle part");
    a.normalize();
    a.validate();
    return a;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw Error(Errc::InconsistentCircleConfiguration,
                msg + " at offset " + std::to_string(pos_));
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  static bool ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

  std::string parse_ident() {
    skip_ws();
    if (!ident_start(peek())) fail("expected identifier");
    size_t start = pos_;
    while (ident_char(peek())) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Gap parse_gap() {
    skip_ws();
    if (peek() == 'i') {
      if (text_.substr(pos_, 3) != "inf") fail("expected gap");
      pos_ += 3;
      return std::nullopt;
    }
    if (peek() < '0' || peek() > '9') fail("expected gap");
    long long n = 0;
    while (peek() >= '0' && peek() <= '9') {
      n = n * 10 + (text_[pos_] - '0');
      ++pos_;
    }
    return Gap(n);
  }

  Term parse_term() {
    std::string name = parse_ident();
    if (peek() == '(') {
      ++pos_;
      std::vector<Term> args{parse_term()};
      skip_ws();
      while (peek() == ',') {
        ++pos_;
        args.push_back(parse_term());
        skip_ws();
      }
      expect(')');
      return Term::apply(name, std::move(args));
    }
    if (is_nonce_name(name)) return Term::nonce(name);
    if (name[0] >= 'A' && name[0] <= 'Z') return Term::variable(name);
    return Term::constant(name);
  }

  Fact parse_fact() {
    Fact f;
    f.pred = parse_ident();
    skip_ws();
    if (peek() == '(') {
      ++pos_;
      f.args.push_back(parse_term());
      skip_ws();
      while (peek() == ',') {
        ++pos_;
        f.args.push_back(parse_term());
        skip_ws();
      }
      expect(')');
    }
    return f;
  }

  std::vector<Fact> parse_class() {
    expect('{');
    std::vector<Fact> out;
    skip_ws();
    if (peek() != '}') {
      out.push_back(parse_fact());
      skip_ws();
      while (peek() == ',') {
        ++pos_;
        out.push_back(parse_fact());
        skip_ws();
      }
    }
    expect('}');
    return out;
  }

  void assign_circle(CircleConfiguration& a, int circle, const std::vector<Fact>& fs) {
    for (const auto& f : fs) {
      bool found = false;
      for (auto& pf : a.facts)
        if (pf.circle == -1 && pf.fact == f) {
          pf.circle = circle;
          found = true;
          break;
        }
      if (!found)
        fail("fact " + fact_to_string(f) + " not present in the integer part");
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
  long long dmax_;
};

}  // namespace detail

// Inverse of circle_to_string (and of canonicalize, after stripping the
// "cc1:" prefix). The horizon travels separately from the text.
inline CircleConfiguration parse_circle_text(std::string_view text, long long dmax) {
  if (text.substr(0, 4) == "cc1:") text.remove_prefix(4);
  return detail::CircleTextParser(text, dmax).parse();
}

}  // namespace tempora
