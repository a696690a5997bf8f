#pragma once

// Multiset pattern matching and nonce supply.
//
// match_multiset enumerates every injective assignment of patterns onto
// distinct target occurrences, in a fixed order: patterns are processed
// left to right and target occurrences tried in increasing position, so the
// result sequence is deterministic. Two assignments that happen to produce
// identical substitutions are still reported separately; callers that only
// care about successor states deduplicate at the state level.

#include <set>
#include <string>
#include <vector>

#include "tempora/error.hpp"
#include "tempora/rational.hpp"
#include "tempora/term.hpp"

namespace tempora {

struct TimestampedFact {
  Fact fact;
  Rat time;  // >= 0

  friend bool operator==(const TimestampedFact&, const TimestampedFact&) = default;
};

inline std::string timestamped_to_string(const TimestampedFact& tf) {
  return fact_to_string(tf.fact) + "@" + format_rat(tf.time);
}

// A fact pattern together with the variable bound to its timestamp.
struct Pattern {
  Fact fact;
  std::string time_var;

  friend bool operator==(const Pattern&, const Pattern&) = default;
};

struct Match {
  Substitution sub;
  // occurrences[i] is the target position matched by patterns[i]; injective.
  std::vector<size_t> occurrences;
};

namespace detail {

// Nonce bindings must stay injective: two pattern nonces may not collapse
// onto one target nonce.
struct MatchState {
  Substitution sub;
  std::set<std::string> nonce_images;
};

inline bool match_term(const Term& pat, const Term& ground, MatchState& st, bool rename_nonces) {
  switch (pat.kind) {
    case Term::Kind::Variable: {
      auto it = st.sub.terms.find(pat.name);
      if (it != st.sub.terms.end()) return it->second == ground;
      st.sub.terms.emplace(pat.name, ground);
      return true;
    }
    case Term::Kind::Nonce: {
      if (!rename_nonces) return pat == ground;
      if (ground.kind != Term::Kind::Nonce) return false;
      auto it = st.sub.nonces.find(pat.name);
      if (it != st.sub.nonces.end()) return it->second == ground.name;
      if (st.nonce_images.count(ground.name)) return false;
      st.sub.nonces.emplace(pat.name, ground.name);
      st.nonce_images.insert(ground.name);
      return true;
    }
    case Term::Kind::Constant:
      return pat == ground;
    case Term::Kind::Apply: {
      if (ground.kind != Term::Kind::Apply || pat.name != ground.name ||
          pat.args.size() != ground.args.size())
        return false;
      for (size_t i = 0; i < pat.args.size(); ++i)
        if (!match_term(pat.args[i], ground.args[i], st, rename_nonces)) return false;
      return true;
    }
  }
  return false;  // unreachable
}

inline bool match_fact(const Pattern& pat, const TimestampedFact& tf, MatchState& st,
                       bool rename_nonces) {
  if (pat.fact.pred != tf.fact.pred || pat.fact.args.size() != tf.fact.args.size()) return false;
  auto it = st.sub.times.find(pat.time_var);
  if (it != st.sub.times.end()) {
    if (it->second != tf.time) return false;
  } else {
    st.sub.times.emplace(pat.time_var, tf.time);
  }
  for (size_t i = 0; i < pat.fact.args.size(); ++i)
    if (!match_term(pat.fact.args[i], tf.fact.args[i], st, rename_nonces)) return false;
  return true;
}

}  // namespace detail

// rename_nonces: specification matching may rename pattern nonces injectively
// onto target nonces; rule matching takes nonces literally.
inline std::vector<Match> match_multiset(const std::vector<Pattern>& patterns,
                                         const std::vector<TimestampedFact>& target,
                                         bool rename_nonces = false) {
  std::vector<Match> out;
  detail::MatchState st;
  std::vector<size_t> picked;
  std::vector<bool> used(target.size(), false);

  // Plain backtracking; pattern counts are tiny everywhere this is used.
  auto rec = [&](auto&& self, size_t next) -> void {
    if (next == patterns.size()) {
      out.push_back({st.sub, picked});
      return;
    }
    for (size_t j = 0; j < target.size(); ++j) {
      if (used[j]) continue;
      detail::MatchState saved = st;
      if (detail::match_fact(patterns[next], target[j], st, rename_nonces)) {
        used[j] = true;
        picked.push_back(j);
        self(self, next + 1);
        picked.pop_back();
        used[j] = false;
      }
      st = std::move(saved);
    }
  };
  rec(rec, 0);
  return out;
}

// Fresh nonce supply. Symbolic search draws from a fixed pool of `capacity`
// names and reuses any name absent from the configuration being rewritten;
// concrete simulation mints ever-new names past the pool, so freshness is
// trace-wide there.
class NoncePool {
 public:
  enum class Mode { Symbolic, Concrete };

  NoncePool(Mode mode, int capacity) : mode_(mode), capacity_(capacity) {}

  static std::string name_for(long long index) { return "n" + std::to_string(index); }

  std::vector<std::string> fresh(const std::set<std::string>& live, int count) {
    std::vector<std::string> out;
    if (mode_ == Mode::Symbolic) {
      for (int i = 1; i <= capacity_ && static_cast<int>(out.size()) < count; ++i) {
        std::string name = name_for(i);
        if (!live.count(name)) out.push_back(std::move(name));
      }
      if (static_cast<int>(out.size()) < count)
        throw Error(Errc::PoolExhausted, "all " + std::to_string(capacity_) +
                                             " pool names occur in the configuration");
      return out;
    }
    // Concrete mode: the cursor never moves backwards, so a name consumed
    // earlier in the trace is not reissued even after it leaves the
    // configuration.
    while (static_cast<int>(out.size()) < count) {
      std::string name = name_for(next_++);
      if (!live.count(name)) out.push_back(std::move(name));
    }
    return out;
  }

 private:
  Mode mode_;
  int capacity_;
  long long next_ = 1;
};

}  // namespace tempora
