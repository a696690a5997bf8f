#pragma once

// Textual problem specifications. The surface syntax mirrors the rewrite
// rules' shape directly: a rule lists its pre-condition facts, an optional
// guard, and a post-condition in which a fact repeated verbatim (same
// pattern, same time variable) is persistent, a fact stamped (T+D) is
// created, and a pre-condition fact missing from the post is consumed.
//
// User input never throws: parsing and validation produce diagnostics with
// source locations, and a text with any error-severity diagnostic yields no
// Problem at all.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tempora/rational.hpp"
#include "tempora/semantics.hpp"

namespace tempora {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  int line = 0;
  int col = 0;
  std::string message;
};

inline std::string diagnostic_to_string(const Diagnostic& d) {
  std::string out = d.severity == Severity::Error ? "error" : "warning";
  if (d.line > 0) out += " at " + std::to_string(d.line) + ":" + std::to_string(d.col);
  return out + ": " + d.message;
}

inline bool has_errors(const std::vector<Diagnostic>& ds) {
  for (const auto& d : ds)
    if (d.severity == Severity::Error) return true;
  return false;
}

struct ParseResult {
  std::optional<Problem> problem;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return problem.has_value(); }
};

struct ConfigParseResult {
  std::optional<Configuration> configuration;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return configuration.has_value(); }
};

namespace detail {

enum class Tok {
  End,
  Ident,
  Number,
  LBrace,
  RBrace,
  LParen,
  RParen,
  Comma,
  Colon,
  Pipe,
  At,
  Dot,
  Plus,
  Minus,
  Gt,
  Ge,
  Eq,
  Lollipop,
  KwDmax,
  KwAuto,
  KwInit,
  KwRule,
  KwCritical,
  KwGoal,
  KwExists,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

inline bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
inline bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  Lexer(std::string_view text, std::vector<Diagnostic>& diags) : text_(text), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= text_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (ident_start(c)) {
        size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) advance();
        t.text = std::string(text_.substr(start, pos_ - start));
        t.kind = keyword(t.text);
        out.push_back(std::move(t));
        continue;
      }
      if (digit(c)) {
        size_t start = pos_;
        while (pos_ < text_.size() && digit(text_[pos_])) advance();
        if (pos_ + 1 < text_.size() && (text_[pos_] == '.' || text_[pos_] == '/') &&
            digit(text_[pos_ + 1])) {
          advance();
          while (pos_ < text_.size() && digit(text_[pos_])) advance();
        }
        t.kind = Tok::Number;
        t.text = std::string(text_.substr(start, pos_ - start));
        out.push_back(std::move(t));
        continue;
      }
      if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'o' &&
          (pos_ + 2 >= text_.size() || !ident_char(text_[pos_ + 2]))) {
        advance();
        advance();
        t.kind = Tok::Lollipop;
        t.text = "-o";
        out.push_back(std::move(t));
        continue;
      }
      if (c == '>' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
        advance();
        advance();
        t.kind = Tok::Ge;
        t.text = ">=";
        out.push_back(std::move(t));
        continue;
      }
      Tok k = Tok::End;
      switch (c) {
        case '{': k = Tok::LBrace; break;
        case '}': k = Tok::RBrace; break;
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case ',': k = Tok::Comma; break;
        case ':': k = Tok::Colon; break;
        case '|': k = Tok::Pipe; break;
        case '@': k = Tok::At; break;
        case '.': k = Tok::Dot; break;
        case '+': k = Tok::Plus; break;
        case '-': k = Tok::Minus; break;
        case '>': k = Tok::Gt; break;
        case '=': k = Tok::Eq; break;
        default:
          diags_.push_back({Severity::Error, line_, col_,
                            std::string("unexpected character '") + c + "'"});
          advance();
          continue;
      }
      advance();
      t.kind = k;
      t.text = std::string(1, c);
      out.push_back(std::move(t));
    }
  }

 private:
  static Tok keyword(const std::string& s) {
    if (s == "dmax") return Tok::KwDmax;
    if (s == "auto") return Tok::KwAuto;
    if (s == "init") return Tok::KwInit;
    if (s == "rule") return Tok::KwRule;
    if (s == "critical") return Tok::KwCritical;
    if (s == "goal") return Tok::KwGoal;
    if (s == "exists") return Tok::KwExists;
    return Tok::Ident;
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  std::vector<Diagnostic>& diags_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Raw declarations, before cross-declaration validation.
struct RawRule {
  std::string name;
  std::vector<Pattern> pre;
  std::vector<Constraint> guard;
  std::vector<std::string> existentials;
  std::vector<Pattern> post_plain;                       // fact@TVAR
  std::vector<std::pair<Pattern, long long>> post_made;  // fact@(TVAR+NAT)
  int line = 0, col = 0;
};

struct RawPair {
  SpecPair pair;
  int line = 0, col = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
      : toks_(std::move(tokens)), diags_(diags) {}

  // problem := decl*
  void parse_problem() {
    while (!at(Tok::End)) {
      switch (cur().kind) {
        case Tok::KwDmax: parse_dmax(); break;
        case Tok::KwInit: parse_init(); break;
        case Tok::KwRule: parse_rule(); break;
        case Tok::KwCritical: parse_pair(criticals_); break;
        case Tok::KwGoal: parse_pair(goals_); break;
        default:
          error("expected a declaration (dmax, init, rule, critical, goal)");
          synchronize();
      }
    }
  }

  // "{" tsfact ("," tsfact)* "}" for standalone configuration literals
  std::vector<TimestampedFact> parse_config_literal() {
    auto facts = parse_tsfact_block();
    if (!at(Tok::End)) error("trailing input after configuration");
    return facts;
  }

  bool had_error() const { return had_error_; }

  std::optional<long long> dmax_explicit;
  bool dmax_auto = false;
  std::optional<std::vector<TimestampedFact>> init;
  int init_line = 0, init_col = 0;
  std::vector<RawRule> rules;
  std::vector<RawPair> criticals_;
  std::vector<RawPair> goals_;

 private:
  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }

  const Token& take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool expect(Tok k, const char* what) {
    if (at(k)) {
      take();
      return true;
    }
    error(std::string("expected ") + what);
    return false;
  }

  void error(const std::string& msg) {
    had_error_ = true;
    diags_.push_back({Severity::Error, cur().line, cur().col, msg});
  }

  // Skip to the next declaration keyword so one mistake yields one message.
  void synchronize() {
    while (!at(Tok::End)) {
      switch (cur().kind) {
        case Tok::KwDmax:
        case Tok::KwInit:
        case Tok::KwRule:
        case Tok::KwCritical:
        case Tok::KwGoal:
          return;
        default: take();
      }
    }
  }

  void parse_dmax() {
    const Token& kw = take();
    if (dmax_explicit || dmax_auto) {
      diags_.push_back({Severity::Error, kw.line, kw.col, "duplicate dmax declaration"});
      had_error_ = true;
    }
    if (at(Tok::KwAuto)) {
      take();
      dmax_auto = true;
      return;
    }
    if (at(Tok::Number)) {
      Token t = take();
      auto r = parse_rat(t.text);
      if (!r || !is_integer(*r)) {
        diags_.push_back({Severity::Error, t.line, t.col, "dmax must be a natural number"});
        had_error_ = true;
        return;
      }
      dmax_explicit = static_cast<long long>(rat_floor(*r));
      return;
    }
    error("expected a natural number or 'auto' after dmax");
    synchronize();
  }

  void parse_init() {
    const Token& kw = take();
    if (init) {
      diags_.push_back({Severity::Error, kw.line, kw.col, "duplicate init declaration"});
      had_error_ = true;
    }
    init_line = kw.line;
    init_col = kw.col;
    init = parse_tsfact_block();
  }

  std::vector<TimestampedFact> parse_tsfact_block() {
    std::vector<TimestampedFact> out;
    if (!expect(Tok::LBrace, "'{'")) {
      synchronize();
      return out;
    }
    while (true) {
      auto f = parse_fact();
      if (!expect(Tok::At, "'@' with a timestamp")) break;
      if (!at(Tok::Number)) {
        error("expected a rational timestamp");
        break;
      }
      Token t = take();
      auto r = parse_rat(t.text);
      if (!r) {
        diags_.push_back({Severity::Error, t.line, t.col, "malformed rational '" + t.text + "'"});
        had_error_ = true;
        break;
      }
      if (f) out.push_back({std::move(*f), *r});
      if (at(Tok::Comma)) {
        take();
        continue;
      }
      break;
    }
    expect(Tok::RBrace, "'}'");
    return out;
  }

  // fact := IDENT ("(" term ("," term)* ")")?
  std::optional<Fact> parse_fact() {
    if (!at(Tok::Ident)) {
      error("expected a predicate name");
      return std::nullopt;
    }
    Token name = take();
    Fact f;
    f.pred = name.text;
    if (at(Tok::LParen)) {
      take();
      while (true) {
        auto t = parse_term();
        if (!t) return std::nullopt;
        f.args.push_back(std::move(*t));
        if (at(Tok::Comma)) {
          take();
          continue;
        }
        break;
      }
      if (!expect(Tok::RParen, "')'")) return std::nullopt;
    }
    if (f.pred == kTimePred && !f.args.empty()) {
      diags_.push_back(
          {Severity::Error, name.line, name.col, "Time is a reserved zero-arity predicate"});
      had_error_ = true;
      return std::nullopt;
    }
    return f;
  }

  // term := LIDENT ("(" term ("," term)* ")")? | UVAR
  // Lowercase names matching the nonce shape (n1, n2, ...) are nonces.
  std::optional<Term> parse_term() {
    if (!at(Tok::Ident)) {
      error("expected a term");
      return std::nullopt;
    }
    Token name = take();
    bool upper = name.text[0] >= 'A' && name.text[0] <= 'Z';
    if (at(Tok::LParen)) {
      if (upper) {
        diags_.push_back(
            {Severity::Error, name.line, name.col, "variables cannot take arguments"});
        had_error_ = true;
        return std::nullopt;
      }
      if (is_nonce_name(name.text)) {
        diags_.push_back(
            {Severity::Error, name.line, name.col, "nonce names cannot be used as functions"});
        had_error_ = true;
        return std::nullopt;
      }
      take();
      std::vector<Term> args;
      while (true) {
        auto t = parse_term();
        if (!t) return std::nullopt;
        args.push_back(std::move(*t));
        if (at(Tok::Comma)) {
          take();
          continue;
        }
        break;
      }
      if (!expect(Tok::RParen, "')'")) return std::nullopt;
      return Term::apply(name.text, std::move(args));
    }
    if (upper) return Term::variable(name.text);
    if (is_nonce_name(name.text)) return Term::nonce(name.text);
    return Term::constant(name.text);
  }

  // pat := fact "@" TVAR
  std::optional<Pattern> parse_pat() {
    auto f = parse_fact();
    if (!f) return std::nullopt;
    if (!expect(Tok::At, "'@' with a time variable")) return std::nullopt;
    if (!at(Tok::Ident) || !(cur().text[0] >= 'A' && cur().text[0] <= 'Z')) {
      error("expected an uppercase time variable");
      return std::nullopt;
    }
    Token v = take();
    return Pattern{std::move(*f), v.text};
  }

  std::optional<long long> parse_nat() {
    if (!at(Tok::Number)) {
      error("expected a natural number");
      return std::nullopt;
    }
    Token t = take();
    auto r = parse_rat(t.text);
    if (!r || !is_integer(*r)) {
      diags_.push_back({Severity::Error, t.line, t.col, "expected a natural number"});
      had_error_ = true;
      return std::nullopt;
    }
    return static_cast<long long>(rat_floor(*r));
  }

  // atom := TVAR REL TVAR (("+"|"-") NAT)?
  std::optional<Constraint> parse_atom() {
    if (!at(Tok::Ident)) {
      error("expected a time variable in the guard");
      return std::nullopt;
    }
    Constraint c;
    c.left = take().text;
    if (at(Tok::Gt)) {
      take();
      c.rel = Rel::Gt;
    } else if (at(Tok::Ge)) {
      take();
      c.rel = Rel::Ge;
    } else if (at(Tok::Eq)) {
      take();
      c.rel = Rel::Eq;
    } else {
      error("expected '>', '>=' or '='");
      return std::nullopt;
    }
    if (!at(Tok::Ident)) {
      error("expected a time variable after the relation");
      return std::nullopt;
    }
    c.right = take().text;
    if (at(Tok::Plus) || at(Tok::Minus)) {
      bool neg = at(Tok::Minus);
      take();
      auto n = parse_nat();
      if (!n) return std::nullopt;
      c.offset = neg ? -*n : *n;
    }
    return c;
  }

  std::vector<Constraint> parse_guard() {
    std::vector<Constraint> out;
    while (true) {
      auto a = parse_atom();
      if (a) out.push_back(std::move(*a));
      if (at(Tok::Comma)) {
        take();
        continue;
      }
      return out;
    }
  }

  // ruleDecl := "rule" NAME ":" pat+ ("|" guard)? "-o" ("exists" UVAR+ ".")? pat2+
  void parse_rule() {
    const Token& kw = take();
    RawRule r;
    r.line = kw.line;
    r.col = kw.col;
    if (!at(Tok::Ident)) {
      error("expected a rule name");
      synchronize();
      return;
    }
    r.name = take().text;
    if (!expect(Tok::Colon, "':'")) {
      synchronize();
      return;
    }
    while (true) {
      auto p = parse_pat();
      if (p) r.pre.push_back(std::move(*p));
      if (at(Tok::Comma)) {
        take();
        continue;
      }
      break;
    }
    if (at(Tok::Pipe)) {
      take();
      r.guard = parse_guard();
    }
    if (!expect(Tok::Lollipop, "'-o'")) {
      synchronize();
      return;
    }
    if (at(Tok::KwExists)) {
      take();
      while (at(Tok::Ident) && cur().text[0] >= 'A' && cur().text[0] <= 'Z')
        r.existentials.push_back(take().text);
      if (r.existentials.empty()) error("expected at least one uppercase variable after exists");
      if (!expect(Tok::Dot, "'.' after the existential variables")) {
        synchronize();
        return;
      }
    }
    while (true) {
      // pat2 := fact "@" (TVAR | "(" TVAR "+" NAT ")")
      auto f = parse_fact();
      if (!f) break;
      if (!expect(Tok::At, "'@'")) break;
      if (at(Tok::LParen)) {
        take();
        if (!at(Tok::Ident)) {
          error("expected a time variable");
          break;
        }
        std::string tv = take().text;
        if (!expect(Tok::Plus, "'+'")) break;
        auto n = parse_nat();
        if (!n) break;
        if (!expect(Tok::RParen, "')'")) break;
        r.post_made.push_back({Pattern{std::move(*f), tv}, *n});
      } else {
        if (!at(Tok::Ident) || !(cur().text[0] >= 'A' && cur().text[0] <= 'Z')) {
          error("expected a time variable or '(T + N)'");
          break;
        }
        r.post_plain.push_back(Pattern{std::move(*f), take().text});
      }
      if (at(Tok::Comma)) {
        take();
        continue;
      }
      break;
    }
    rules.push_back(std::move(r));
  }

  // criticalDecl/goalDecl := keyword "{" pat+ ("|" guard)? "}"
  void parse_pair(std::vector<RawPair>& into) {
    const Token& kw = take();
    RawPair rp;
    rp.line = kw.line;
    rp.col = kw.col;
    if (!expect(Tok::LBrace, "'{'")) {
      synchronize();
      return;
    }
    while (true) {
      auto p = parse_pat();
      if (p) rp.pair.patterns.push_back(std::move(*p));
      if (at(Tok::Comma)) {
        take();
        continue;
      }
      break;
    }
    if (at(Tok::Pipe)) {
      take();
      rp.pair.constraints = parse_guard();
    }
    expect(Tok::RBrace, "'}'");
    into.push_back(std::move(rp));
  }

  std::vector<Token> toks_;
  std::vector<Diagnostic>& diags_;
  size_t pos_ = 0;
  bool had_error_ = false;
};

inline void collect_term_vars(const Term& t, std::set<std::string>& out) {
  if (t.kind == Term::Kind::Variable) out.insert(t.name);
  for (const auto& a : t.args) collect_term_vars(a, out);
}

inline bool pattern_has_nonce(const Fact& f) {
  std::set<std::string> ns;
  for (const auto& a : f.args) collect_nonces(a, ns);
  return !ns.empty();
}

}  // namespace detail

// Semantic checks on a structurally complete Problem. Location-free:
// parse_problem reports the same violations with source positions.
inline std::vector<Diagnostic> validate_problem(const Problem& p) {
  std::vector<Diagnostic> out;
  auto err = [&](const std::string& m) { out.push_back({Severity::Error, 0, 0, m}); };
  auto warn = [&](const std::string& m) { out.push_back({Severity::Warning, 0, 0, m}); };

  for (const auto& r : p.rules) {
    std::set<std::string> pre_tvars, pre_term_vars, created_term_vars;
    int time_pats = 0;
    for (const auto& pat : r.pre) {
      pre_tvars.insert(pat.time_var);
      for (const auto& a : pat.fact.args) detail::collect_term_vars(a, pre_term_vars);
      if (is_time_fact(pat.fact)) ++time_pats;
      if (detail::pattern_has_nonce(pat.fact))
        err("rule '" + r.name + "': nonce literal in a rule pattern");
    }
    if (time_pats != 1) err("rule '" + r.name + "': pre-condition must contain Time exactly once");
    for (const auto& c : r.guard) {
      for (const auto& v : {c.left, c.right})
        if (!pre_tvars.count(v))
          err("rule '" + r.name + "': guard variable '" + v +
              "' missing from the pre-condition");
      if (c.offset > p.dmax || c.offset < -p.dmax)
        err("rule '" + r.name + "': guard offset exceeds the horizon");
    }
    for (const auto& cr : r.created) {
      if (cr.delay < 0) err("rule '" + r.name + "': negative delay");
      for (const auto& a : cr.fact.args) detail::collect_term_vars(a, created_term_vars);
      if (detail::pattern_has_nonce(cr.fact))
        err("rule '" + r.name + "': nonce literal in a rule pattern");
    }
    std::set<std::string> ex(r.existentials.begin(), r.existentials.end());
    for (const auto& x : ex) {
      if (pre_term_vars.count(x))
        err("rule '" + r.name + "': existential '" + x + "' also occurs in the pre-condition");
      if (!created_term_vars.count(x))
        err("rule '" + r.name + "': existential '" + x + "' never occurs in a created fact");
    }
    for (const auto& v : created_term_vars)
      if (!pre_term_vars.count(v) && !ex.count(v))
        err("rule '" + r.name + "': variable '" + v + "' in a created fact is unbound");
    for (const auto& v : pre_tvars)
      if (pre_term_vars.count(v) || created_term_vars.count(v) || ex.count(v))
        err("rule '" + r.name + "': '" + v + "' is used both as a time variable and a term");
    if (!r.balanced())
      warn("rule '" + r.name + "' consumes " + std::to_string(r.consumed.size()) +
           " facts but creates " + std::to_string(r.created.size()) +
           "; symbolic search completeness is not guaranteed");
  }
  for (const auto* spec : {&p.critical, &p.goal})
    for (const auto& pair : spec->pairs) {
      std::set<std::string> tvars, term_vars;
      for (const auto& pat : pair.patterns) {
        tvars.insert(pat.time_var);
        for (const auto& a : pat.fact.args) detail::collect_term_vars(a, term_vars);
      }
      for (const auto& v : tvars)
        if (term_vars.count(v))
          err("specification uses '" + v + "' both as a time variable and a term");
      for (const auto& c : pair.constraints) {
        if (!tvars.count(c.left) || !tvars.count(c.right))
          err("specification constraint uses a variable missing from its patterns");
        if (c.offset > p.dmax || c.offset < -p.dmax)
          err("specification constraint offset exceeds the horizon");
      }
    }
  if (compute_dmax(p) > p.dmax)
    err("dmax " + std::to_string(p.dmax) + " is below the computed lower bound " +
        std::to_string(compute_dmax(p)));
  return out;
}

// Error-severity balance report, for callers that require the symbolic
// solver's preconditions up front.
inline std::vector<Diagnostic> balance_diagnostics(const Problem& p) {
  std::vector<Diagnostic> out;
  for (const auto& r : p.rules)
    if (!r.balanced())
      out.push_back({Severity::Error, 0, 0,
                     "rule '" + r.name + "' consumes " + std::to_string(r.consumed.size()) +
                         " facts but creates " + std::to_string(r.created.size())});
  return out;
}

inline ParseResult parse_problem(std::string_view text) {
  ParseResult res;
  detail::Lexer lexer(text, res.diagnostics);
  detail::Parser parser(lexer.run(), res.diagnostics);
  parser.parse_problem();
  if (has_errors(res.diagnostics)) return res;

  auto err = [&](int line, int col, const std::string& m) {
    res.diagnostics.push_back({Severity::Error, line, col, m});
  };

  Problem p;

  // Rules: split each post-condition into persistent repeats and creations.
  for (auto& rr : parser.rules) {
    Rule r;
    r.name = rr.name;
    r.pre = rr.pre;
    r.guard = rr.guard;
    r.existentials = rr.existentials;
    int time_pats = 0;
    for (const auto& pat : r.pre)
      if (is_time_fact(pat.fact)) {
        ++time_pats;
        r.time_var = pat.time_var;
      }
    if (time_pats != 1) {
      err(rr.line, rr.col, "rule '" + r.name + "': pre-condition must contain Time exactly once" +
                               (time_pats == 0 ? " (missing Time)" : ""));
      continue;
    }
    std::vector<bool> kept(r.pre.size(), false);
    bool post_time = false;
    bool bad = false;
    for (auto& pp : rr.post_plain) {
      if (is_time_fact(pp.fact)) {
        if (post_time) {
          err(rr.line, rr.col, "rule '" + r.name + "': Time repeated in the post-condition");
          bad = true;
          break;
        }
        post_time = true;
        if (pp.time_var != r.time_var) {
          err(rr.line, rr.col,
              "rule '" + r.name + "': Time must keep the same time variable across the rule");
          bad = true;
          break;
        }
        continue;
      }
      bool paired = false;
      for (size_t i = 0; i < r.pre.size() && !paired; ++i)
        if (!kept[i] && !is_time_fact(r.pre[i].fact) && r.pre[i].fact == pp.fact &&
            r.pre[i].time_var == pp.time_var) {
          kept[i] = true;
          paired = true;
        }
      if (!paired) {
        err(rr.line, rr.col,
            "rule '" + r.name + "': post-condition fact " + fact_to_string(pp.fact) + "@" +
                pp.time_var +
                " does not repeat a pre-condition fact; created facts must be stamped (T + N)");
        bad = true;
      }
    }
    if (bad) continue;
    if (!post_time) {
      err(rr.line, rr.col, "rule '" + r.name + "': post-condition must contain Time@" +
                               r.time_var + " (missing Time)");
      continue;
    }
    for (auto& pm : rr.post_made) {
      if (is_time_fact(pm.first.fact)) {
        err(rr.line, rr.col, "rule '" + r.name + "': Time cannot be created");
        bad = true;
        break;
      }
      if (pm.first.time_var != r.time_var) {
        err(rr.line, rr.col, "rule '" + r.name + "': created facts must be stamped relative to '" +
                                 r.time_var + "'");
        bad = true;
        break;
      }
      r.created.push_back({pm.first.fact, pm.second});
    }
    if (bad) continue;
    for (size_t i = 0; i < r.pre.size(); ++i)
      if (!kept[i] && !is_time_fact(r.pre[i].fact)) r.consumed.push_back(i);
    p.rules.push_back(std::move(r));
  }

  // Initial configuration.
  if (!parser.init) {
    err(0, 0, "missing init declaration");
  } else {
    int times = 0;
    bool ground = true;
    for (const auto& tf : *parser.init) {
      if (is_time_fact(tf.fact)) ++times;
      if (!fact_is_ground(tf.fact)) ground = false;
    }
    if (times != 1)
      err(parser.init_line, parser.init_col,
          "init must contain exactly one Time fact, found " + std::to_string(times));
    else if (!ground)
      err(parser.init_line, parser.init_col, "init facts must be ground");
    else
      p.initial = Configuration(*parser.init);
  }

  for (auto& rp : parser.criticals_) p.critical.pairs.push_back(std::move(rp.pair));
  for (auto& rp : parser.goals_) p.goal.pairs.push_back(std::move(rp.pair));

  // Alphabet and the fact-size bound, from every fact in the source.
  auto observe = [&](const Fact& f, int line, int col) {
    if (auto msg = p.alphabet.observe(f)) err(line, col, *msg);
  };
  if (parser.init)
    for (const auto& tf : *parser.init) observe(tf.fact, parser.init_line, parser.init_col);
  for (size_t i = 0; i < p.rules.size(); ++i) {
    for (const auto& pat : p.rules[i].pre) observe(pat.fact, 0, 0);
    for (const auto& cr : p.rules[i].created) observe(cr.fact, 0, 0);
  }
  for (const auto* spec : {&p.critical, &p.goal})
    for (const auto& pair : spec->pairs)
      for (const auto& pat : pair.patterns) observe(pat.fact, 0, 0);

  int k = 1;
  auto bump = [&](const Fact& f) { k = std::max(k, fact_size(f)); };
  if (parser.init)
    for (const auto& tf : *parser.init) bump(tf.fact);
  for (const auto& r : p.rules) {
    for (const auto& pat : r.pre) bump(pat.fact);
    for (const auto& cr : r.created) bump(cr.fact);
  }
  for (const auto* spec : {&p.critical, &p.goal})
    for (const auto& pair : spec->pairs)
      for (const auto& pat : pair.patterns) bump(pat.fact);
  p.k = k;

  if (has_errors(res.diagnostics)) return res;

  long long computed = compute_dmax(p);
  if (parser.dmax_explicit) {
    if (*parser.dmax_explicit < computed) {
      err(0, 0, "dmax " + std::to_string(*parser.dmax_explicit) +
                    " is below the computed lower bound " + std::to_string(computed) +
                    "; the abstraction would be unsound");
      return res;
    }
    p.dmax = *parser.dmax_explicit;
  } else {
    p.dmax = computed;
  }

  for (auto& d : validate_problem(p)) res.diagnostics.push_back(std::move(d));
  if (has_errors(res.diagnostics)) return res;
  res.problem = std::move(p);
  return res;
}

inline ConfigParseResult parse_configuration_literal(std::string_view text) {
  ConfigParseResult res;
  detail::Lexer lexer(text, res.diagnostics);
  detail::Parser parser(lexer.run(), res.diagnostics);
  auto facts = parser.parse_config_literal();
  if (has_errors(res.diagnostics)) return res;
  int times = 0;
  for (const auto& tf : facts) {
    if (is_time_fact(tf.fact)) ++times;
    if (!fact_is_ground(tf.fact)) {
      res.diagnostics.push_back(
          {Severity::Error, 1, 1, "configuration fact " + fact_to_string(tf.fact) + " is not ground"});
      return res;
    }
  }
  if (times != 1) {
    res.diagnostics.push_back({Severity::Error, 1, 1,
                               "configuration must contain exactly one Time fact, found " +
                                   std::to_string(times)});
    return res;
  }
  res.configuration = Configuration(std::move(facts));
  return res;
}

// One ground term, e.g. a substitution image read back from a report.
inline std::optional<Term> parse_term_text(std::string_view text) {
  std::vector<Diagnostic> diags;
  detail::Lexer lexer(text, diags);
  auto toks = lexer.run();
  if (!diags.empty()) return std::nullopt;
  size_t pos = 0;
  auto parse = [&](auto&& self) -> std::optional<Term> {
    if (toks[pos].kind != detail::Tok::Ident) return std::nullopt;
    std::string name = toks[pos++].text;
    bool upper = name[0] >= 'A' && name[0] <= 'Z';
    if (toks[pos].kind == detail::Tok::LParen) {
      if (upper || is_nonce_name(name)) return std::nullopt;
      ++pos;
      std::vector<Term> args;
      while (true) {
        auto a = self(self);
        if (!a) return std::nullopt;
        args.push_back(std::move(*a));
        if (toks[pos].kind == detail::Tok::Comma) {
          ++pos;
          continue;
        }
        break;
      }
      if (toks[pos].kind != detail::Tok::RParen) return std::nullopt;
      ++pos;
      return Term::apply(name, std::move(args));
    }
    if (upper) return Term::variable(name);
    if (is_nonce_name(name)) return Term::nonce(name);
    return Term::constant(name);
  };
  auto t = parse(parse);
  if (!t || toks[pos].kind != detail::Tok::End) return std::nullopt;
  return t;
}

namespace detail {

inline std::string pattern_to_string(const Pattern& p) {
  return fact_to_string(p.fact) + "@" + p.time_var;
}

inline std::string guard_to_string(const std::vector<Constraint>& g) {
  std::string out;
  for (size_t i = 0; i < g.size(); ++i) {
    if (i) out += ", ";
    out += constraint_to_string(g[i]);
  }
  return out;
}

}  // namespace detail

// Canonical text: parse(serialize(p)) is structurally equal to p. Rationals
// print in lowest terms ("7/2"), whole numbers bare; dmax prints resolved.
inline std::string serialize_problem(const Problem& p) {
  std::string out = "dmax " + std::to_string(p.dmax) + "\n";
  out += "init { ";
  const auto& facts = p.initial.facts();
  for (size_t i = 0; i < facts.size(); ++i) {
    if (i) out += ", ";
    out += timestamped_to_string(facts[i]);
  }
  out += " }\n";
  for (const auto& r : p.rules) {
    out += "rule " + r.name + ":";
    for (size_t i = 0; i < r.pre.size(); ++i)
      out += (i ? ", " : " ") + detail::pattern_to_string(r.pre[i]);
    if (!r.guard.empty()) out += " | " + detail::guard_to_string(r.guard);
    out += " -o";
    if (!r.existentials.empty()) {
      out += " exists";
      for (const auto& x : r.existentials) out += " " + x;
      out += ".";
    }
    bool first = true;
    std::vector<bool> consumed(r.pre.size(), false);
    for (size_t i : r.consumed) consumed[i] = true;
    for (size_t i = 0; i < r.pre.size(); ++i)
      if (!consumed[i]) {
        out += (first ? " " : ", ") + detail::pattern_to_string(r.pre[i]);
        first = false;
      }
    for (const auto& cr : r.created) {
      out += (first ? " " : ", ") + fact_to_string(cr.fact) + "@(" + r.time_var + "+" +
             std::to_string(cr.delay) + ")";
      first = false;
    }
    out += "\n";
  }
  for (const auto* spec : {&p.critical, &p.goal}) {
    const char* kw = spec == &p.critical ? "critical" : "goal";
    for (const auto& pair : spec->pairs) {
      out += std::string(kw) + " { ";
      for (size_t i = 0; i < pair.patterns.size(); ++i) {
        if (i) out += ", ";
        out += detail::pattern_to_string(pair.patterns[i]);
      }
      if (!pair.constraints.empty()) out += " | " + detail::guard_to_string(pair.constraints);
      out += " }\n";
    }
  }
  return out;
}

}  // namespace tempora
