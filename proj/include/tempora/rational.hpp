#pragma once

// Exact arithmetic used throughout: timestamps and tick amounts are
// arbitrary-precision rationals, search bounds are big integers.
// No floating point anywhere in the engine.

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace tempora {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline bool is_integer(const Rat& r) { return denominator(r) == 1; }

// Floor toward minus infinity. Exact for negatives as well, although the
// engine only ever floors non-negative timestamps.
inline BigInt rat_floor(const Rat& r) {
  BigInt q = numerator(r) / denominator(r);
  if (numerator(r) < 0 && q * denominator(r) != numerator(r)) --q;
  return q;
}

// r - floor(r), always in [0, 1).
inline Rat frac_part(const Rat& r) { return r - Rat(rat_floor(r)); }

// Canonical text form: lowest terms, "7/2" for non-integers, "4" for
// integers (no "/1" suffix). cpp_rational normalizes on construction.
inline std::string format_rat(const Rat& r) {
  std::string s = numerator(r).str();
  if (!is_integer(r)) {
    s += '/';
    s += denominator(r).str();
  }
  return s;
}

// Accepts "4", "7/2" and decimal "3.5" forms. Returns nullopt on anything
// else; no locale, no exponent syntax, no sign handling beyond a leading '-'.
inline std::optional<Rat> parse_rat(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
  }
  auto all_digits = [](std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  };
  Rat value;
  auto slash = text.find('/');
  auto dot = text.find('.');
  if (slash != std::string_view::npos) {
    std::string_view num = text.substr(0, slash), den = text.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) return std::nullopt;
    BigInt d{std::string(den)};
    if (d == 0) return std::nullopt;
    value = Rat(BigInt{std::string(num)}, d);
  } else if (dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot), frac = text.substr(dot + 1);
    if (!all_digits(whole) || !all_digits(frac)) return std::nullopt;
    BigInt scale = 1;
    for (size_t i = 0; i < frac.size(); ++i) scale *= 10;
    value = Rat(BigInt{std::string(whole)} * scale + BigInt{std::string(frac)}, scale);
  } else {
    if (!all_digits(text)) return std::nullopt;
    value = Rat(BigInt{std::string(text)});
  }
  return negative ? Rat(-value) : value;
}

}  // namespace tempora
