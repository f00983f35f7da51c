#pragma once
// Scalar layer: exact rationals (boost cpp_rational), complex numbers over a
// generic real field, and the conversions shared by the exact and f64 modes.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqi {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

template <class R>
struct RealTraits;

template <>
struct RealTraits<Rat> {
  static constexpr bool exact = true;
  static Rat from_rat(const Rat& q) { return q; }
  static double to_double(const Rat& q) { return q.template convert_to<double>(); }
};

template <>
struct RealTraits<double> {
  static constexpr bool exact = false;
  static double from_rat(const Rat& q) { return q.template convert_to<double>(); }
  static double to_double(double x) { return x; }
};

// Complex number over real field R. Kept as a plain pair so that exact mode
// (R = Rat) and float mode (R = double) share every algorithm above this file.
template <class R>
struct Cx {
  using Real = R;
  R re{};
  R im{};

  Cx() = default;
  Cx(R r) : re(std::move(r)) {}
  Cx(R r, R i) : re(std::move(r)), im(std::move(i)) {}

  static Cx zero() { return Cx(); }
  static Cx one() { return Cx(R(1)); }
  static Cx i() { return Cx(R(0), R(1)); }

  bool is_zero() const { return re == 0 && im == 0; }

  Cx operator-() const { return Cx(-re, -im); }
  Cx conj() const { return Cx(re, -im); }

  friend Cx operator+(const Cx& a, const Cx& b) { return Cx(a.re + b.re, a.im + b.im); }
  friend Cx operator-(const Cx& a, const Cx& b) { return Cx(a.re - b.re, a.im - b.im); }
  friend Cx operator*(const Cx& a, const Cx& b) {
    return Cx(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
  }
  friend Cx operator*(const Cx& a, const R& s) { return Cx(a.re * s, a.im * s); }
  friend Cx operator*(const R& s, const Cx& a) { return a * s; }
  friend Cx operator/(const Cx& a, const Cx& b) {
    R d = b.re * b.re + b.im * b.im;
    if (d == 0) throw std::domain_error("complex division by zero");
    return Cx((a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d);
  }
  Cx& operator+=(const Cx& b) { re += b.re; im += b.im; return *this; }
  Cx& operator-=(const Cx& b) { re -= b.re; im -= b.im; return *this; }
  Cx& operator*=(const Cx& b) { *this = *this * b; return *this; }

  friend bool operator==(const Cx& a, const Cx& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const Cx& a, const Cx& b) { return !(a == b); }
};

using CRat = Cx<Rat>;
using CF64 = Cx<double>;

template <class C>
C cx_from_rat(const Rat& q) {
  return C(RealTraits<typename C::Real>::from_rat(q));
}

template <class C>
std::complex<double> cx_to_std(const C& z) {
  using RT = RealTraits<typename C::Real>;
  return {RT::to_double(z.re), RT::to_double(z.im)};
}

inline CF64 cx_from_std(std::complex<double> z) { return CF64(z.real(), z.imag()); }

template <class C>
double cx_abs(const C& z) {
  return std::abs(cx_to_std(z));
}

// (base)^k for integer k, k >= 0.
template <class T>
T pow_nonneg(T base, long k) {
  T acc(1);
  while (k-- > 0) acc = acc * base;
  return acc;
}

inline Rat rat_pow(const Rat& q, long k) {
  if (k >= 0) return pow_nonneg(q, k);
  if (q == 0) throw std::domain_error("0^negative");
  return Rat(1) / pow_nonneg(q, -k);
}

inline Rat factorial(long n) {
  Rat acc(1);
  for (long i = 2; i <= n; ++i) acc *= i;
  return acc;
}

inline Rat binomial(long n, long k) {
  if (k < 0 || k > n) return Rat(0);
  Rat acc(1);
  for (long i = 0; i < k; ++i) acc *= Rat(n - i) / Rat(i + 1);
  return acc;
}

inline Rat double_factorial(long n) {  // n!!, with (-1)!! = 1
  Rat acc(1);
  for (long i = n; i >= 2; i -= 2) acc *= i;
  return acc;
}

// Exact square root of a rational if it is a perfect square; returns false otherwise.
inline bool try_sqrt_rat(const Rat& q, Rat& out) {
  if (q < 0) return false;
  Int num = boost::multiprecision::numerator(q);
  Int den = boost::multiprecision::denominator(q);
  Int rn, rd, rem;
  rn = boost::multiprecision::sqrt(num, rem);
  if (rem != 0) return false;
  rd = boost::multiprecision::sqrt(den, rem);
  if (rem != 0) return false;
  out = Rat(rn) / Rat(rd);
  return true;
}

// Parses "p/q", plain integers, and decimal literals ("0.25") into exact rationals.
inline Rat parse_rat(const std::string& s) {
  auto bad = [&] { return std::invalid_argument("bad rational literal: " + s); };
  if (s.empty()) throw bad();
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rat num = parse_rat(s.substr(0, slash));
    Rat den = parse_rat(s.substr(slash + 1));
    if (den == 0) throw bad();
    return num / den;
  }
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
    if (tail.find_first_not_of("0123456789") != std::string::npos) throw bad();
    Rat base = head.empty() || head == "-" || head == "+" ? Rat(0) : Rat(Int(head));
    Rat frac = tail.empty() ? Rat(0) : Rat(Int(tail)) / rat_pow(Rat(10), (long)tail.size());
    bool neg = !head.empty() && head[0] == '-';
    return neg ? Rat(base - frac) : Rat(base + frac);
  }
  try {
    return Rat(Int(s));
  } catch (...) {
    throw bad();
  }
}

inline std::string rat_str(const Rat& q) { return q.str(); }

template <class C>
std::string cx_str(const C& z);

template <>
inline std::string cx_str<CRat>(const CRat& z) {
  if (z.im == 0) return rat_str(z.re);
  return rat_str(z.re) + (z.im > 0 ? "+" : "") + rat_str(z.im) + "i";
}

template <>
inline std::string cx_str<CF64>(const CF64& z) {
  char buf[64];
  if (z.im == 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", z.re);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.re, z.im);
  return buf;
}

}  // namespace eqi
