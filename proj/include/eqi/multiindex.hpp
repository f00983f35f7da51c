#pragma once
// Multi-index helpers shared by the symbol calculus and operator algebra.

#include <algorithm>
#include <vector>

#include <eqi/num.hpp>

namespace eqi {

using MIdx = std::vector<int>;

inline MIdx midx_zero(int n) { return MIdx(n, 0); }

inline MIdx midx_unit(int n, int j0) {  // j0 is 0-based
  MIdx e(n, 0);
  e[j0] = 1;
  return e;
}

inline int midx_total(const MIdx& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

inline MIdx midx_add(const MIdx& a, const MIdx& b) {
  MIdx c(a);
  for (size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

inline bool midx_le(const MIdx& a, const MIdx& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

inline MIdx midx_sub(const MIdx& a, const MIdx& b) {  // assumes b <= a
  MIdx c(a);
  for (size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

inline Int int_factorial(long n) {
  Int p(1);
  for (long i = 2; i <= n; ++i) p *= i;
  return p;
}

inline Int int_binomial(long n, long k) {
  if (k < 0 || k > n) return Int(0);
  Int p(1);
  for (long i = 1; i <= k; ++i) {
    p *= (n - k + i);
    p /= i;  // exact: p is binom(n-k+i, i) after each step
  }
  return p;
}

inline Int midx_factorial(const MIdx& a) {
  Int p(1);
  for (int v : a) p *= int_factorial(v);
  return p;
}

// prod a_i! / (a_i - g_i)!   (assumes g <= a)
inline Int midx_falling(const MIdx& a, const MIdx& g) {
  Int p(1);
  for (size_t i = 0; i < a.size(); ++i)
    for (int r = 0; r < g[i]; ++r) p *= (a[i] - r);
  return p;
}

inline Int midx_binom(const MIdx& b, const MIdx& g) {
  Int p(1);
  for (size_t i = 0; i < b.size(); ++i) p *= int_binomial(b[i], g[i]);
  return p;
}

// odometer stepping through all g with 0 <= g <= bound; returns false after wrap
inline bool midx_next(MIdx& g, const MIdx& bound) {
  for (size_t i = 0; i < g.size(); ++i) {
    if (g[i] < bound[i]) {
      ++g[i];
      return true;
    }
    g[i] = 0;
  }
  return false;
}

inline std::vector<MIdx> midx_all_below(const MIdx& bound) {
  std::vector<MIdx> out;
  MIdx g(bound.size(), 0);
  do {
    out.push_back(g);
  } while (midx_next(g, bound));
  return out;
}

inline int floor_div(int a, int b) {  // b > 0
  int q = a / b;
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace eqi
