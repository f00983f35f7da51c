#pragma once
// Complexified exterior algebra Lambda(n) on basis masks, with the Clifford
// action c(v) = v wedge - iota_v realized on Lambda(n) itself and the spinor
// supertrace str = (-2i)^{n/2} * (top Berezin coefficient). Coordinate indices
// are 1-based in the API (dx^1 .. dx^n); bit j of a mask stores index j+1.

#include <bit>
#include <map>
#include <utility>
#include <vector>

#include "eqi/num.hpp"

namespace eqi {

template <class C>
struct Ext {
  using Scalar = C;
  int n = 0;
  std::map<uint32_t, C> terms;  // mask -> coefficient, zero coefficients pruned

  Ext() = default;
  explicit Ext(int n_) : n(n_) {}

  static Ext scalar(int n, C v) {
    Ext e(n);
    if (!v.is_zero()) e.terms.emplace(0u, std::move(v));
    return e;
  }
  static Ext one(int n) { return scalar(n, C::one()); }
  static Ext dx(int n, int i) {  // i in 1..n
    if (i < 1 || i > n) throw std::out_of_range("dx index");
    Ext e(n);
    e.terms.emplace(uint32_t(1) << (i - 1), C::one());
    return e;
  }
  static Ext monomial(int n, std::vector<int> idx, C v) {  // sorted ascending 1-based
    Ext e(n);
    uint32_t m = 0;
    for (int i : idx) {
      if (i < 1 || i > n) throw std::out_of_range("monomial index");
      uint32_t b = uint32_t(1) << (i - 1);
      if (m & b) return e;  // repeated index: zero
      m |= b;
    }
    if (!v.is_zero()) e.terms.emplace(m, std::move(v));
    return e;
  }

  bool is_zero() const { return terms.empty(); }

  C coeff(uint32_t mask) const {
    auto it = terms.find(mask);
    return it == terms.end() ? C::zero() : it->second;
  }

  void add_term(uint32_t mask, const C& v) {
    if (v.is_zero()) return;
    auto [it, fresh] = terms.emplace(mask, v);
    if (!fresh) {
      it->second += v;
      if (it->second.is_zero()) terms.erase(it);
    }
  }

  friend bool operator==(const Ext& a, const Ext& b) {
    return a.n == b.n && a.terms == b.terms;
  }
};

namespace detail {
inline void check_dim(int a, int b) {
  if (a != b) throw std::invalid_argument("ambient dimension mismatch");
}
// Sign of merging sorted index sets a, b (disjoint): parity of pairs (i,j),
// i in a, j in b, i > j.
inline int merge_sign(uint32_t a, uint32_t b) {
  int swaps = 0;
  for (uint32_t m = b; m; m &= m - 1) {
    int j = std::countr_zero(m);
    swaps += std::popcount(a >> (j + 1));
  }
  return (swaps & 1) ? -1 : 1;
}
}  // namespace detail

template <class C>
Ext<C> operator+(const Ext<C>& a, const Ext<C>& b) {
  detail::check_dim(a.n, b.n);
  Ext<C> r = a;
  for (auto& [m, v] : b.terms) r.add_term(m, v);
  return r;
}

template <class C>
Ext<C> operator-(const Ext<C>& a, const Ext<C>& b) {
  detail::check_dim(a.n, b.n);
  Ext<C> r = a;
  for (auto& [m, v] : b.terms) r.add_term(m, -v);
  return r;
}

template <class C>
Ext<C> operator-(const Ext<C>& a) {
  Ext<C> r(a.n);
  for (auto& [m, v] : a.terms) r.terms.emplace(m, -v);
  return r;
}

template <class C>
Ext<C> operator*(const Ext<C>& a, const C& s) {
  Ext<C> r(a.n);
  if (s.is_zero()) return r;
  for (auto& [m, v] : a.terms) r.terms.emplace(m, v * s);
  return r;
}

template <class C>
Ext<C> operator*(const C& s, const Ext<C>& a) {
  return a * s;
}

template <class C>
Ext<C> wedge(const Ext<C>& a, const Ext<C>& b) {
  detail::check_dim(a.n, b.n);
  Ext<C> r(a.n);
  for (auto& [ma, va] : a.terms)
    for (auto& [mb, vb] : b.terms) {
      if (ma & mb) continue;
      C term = va * vb;
      if (detail::merge_sign(ma, mb) < 0) term = -term;
      r.add_term(ma | mb, term);
    }
  return r;
}

// Degree-d part; sums over d reproduce the element.
template <class C>
Ext<C> degree_part(const Ext<C>& a, int d) {
  Ext<C> r(a.n);
  for (auto& [m, v] : a.terms)
    if (std::popcount(m) == d) r.terms.emplace(m, v);
  return r;
}

// Bidegree (k,l) part for the split {1..a | a+1..n}: k horizontal, l normal factors.
template <class C>
Ext<C> bidegree_part(const Ext<C>& a, int a_dim, int k, int l) {
  uint32_t hmask = (a_dim >= 32) ? ~uint32_t(0) : ((uint32_t(1) << a_dim) - 1);
  Ext<C> r(a.n);
  for (auto& [m, v] : a.terms)
    if (std::popcount(m & hmask) == k && std::popcount(m & ~hmask) == l)
      r.terms.emplace(m, v);
  return r;
}

template <class C>
int max_degree(const Ext<C>& a) {
  int d = -1;
  for (auto& [m, v] : a.terms) d = std::max(d, std::popcount(m));
  return d;
}

// c(dx^i) applied to x, i 1-based: dx^i wedge x - iota_i x.
template <class C>
Ext<C> clifford_generator(int i, const Ext<C>& x) {
  uint32_t b = uint32_t(1) << (i - 1);
  Ext<C> r(x.n);
  for (auto& [m, v] : x.terms) {
    if (!(m & b)) {
      C term = v;
      if (detail::merge_sign(b, m) < 0) term = -term;
      r.add_term(b | m, term);
    } else {
      C term = v;
      if (std::popcount(m & (b - 1)) & 1) term = -term;
      r.add_term(m & ~b, -term);
    }
  }
  return r;
}

// sigma[c(a) c(b)]: the Clifford word of each basis monomial of a (generators in
// ascending index order) acts on b through c(v) = v wedge - iota_v.
template <class C>
Ext<C> clifford_product(const Ext<C>& a, const Ext<C>& b) {
  detail::check_dim(a.n, b.n);
  Ext<C> r(a.n);
  for (auto& [ma, va] : a.terms) {
    Ext<C> acc = b;
    // apply generators right to left: highest index first
    for (uint32_t m = ma; m;) {
      int j = 31 - std::countl_zero(m);
      acc = clifford_generator(j + 1, acc);
      m &= ~(uint32_t(1) << j);
    }
    r = r + acc * va;
  }
  return r;
}

template <class C>
C berezin_top(const Ext<C>& a) {
  uint32_t full = (a.n >= 32) ? ~uint32_t(0) : ((uint32_t(1) << a.n) - 1);
  return a.coeff(full);
}

// Coefficient of dx^1 ^ ... ^ dx^a among terms with no normal (index > a) factor.
template <class C>
C berezin_horizontal(const Ext<C>& a, int a_dim) {
  if (a_dim < 0 || a_dim > a.n) throw std::invalid_argument("bad horizontal dimension");
  uint32_t hfull = (a_dim == 0) ? 0u : ((uint32_t(1) << a_dim) - 1);
  return a.coeff(hfull);
}

// str_{S_n}[a] = (-2i)^{n/2} |sigma(a)|^{(n)}, n even.
template <class C>
C supertrace_sigma(const Ext<C>& a) {
  if (a.n % 2 != 0) throw std::domain_error("supertrace needs even ambient dimension");
  C top = berezin_top(a);
  C factor = C::one();
  C m2i(typename C::Real(0), typename C::Real(-2));
  for (int k = 0; k < a.n / 2; ++k) factor *= m2i;
  return factor * top;
}

// sigma[phi^S] for a product of rotations by theta_j in the normal planes
// (a+2j-1, a+2j): product over j of (cos(theta_j/2) + sin(theta_j/2) dx^p ^ dx^{p+1}).
// half[j] = (cos(theta_j/2), sin(theta_j/2)).
template <class C>
Ext<C> phi_spinor_symbol(const std::vector<std::pair<typename C::Real, typename C::Real>>& half,
                         int a_dim) {
  using R = typename C::Real;
  int n = a_dim + 2 * (int)half.size();
  Ext<C> r = Ext<C>::one(n);
  for (size_t j = 0; j < half.size(); ++j) {
    const auto& [c, s] = half[j];
    if (!(s > R(0)) || c < R(0)) throw std::domain_error("rotation angle outside (0, pi]");
    int p = a_dim + 2 * (int)j + 1;
    Ext<C> f = Ext<C>::scalar(n, C(c));
    f.add_term((uint32_t(3) << (p - 1)), C(s));
    r = wedge(r, f);  // factors live in disjoint planes, wedge = Clifford product
  }
  return r;
}

inline Ext<CF64> phi_spinor_symbol_angles(const std::vector<double>& theta, int a_dim) {
  std::vector<std::pair<double, double>> half;
  for (double th : theta) {
    if (!(th > 1e-9) || th > M_PI + 1e-12)
      throw std::domain_error("rotation angle outside (0, pi]");
    half.emplace_back(std::cos(th / 2), std::sin(th / 2));
  }
  return phi_spinor_symbol<CF64>(half, a_dim);
}

}  // namespace eqi
