#pragma once
// Volterra pseudodifferential symbols on R^n x R with polynomial coefficients.
//
// A symbol is a finite sum of terms
//
//     coeff * x^alpha xi^beta (|xi|^2 + i tau)^(-k),   k integer,
//
// where coeff is a (possibly form-valued) exterior element. Negative k encodes
// nonnegative powers of the heat factor, so sigma(L) + i*tau itself lives in
// the family. The family is closed under xi/x-derivatives, products and
// composition, and terms with k >= 1 have an exact inverse Fourier transform
// into the Gaussian kernel family below.
//
// Parabolic degree of a term: |beta| - 2k (tau counts twice).

#include <climits>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <eqi/char_forms.hpp>
#include <eqi/exterior.hpp>
#include <eqi/multiindex.hpp>

namespace eqi {

template <class C>
struct VolterraSymbol {
  using Key = std::tuple<MIdx, MIdx, int>;  // (x exponents, xi exponents, heat power k)
  int n = 0;
  std::map<Key, Ext<C>> terms;
  // If set, terms of parabolic degree below this are unknown: the symbol is a
  // truncated expansion rather than an exact finite sum.
  std::optional<int> trunc_degree;

  explicit VolterraSymbol(int dim = 0) : n(dim) {}

  static VolterraSymbol zero(int n) { return VolterraSymbol(n); }

  static VolterraSymbol constant(int n, const C& c) {
    VolterraSymbol s(n);
    s.add_term(midx_zero(n), midx_zero(n), 0, Ext<C>::scalar(n, c));
    return s;
  }

  static VolterraSymbol one(int n) { return constant(n, C::one()); }

  // (|xi|^2 + i tau)^power
  static VolterraSymbol heat_factor(int n, int power) {
    VolterraSymbol s(n);
    s.add_term(midx_zero(n), midx_zero(n), -power, Ext<C>::one(n));
    return s;
  }

  static VolterraSymbol xi(int n, int j) {  // j is 1-based
    VolterraSymbol s(n);
    s.add_term(midx_zero(n), midx_unit(n, j - 1), 0, Ext<C>::one(n));
    return s;
  }

  static VolterraSymbol x(int n, int j) {  // j is 1-based
    VolterraSymbol s(n);
    s.add_term(midx_unit(n, j - 1), midx_zero(n), 0, Ext<C>::one(n));
    return s;
  }

  void add_term(const MIdx& a, const MIdx& b, int k, const Ext<C>& c) {
    if ((int)a.size() != n || (int)b.size() != n)
      throw std::invalid_argument("multi-index length mismatch");
    if (c.terms.empty()) return;
    Key key{a, b, k};
    auto it = terms.find(key);
    if (it == terms.end()) {
      terms.emplace(key, c);
    } else {
      it->second = it->second + c;
      if (it->second.terms.empty()) terms.erase(it);
    }
  }

  bool is_zero() const { return terms.empty(); }

  friend bool operator==(const VolterraSymbol& p, const VolterraSymbol& q) {
    return p.n == q.n && p.terms == q.terms;
  }
};

namespace detail {

inline std::optional<int> trunc_combine(const std::optional<int>& a, const std::optional<int>& b) {
  if (a && b) return std::max(*a, *b);
  return a ? a : b;
}

}  // namespace detail

template <class C>
VolterraSymbol<C> operator+(const VolterraSymbol<C>& p, const VolterraSymbol<C>& q) {
  if (p.n != q.n) throw std::invalid_argument("symbol dimension mismatch");
  VolterraSymbol<C> out = p;
  for (const auto& [key, c] : q.terms)
    out.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key), c);
  out.trunc_degree = detail::trunc_combine(p.trunc_degree, q.trunc_degree);
  return out;
}

template <class C>
VolterraSymbol<C> operator-(const VolterraSymbol<C>& p) {
  VolterraSymbol<C> out(p.n);
  out.trunc_degree = p.trunc_degree;
  for (const auto& [key, c] : p.terms) out.terms.emplace(key, -c);
  return out;
}

template <class C>
VolterraSymbol<C> operator-(const VolterraSymbol<C>& p, const VolterraSymbol<C>& q) {
  return p + (-q);
}

template <class C>
VolterraSymbol<C> operator*(const VolterraSymbol<C>& p, const C& s) {
  VolterraSymbol<C> out(p.n);
  out.trunc_degree = p.trunc_degree;
  for (const auto& [key, c] : p.terms)
    out.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key), c * s);
  return out;
}

template <class C>
VolterraSymbol<C> operator*(const C& s, const VolterraSymbol<C>& p) {
  return p * s;
}

template <class C>
int parabolic_degree_max(const VolterraSymbol<C>& p) {
  if (p.terms.empty()) throw std::invalid_argument("degree of the zero symbol");
  int m = INT_MIN;
  for (const auto& [key, c] : p.terms)
    m = std::max(m, midx_total(std::get<1>(key)) - 2 * std::get<2>(key));
  return m;
}

template <class C>
int parabolic_degree_min(const VolterraSymbol<C>& p) {
  if (p.terms.empty()) throw std::invalid_argument("degree of the zero symbol");
  int m = INT_MAX;
  for (const auto& [key, c] : p.terms)
    m = std::min(m, midx_total(std::get<1>(key)) - 2 * std::get<2>(key));
  return m;
}

template <class C>
VolterraSymbol<C> homogeneous_part(const VolterraSymbol<C>& p, int degree) {
  VolterraSymbol<C> out(p.n);
  for (const auto& [key, c] : p.terms)
    if (midx_total(std::get<1>(key)) - 2 * std::get<2>(key) == degree)
      out.terms.emplace(key, c);
  return out;
}

// d/dxi_j [x^a xi^b Q^{-k}] = b_j x^a xi^{b-e_j} Q^{-k} - 2k x^a xi^{b+e_j} Q^{-(k+1)}
template <class C>
VolterraSymbol<C> symbol_dxi(const VolterraSymbol<C>& p, int j) {  // j 1-based
  VolterraSymbol<C> out(p.n);
  out.trunc_degree = p.trunc_degree ? std::optional<int>(*p.trunc_degree - 1) : std::nullopt;
  int i = j - 1;
  for (const auto& [key, c] : p.terms) {
    const auto& [a, b, k] = key;
    if (b[i] > 0) {
      MIdx b2 = b;
      --b2[i];
      out.add_term(a, b2, k, c * cx_from_rat<C>(Rat(b[i])));
    }
    if (k != 0) {
      MIdx b2 = b;
      ++b2[i];
      out.add_term(a, b2, k + 1, c * cx_from_rat<C>(Rat(-2 * k)));
    }
  }
  return out;
}

template <class C>
VolterraSymbol<C> symbol_dx(const VolterraSymbol<C>& p, int j) {  // j 1-based
  VolterraSymbol<C> out(p.n);
  out.trunc_degree = p.trunc_degree;
  int i = j - 1;
  for (const auto& [key, c] : p.terms) {
    const auto& [a, b, k] = key;
    if (a[i] > 0) {
      MIdx a2 = a;
      --a2[i];
      out.add_term(a2, b, k, c * cx_from_rat<C>(Rat(a[i])));
    }
  }
  return out;
}

// Pointwise product of symbols (exponents add, heat powers add, coefficients
// wedge left-to-right). This is the composition of x-independent symbols; the
// general composition reduces to it inside the Leibniz sum.
template <class C>
VolterraSymbol<C> symbol_mul(const VolterraSymbol<C>& p, const VolterraSymbol<C>& q) {
  if (p.n != q.n) throw std::invalid_argument("symbol dimension mismatch");
  VolterraSymbol<C> out(p.n);
  for (const auto& [k1, c1] : p.terms)
    for (const auto& [k2, c2] : q.terms) {
      Ext<C> c = wedge(c1, c2);
      if (c.terms.empty()) continue;
      out.add_term(midx_add(std::get<0>(k1), std::get<0>(k2)),
                   midx_add(std::get<1>(k1), std::get<1>(k2)),
                   std::get<2>(k1) + std::get<2>(k2), c);
    }
  if ((p.trunc_degree || q.trunc_degree) && !p.terms.empty() && !q.terms.empty()) {
    int t1 = p.trunc_degree ? *p.trunc_degree + parabolic_degree_max(q) : INT_MIN;
    int t2 = q.trunc_degree ? *q.trunc_degree + parabolic_degree_max(p) : INT_MIN;
    out.trunc_degree = std::max(t1, t2);
  }
  return out;
}

// D_x^g p with D = -i d/dx: terms with x-exponent >= g survive with the
// falling-factorial factor.
template <class C>
VolterraSymbol<C> symbol_Dx(const VolterraSymbol<C>& p, const MIdx& g) {
  VolterraSymbol<C> out(p.n);
  out.trunc_degree = p.trunc_degree;
  C phase = pow_nonneg(-C::i(), midx_total(g));
  for (const auto& [key, c] : p.terms) {
    const auto& [a, b, k] = key;
    if (!midx_le(g, a)) continue;
    C f = phase * cx_from_rat<C>(Rat(midx_falling(a, g)));
    out.add_term(midx_sub(a, g), b, k, c * f);
  }
  return out;
}

template <class C>
VolterraSymbol<C> symbol_dxi_multi(const VolterraSymbol<C>& p, const MIdx& g) {
  VolterraSymbol<C> out = p;
  for (size_t i = 0; i < g.size(); ++i)
    for (int r = 0; r < g[i]; ++r) out = symbol_dxi(out, (int)i + 1);
  return out;
}

// q1 # q2 = sum_g (1/g!) (d/dxi)^g q1 * D_x^g q2; the sum terminates at the
// largest x-exponent of q2.
template <class C>
VolterraSymbol<C> symbol_compose(const VolterraSymbol<C>& q1, const VolterraSymbol<C>& q2) {
  if (q1.n != q2.n) throw std::invalid_argument("symbol dimension mismatch");
  int n = q1.n;
  MIdx bound = midx_zero(n);
  for (const auto& [key, c] : q2.terms)
    for (int i = 0; i < n; ++i) bound[i] = std::max(bound[i], std::get<0>(key)[i]);
  VolterraSymbol<C> out(n);
  for (const MIdx& g : midx_all_below(bound)) {
    VolterraSymbol<C> dq1 = symbol_dxi_multi(q1, g);
    if (dq1.is_zero()) continue;
    VolterraSymbol<C> dq2 = symbol_Dx(q2, g);
    if (dq2.is_zero()) continue;
    out = out + symbol_mul(dq1, dq2) * cx_from_rat<C>(Rat(1) / Rat(midx_factorial(g)));
  }
  if ((q1.trunc_degree || q2.trunc_degree) && !q1.terms.empty() && !q2.terms.empty()) {
    int t1 = q1.trunc_degree ? *q1.trunc_degree + parabolic_degree_max(q2) : INT_MIN;
    int t2 = q2.trunc_degree ? *q2.trunc_degree + parabolic_degree_max(q1) : INT_MIN;
    out.trunc_degree = std::max(t1, t2);
  }
  return out;
}

// Parametrix of L + d/dt for Laplace-type L given by its spatial symbol
// p(x,xi) = |xi|^2 + (lower order), polynomial in xi (no heat factors).
// Returns sum_{j<=J} q_{-2-j} with q_{-2} = (|xi|^2 + i tau)^{-1} and
// (p + i tau) # result = 1 + terms of parabolic degree <= -J-1.
template <class C>
VolterraSymbol<C> heat_parametrix_symbol(const VolterraSymbol<C>& p, int J) {
  if (J < 0) throw std::invalid_argument("J must be >= 0");
  int n = p.n;
  VolterraSymbol<C> expected_lead(n);
  for (int i = 0; i < n; ++i) {
    MIdx b = midx_zero(n);
    b[i] = 2;
    expected_lead.add_term(midx_zero(n), b, 0, Ext<C>::one(n));
  }
  VolterraSymbol<C> r1(n), r0(n);
  for (const auto& [key, c] : p.terms) {
    const auto& [a, b, k] = key;
    if (k != 0) throw std::invalid_argument("spatial symbol must be polynomial in xi");
    int d = midx_total(b);
    if (d > 2) throw std::invalid_argument("operator order exceeds 2");
    if (d == 2) continue;  // validated against expected_lead below
    (d == 1 ? r1 : r0).add_term(a, b, 0, c);
  }
  if (!(homogeneous_part(p, 2) == expected_lead))
    throw std::invalid_argument("leading part must be exactly -Laplacian");

  // r_2 = |xi|^2 + i tau as a single heat factor; r_1, r_0 the lower parts.
  std::vector<VolterraSymbol<C>> r = {r0, r1, VolterraSymbol<C>::heat_factor(n, 1)};
  VolterraSymbol<C> qinv = VolterraSymbol<C>::heat_factor(n, -1);

  std::vector<VolterraSymbol<C>> q(J + 1, VolterraSymbol<C>(n));
  q[0] = qinv;
  for (int j = 1; j <= J; ++j) {
    VolterraSymbol<C> acc(n);
    for (int l = 0; l <= 2; ++l) {
      if (r[l].is_zero()) continue;
      MIdx bound(n, l);  // (d/dxi)^g r_l = 0 once |g| > l
      for (const MIdx& g : midx_all_below(bound)) {
        int jp = j - 2 + l - midx_total(g);
        if (jp < 0 || jp >= j) continue;
        VolterraSymbol<C> dr = symbol_dxi_multi(r[l], g);
        if (dr.is_zero()) continue;
        VolterraSymbol<C> dq = symbol_Dx(q[jp], g);
        if (dq.is_zero()) continue;
        acc = acc + symbol_mul(dr, dq) * cx_from_rat<C>(Rat(1) / Rat(midx_factorial(g)));
      }
    }
    q[j] = -symbol_mul(qinv, acc);
  }
  VolterraSymbol<C> out(n);
  for (int j = 0; j <= J; ++j) out = out + q[j];
  out.trunc_degree = -2 - J;
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian kernels: finite sums of terms
//
//     coeff * x^base w^off t^tpow (4 pi t)^{-n/2} e^{-|w|^2/(4t)}   for t > 0,
//
// and identically 0 for t <= 0 (causality). The kernel of an operator is read
// at w = x - y. t-exponents are kept as exact rationals.

template <class C>
struct GaussianKernel {
  using Key = std::tuple<MIdx, MIdx, Rat>;
  int n = 0;
  std::map<Key, Ext<C>> terms;

  explicit GaussianKernel(int dim = 0) : n(dim) {}

  static GaussianKernel heat(int n) {  // the free heat kernel G_t(w)
    GaussianKernel k(n);
    k.add_term(midx_zero(n), midx_zero(n), Rat(0), Ext<C>::one(n));
    return k;
  }

  void add_term(const MIdx& base, const MIdx& off, const Rat& tpow, const Ext<C>& c) {
    if ((int)base.size() != n || (int)off.size() != n)
      throw std::invalid_argument("multi-index length mismatch");
    if (c.terms.empty()) return;
    Key key{base, off, tpow};
    auto it = terms.find(key);
    if (it == terms.end()) {
      terms.emplace(key, c);
    } else {
      it->second = it->second + c;
      if (it->second.terms.empty()) terms.erase(it);
    }
  }

  bool is_zero() const { return terms.empty(); }

  friend bool operator==(const GaussianKernel& a, const GaussianKernel& b) {
    return a.n == b.n && a.terms == b.terms;
  }
};

template <class C>
GaussianKernel<C> operator+(const GaussianKernel<C>& a, const GaussianKernel<C>& b) {
  if (a.n != b.n) throw std::invalid_argument("kernel dimension mismatch");
  GaussianKernel<C> out = a;
  for (const auto& [key, c] : b.terms)
    out.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key), c);
  return out;
}

template <class C>
GaussianKernel<C> operator-(const GaussianKernel<C>& a) {
  GaussianKernel<C> out(a.n);
  for (const auto& [key, c] : a.terms) out.terms.emplace(key, -c);
  return out;
}

template <class C>
GaussianKernel<C> operator-(const GaussianKernel<C>& a, const GaussianKernel<C>& b) {
  return a + (-b);
}

template <class C>
GaussianKernel<C> operator*(const GaussianKernel<C>& a, const C& s) {
  GaussianKernel<C> out(a.n);
  for (const auto& [key, c] : a.terms)
    out.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key), c * s);
  return out;
}

template <class C>
GaussianKernel<C> operator*(const C& s, const GaussianKernel<C>& a) {
  return a * s;
}

// left wedge by a constant form
template <class C>
GaussianKernel<C> kernel_wedge_left(const Ext<C>& w, const GaussianKernel<C>& a) {
  GaussianKernel<C> out(a.n);
  for (const auto& [key, c] : a.terms)
    out.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key), wedge(w, c));
  return out;
}

template <class C>
GaussianKernel<C> kernel_mul_base(const GaussianKernel<C>& a, int j) {  // * x_j
  GaussianKernel<C> out(a.n);
  for (const auto& [key, c] : a.terms) {
    MIdx b = std::get<0>(key);
    ++b[j - 1];
    out.add_term(b, std::get<1>(key), std::get<2>(key), c);
  }
  return out;
}

template <class C>
GaussianKernel<C> kernel_mul_off(const GaussianKernel<C>& a, int j) {  // * w_j
  GaussianKernel<C> out(a.n);
  for (const auto& [key, c] : a.terms) {
    MIdx o = std::get<1>(key);
    ++o[j - 1];
    out.add_term(std::get<0>(key), o, std::get<2>(key), c);
  }
  return out;
}

template <class C>
GaussianKernel<C> kernel_mul_tpow(const GaussianKernel<C>& a, const Rat& m) {  // * t^m
  GaussianKernel<C> out(a.n);
  for (const auto& [key, c] : a.terms)
    out.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key) + m, c);
  return out;
}

// d/dw_j at fixed base point:
// d/dw_j [w^o t^r G] = o_j w^{o-e_j} t^r G - (1/2) w^{o+e_j} t^{r-1} G
template <class C>
GaussianKernel<C> kernel_doff(const GaussianKernel<C>& a, int j) {
  GaussianKernel<C> out(a.n);
  int i = j - 1;
  for (const auto& [key, c] : a.terms) {
    const auto& [base, off, r] = key;
    if (off[i] > 0) {
      MIdx o = off;
      --o[i];
      out.add_term(base, o, r, c * cx_from_rat<C>(Rat(off[i])));
    }
    MIdx o = off;
    ++o[i];
    out.add_term(base, o, r - 1, c * cx_from_rat<C>(Rat(-1, 2)));
  }
  return out;
}

template <class C>
GaussianKernel<C> kernel_dbase(const GaussianKernel<C>& a, int j) {
  GaussianKernel<C> out(a.n);
  int i = j - 1;
  for (const auto& [key, c] : a.terms) {
    const auto& [base, off, r] = key;
    if (base[i] > 0) {
      MIdx b = base;
      --b[i];
      out.add_term(b, off, r, c * cx_from_rat<C>(Rat(base[i])));
    }
  }
  return out;
}

// derivative in x of K(x, y, t) = khat(x, x - y, t): base and offset both move
template <class C>
GaussianKernel<C> kernel_dx(const GaussianKernel<C>& a, int j) {
  return kernel_dbase(a, j) + kernel_doff(a, j);
}

// d/dt [t^r G_t] = (r - n/2) t^{r-1} G_t + (1/4) |w|^2 t^{r-2} G_t
template <class C>
GaussianKernel<C> kernel_dt(const GaussianKernel<C>& a) {
  GaussianKernel<C> out(a.n);
  for (const auto& [key, c] : a.terms) {
    const auto& [base, off, r] = key;
    Rat lead = r - Rat(a.n, 2);
    if (lead != 0) out.add_term(base, off, r - 1, c * cx_from_rat<C>(lead));
    for (int i = 0; i < a.n; ++i) {
      MIdx o = off;
      o[i] += 2;
      out.add_term(base, o, r - 2, c * cx_from_rat<C>(Rat(1, 4)));
    }
  }
  return out;
}

// Numeric evaluation at x, y, t (floating-point mode; the Gaussian factor is
// transcendental). Returns 0 for t <= 0.
template <class C>
Ext<C> kernel_eval(const GaussianKernel<C>& K, const std::vector<typename C::Real>& x,
                   const std::vector<typename C::Real>& y, typename C::Real t) {
  using R = typename C::Real;
  static_assert(!RealTraits<R>::exact, "numeric kernel evaluation needs floating-point mode");
  if ((int)x.size() != K.n || (int)y.size() != K.n)
    throw std::invalid_argument("point dimension mismatch");
  Ext<C> out = Ext<C>::scalar(K.n, C::zero());
  if (!(t > 0)) return out;
  std::vector<R> w(K.n);
  R wsq = R(0);
  for (int i = 0; i < K.n; ++i) {
    w[i] = x[i] - y[i];
    wsq += w[i] * w[i];
  }
  R gauss = std::pow(4.0 * M_PI * t, -0.5 * K.n) * std::exp(-wsq / (4.0 * t));
  for (const auto& [key, c] : K.terms) {
    const auto& [base, off, r] = key;
    R f = gauss * std::pow(t, RealTraits<Rat>::to_double(r));
    for (int i = 0; i < K.n; ++i) {
      for (int p = 0; p < base[i]; ++p) f *= x[i];
      for (int p = 0; p < off[i]; ++p) f *= w[i];
    }
    out = out + c * C(f);
  }
  return out;
}

// Inverse Fourier transform of a symbol, term by term:
//   (|xi|^2 + i tau)^{-k} -> t^{k-1}/(k-1)! G_t(w)      (k >= 1)
//   xi^beta -> D_w^beta,  x^alpha -> base polynomial.
template <class C>
GaussianKernel<C> symbol_to_kernel(const VolterraSymbol<C>& q) {
  GaussianKernel<C> out(q.n);
  for (const auto& [key, c] : q.terms) {
    const auto& [a, b, k] = key;
    if (k < 1)
      throw std::domain_error("pure differential term has no Gaussian kernel (heat power < 1)");
    GaussianKernel<C> piece(q.n);
    piece.add_term(a, midx_zero(q.n), Rat(k - 1),
                   c * cx_from_rat<C>(Rat(1) / Rat(factorial(k - 1))));
    for (int i = 0; i < q.n; ++i)
      for (int p = 0; p < b[i]; ++p) piece = kernel_doff(piece, i + 1) * (-C::i());
    out = out + piece;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Equivariant fiber integrals. For a kernel K on R^n and a normal rotation
// acting on the last n-a coordinates,
//
//     I(t) = int_{R^{n-a}} K((0,v); (0, (1-phi)v); t) dv
//
// evaluates in closed form by Gaussian moments. The result is a ladder of
// t-powers with form coefficients, scaled by an overall (4 pi t)^{-a/2} that
// is kept symbolic so exact mode never manufactures pi.

template <class C>
struct FiberDensity {
  int n = 0;
  Rat pow4pit;                   // exponent of the overall (4 pi t) factor
  std::map<Rat, Ext<C>> ladder;  // t exponent -> coefficient form

  void add(const Rat& key, const Ext<C>& c) {
    if (c.terms.empty()) return;
    auto it = ladder.find(key);
    if (it == ladder.end()) {
      ladder.emplace(key, c);
    } else {
      it->second = it->second + c;
      if (it->second.terms.empty()) ladder.erase(it);
    }
  }

  Ext<C> coefficient(const Rat& key) const {
    auto it = ladder.find(key);
    return it == ladder.end() ? Ext<C>::scalar(n, C::zero()) : it->second;
  }

  // Collapse the ladder at rational t > 0, leaving (4 pi t)^pow4pit symbolic.
  Ext<C> collapse(const Rat& t) const {
    if (!(t > 0)) throw std::domain_error("t must be positive");
    Ext<C> out = Ext<C>::scalar(n, C::zero());
    for (const auto& [key, c] : ladder) {
      if (denominator(key) != 1) throw std::domain_error("half-integer t-power in exact collapse");
      out = out + c * cx_from_rat<C>(rat_pow(t, numerator(key).template convert_to<long>()));
    }
    return out;
  }

  // Full numeric value at t > 0 (floating-point mode only).
  Ext<C> eval(typename C::Real t) const {
    using R = typename C::Real;
    if constexpr (RealTraits<R>::exact) {
      throw std::domain_error("numeric evaluation needs floating-point mode; use collapse");
    } else {
      if (!(t > 0)) throw std::domain_error("t must be positive");
      Ext<C> out = Ext<C>::scalar(n, C::zero());
      R scale = std::pow(4.0 * M_PI * t, RealTraits<Rat>::to_double(pow4pit));
      for (const auto& [key, c] : ladder)
        out = out + c * C(scale * std::pow(t, RealTraits<Rat>::to_double(key)));
      return out;
    }
  }

  friend bool operator==(const FiberDensity& a, const FiberDensity& b) {
    return a.n == b.n && a.pow4pit == b.pow4pit && a.ladder == b.ladder;
  }
};

template <class C>
FiberDensity<C> fiber_density(const GaussianKernel<C>& K,
                              const NormalAction<typename C::Real>& normal, int a_dim) {
  using R = typename C::Real;
  int n = K.n;
  int nd = n - a_dim;
  if (a_dim < 0 || a_dim > n || a_dim % 2 != 0)
    throw std::invalid_argument("stratum dimension must be even and within [0, n]");
  if (normal.normal_dim() != nd)
    throw std::invalid_argument("normal action does not span the normal directions");

  FiberDensity<C> out;
  out.n = n;
  out.pow4pit = Rat(-a_dim, 2);
  if (K.terms.empty()) return out;

  // scalar entries of (1 - phi)^{-1} on the normal block
  FMat<C> Mi = normal.template one_minus_inverse<C>(n);
  std::vector<C> M((size_t)nd * nd, C::zero());
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < nd; ++j) M[(size_t)i * nd + j] = Mi.at(i, j).coeff(0);
  R ds = normal.det_sqrt();
  R jac_r = R(1) / (ds * ds);  // dv = du / det(1-phi), det = det_sqrt^2 > 0
  C jac(jac_r);

  for (const auto& [key, coeff] : K.terms) {
    const auto& [base, off, rho] = key;
    bool horiz = false;
    for (int i = 0; i < a_dim; ++i)
      if (base[i] != 0 || off[i] != 0) horiz = true;  // x' = 0 and w' = 0 on the slice
    if (horiz) continue;

    // expand v^{base''} with v = (1-phi)^{-1} u into a u-polynomial
    std::map<MIdx, C> poly;
    poly.emplace(midx_zero(nd), C::one());
    for (int i = 0; i < nd; ++i) {
      for (int rep = 0; rep < base[a_dim + i]; ++rep) {
        std::map<MIdx, C> next;
        for (const auto& [d, cval] : poly)
          for (int j = 0; j < nd; ++j) {
            if (M[(size_t)i * nd + j].is_zero()) continue;
            MIdx d2 = d;
            ++d2[j];
            auto it = next.find(d2);
            C add = cval * M[(size_t)i * nd + j];
            if (it == next.end())
              next.emplace(d2, add);
            else
              it->second += add;
          }
        poly = std::move(next);
      }
    }

    for (const auto& [d, cval] : poly) {
      if (cval.is_zero()) continue;
      // total u-exponents: polynomial part plus the offset exponents w'' = u
      MIdx utot(nd);
      bool odd = false;
      for (int j = 0; j < nd; ++j) {
        utot[j] = d[j] + off[a_dim + j];
        if (utot[j] % 2 != 0) odd = true;
      }
      if (odd) continue;  // odd Gaussian moment
      // int u^{2m} e^{-u^2/4t} du = (2m-1)!! (2t)^m sqrt(4 pi t) per coordinate
      Rat mom(1);
      int half = 0;
      for (int j = 0; j < nd; ++j) {
        mom *= double_factorial(utot[j] - 1);
        half += utot[j] / 2;
      }
      mom *= rat_pow(Rat(2), half);
      Rat tkey = rho + half;
      out.add(tkey, coeff * (jac * cx_from_rat<C>(mom) * cval));
    }
  }
  return out;
}

// I_Q(0, t) at a concrete t. Floating-point mode returns the full numeric
// value; exact mode is available when a = 0 (otherwise the (4 pi t)^{-a/2}
// factor is irrational -- use fiber_density and keep it symbolic).
template <class C>
Ext<C> fiber_integral_IQ(const GaussianKernel<C>& K, const NormalAction<typename C::Real>& normal,
                         int a_dim, typename C::Real t) {
  FiberDensity<C> d = fiber_density(K, normal, a_dim);
  if constexpr (RealTraits<typename C::Real>::exact) {
    if (a_dim != 0)
      throw std::domain_error("exact fiber integral with a > 0 carries (4 pi t)^{-a/2}; use fiber_density");
    return d.collapse(t);
  } else {
    return d.eval(t);
  }
}

// Coefficients I^(j) of the small-time expansion of the fiber integral of a
// symbol with homogeneous layers q_m, q_{m-1}, ...: the j-th coefficient sits
// at t^{-([m/2]+1)+j} relative to the overall (4 pi t)^{-a/2} factor (so the
// absolute power is t^{-(a/2+[m/2]+1)+j}). Only integer powers occur; odd
// parity slots vanish. For truncated expansions, layers down to degree
// m - 2*j_max - (m mod 2) must be present.
template <class C>
std::vector<Ext<C>> asymptotic_coefficients(const VolterraSymbol<C>& q,
                                            const NormalAction<typename C::Real>& normal,
                                            int a_dim, int j_max) {
  if (q.terms.empty()) throw std::invalid_argument("empty symbol");
  if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
  int m = parabolic_degree_max(q);
  int parity = m - 2 * floor_div(m, 2);
  if (q.trunc_degree && *q.trunc_degree > m - (2 * j_max + parity))
    throw std::invalid_argument("insufficient homogeneous layers for requested j_max");
  FiberDensity<C> dens = fiber_density(symbol_to_kernel(q), normal, a_dim);
  std::vector<Ext<C>> out;
  out.reserve(j_max + 1);
  for (int j = 0; j <= j_max; ++j)
    out.push_back(dens.coefficient(Rat(j - (floor_div(m, 2) + 1))));
  return out;
}

}  // namespace eqi
