#pragma once
// Square matrices with even-degree exterior-form entries (curvature blocks),
// matrix series in the nilpotent ideal, and det^{1/2} via exp(1/2 tr log).

#include "eqi/series.hpp"

namespace eqi {

template <class C>
struct FMat {
  int n = 0;     // ambient exterior dimension
  int size = 0;  // square size
  std::vector<Ext<C>> e;

  FMat() = default;
  FMat(int n_, int size_) : n(n_), size(size_), e(size_t(size_) * size_, Ext<C>(n_)) {}

  Ext<C>& at(int i, int j) { return e[size_t(i) * size + j]; }
  const Ext<C>& at(int i, int j) const { return e[size_t(i) * size + j]; }

  static FMat identity(int n_, int size_) {
    FMat m(n_, size_);
    for (int i = 0; i < size_; ++i) m.at(i, i) = Ext<C>::one(n_);
    return m;
  }

  bool is_zero() const {
    for (auto& x : e)
      if (!x.is_zero()) return false;
    return true;
  }

  friend bool operator==(const FMat& a, const FMat& b) {
    return a.n == b.n && a.size == b.size && a.e == b.e;
  }
};

namespace detail {
inline void check_same_shape(int n1, int s1, int n2, int s2) {
  if (n1 != n2 || s1 != s2) throw std::invalid_argument("matrix shape mismatch");
}
}  // namespace detail

template <class C>
FMat<C> operator+(const FMat<C>& a, const FMat<C>& b) {
  detail::check_same_shape(a.n, a.size, b.n, b.size);
  FMat<C> r = a;
  for (size_t i = 0; i < r.e.size(); ++i) r.e[i] = r.e[i] + b.e[i];
  return r;
}

template <class C>
FMat<C> operator-(const FMat<C>& a, const FMat<C>& b) {
  detail::check_same_shape(a.n, a.size, b.n, b.size);
  FMat<C> r = a;
  for (size_t i = 0; i < r.e.size(); ++i) r.e[i] = r.e[i] - b.e[i];
  return r;
}

template <class C>
FMat<C> operator-(const FMat<C>& a) {
  FMat<C> r = a;
  for (auto& x : r.e) x = -x;
  return r;
}

template <class C>
FMat<C> operator*(const FMat<C>& a, const FMat<C>& b) {
  detail::check_same_shape(a.n, a.size, b.n, b.size);
  FMat<C> r(a.n, a.size);
  for (int i = 0; i < a.size; ++i)
    for (int k = 0; k < a.size; ++k) {
      if (a.at(i, k).is_zero()) continue;
      for (int j = 0; j < a.size; ++j)
        r.at(i, j) = r.at(i, j) + wedge(a.at(i, k), b.at(k, j));
    }
  return r;
}

template <class C>
FMat<C> operator*(const FMat<C>& a, const C& s) {
  FMat<C> r = a;
  for (auto& x : r.e) x = x * s;
  return r;
}

template <class C>
FMat<C> scale_form(const FMat<C>& a, const Ext<C>& w) {
  FMat<C> r = a;
  for (auto& x : r.e) x = wedge(w, x);
  return r;
}

template <class C>
FMat<C> scale_form_right(const FMat<C>& a, const Ext<C>& w) {
  FMat<C> r = a;
  for (auto& x : r.e) x = wedge(x, w);
  return r;
}

template <class C>
FMat<C> transpose(const FMat<C>& a) {
  FMat<C> r(a.n, a.size);
  for (int i = 0; i < a.size; ++i)
    for (int j = 0; j < a.size; ++j) r.at(i, j) = a.at(j, i);
  return r;
}

template <class C>
Ext<C> trace(const FMat<C>& a) {
  Ext<C> r(a.n);
  for (int i = 0; i < a.size; ++i) r = r + a.at(i, i);
  return r;
}

template <class C>
bool is_antisymmetric(const FMat<C>& a) {
  return (a + transpose(a)).is_zero();
}

template <class C>
bool entries_even(const FMat<C>& a) {
  for (auto& x : a.e)
    for (auto& [m, v] : x.terms)
      if (std::popcount(m) % 2 != 0) return false;
  return true;
}

// All entries have zero scalar part (so the matrix is nilpotent entrywise and
// as a matrix: the minimum form degree grows under multiplication).
template <class C>
bool entries_nilpotent(const FMat<C>& a) {
  for (auto& x : a.e)
    if (!scalar_part(x).is_zero()) return false;
  return true;
}

// sum_k c_k M^k for M with nilpotent entries; terminates when M^k = 0.
template <class C>
FMat<C> mat_apply_series(const RSeries& c, const FMat<C>& m) {
  if (!entries_nilpotent(m)) throw std::domain_error("matrix series argument must be nilpotent");
  FMat<C> acc(m.n, m.size), pw = FMat<C>::identity(m.n, m.size);
  for (size_t k = 0; k < c.size(); ++k) {
    if (c[k] != 0) acc = acc + pw * cx_from_rat<C>(c[k]);
    pw = pw * m;
    if (pw.is_zero()) break;
  }
  return acc;
}

// det^{p}(I + N) = exp(p tr log(I + N)) for N with nilpotent entries; the
// rational exponent p covers the +-1/2 branches with positive scalar part.
template <class C>
Ext<C> det_power_one_plus(const FMat<C>& nil, const Rat& p) {
  size_t len = size_t(nil.n) + 2;
  FMat<C> lg = mat_apply_series(series_log1p(len), nil);
  Ext<C> tl = trace(lg) * cx_from_rat<C>(p);
  return ext_exp(tl);
}

// Inverse of a matrix with pure scalar entries (exact Gaussian elimination).
template <class C>
FMat<C> scalar_mat_inverse(const FMat<C>& m) {
  int s = m.size;
  std::vector<C> a(size_t(s) * s), inv(size_t(s) * s, C::zero());
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      const Ext<C>& x = m.at(i, j);
      if (!nilpotent_part(x).is_zero())
        throw std::domain_error("scalar_mat_inverse: non-scalar entry");
      a[size_t(i) * s + j] = scalar_part(x);
      if (i == j) inv[size_t(i) * s + j] = C::one();
    }
  for (int col = 0; col < s; ++col) {
    int piv = -1;
    for (int r = col; r < s; ++r)
      if (!a[size_t(r) * s + col].is_zero()) { piv = r; break; }
    if (piv < 0) throw std::domain_error("singular scalar matrix");
    if (piv != col)
      for (int j = 0; j < s; ++j) {
        std::swap(a[size_t(piv) * s + j], a[size_t(col) * s + j]);
        std::swap(inv[size_t(piv) * s + j], inv[size_t(col) * s + j]);
      }
    C d = a[size_t(col) * s + col];
    for (int j = 0; j < s; ++j) {
      a[size_t(col) * s + j] = a[size_t(col) * s + j] / d;
      inv[size_t(col) * s + j] = inv[size_t(col) * s + j] / d;
    }
    for (int r = 0; r < s; ++r) {
      if (r == col) continue;
      C f = a[size_t(r) * s + col];
      if (f.is_zero()) continue;
      for (int j = 0; j < s; ++j) {
        a[size_t(r) * s + j] = a[size_t(r) * s + j] - f * a[size_t(col) * s + j];
        inv[size_t(r) * s + j] = inv[size_t(r) * s + j] - f * inv[size_t(col) * s + j];
      }
    }
  }
  FMat<C> r(m.n, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) r.at(i, j) = Ext<C>::scalar(m.n, inv[size_t(i) * s + j]);
  return r;
}

template <class R2, class R1>
R2 real_convert(const R1& x) {
  if constexpr (std::is_same_v<R1, R2>)
    return x;
  else
    return R2(RealTraits<R1>::to_double(x));
}

template <class C2, class C1>
Ext<C2> ext_cast(const Ext<C1>& a) {
  Ext<C2> r(a.n);
  for (auto& [m, v] : a.terms) {
    C2 w(real_convert<typename C2::Real>(v.re), real_convert<typename C2::Real>(v.im));
    if (!w.is_zero()) r.terms.emplace(m, w);
  }
  return r;
}

template <class C2, class C1>
FMat<C2> fmat_cast(const FMat<C1>& a) {
  FMat<C2> r(a.n, a.size);
  for (size_t i = 0; i < a.e.size(); ++i) r.e[i] = ext_cast<C2>(a.e[i]);
  return r;
}

}  // namespace eqi
