#pragma once
// Exact truncated power series over Rat, the named series used by the
// characteristic-form and Mehler layers, and analytic functions of
// scalar-plus-nilpotent exterior elements. All coefficient tables are
// generated by series arithmetic, never typed in.

#include "eqi/exterior.hpp"

namespace eqi {

using RSeries = std::vector<Rat>;  // c[k] = coefficient of x^k

inline RSeries ps_mul(const RSeries& a, const RSeries& b, size_t len) {
  RSeries r(len, Rat(0));
  for (size_t i = 0; i < a.size() && i < len; ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j < b.size() && i + j < len; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

inline RSeries ps_inv(const RSeries& a, size_t len) {
  if (a.empty() || a[0] == 0) throw std::domain_error("series not invertible");
  RSeries r(len, Rat(0));
  r[0] = Rat(1) / a[0];
  for (size_t k = 1; k < len; ++k) {
    Rat s(0);
    for (size_t j = 1; j <= k && j < a.size(); ++j) s += a[j] * r[k - j];
    r[k] = -s / a[0];
  }
  return r;
}

inline RSeries ps_log(const RSeries& a, size_t len) {  // log a, needs a[0] = 1
  if (a.empty() || a[0] != 1) throw std::domain_error("series log needs unit constant term");
  RSeries l(len, Rat(0));
  for (size_t k = 1; k < len; ++k) {
    Rat s = k < a.size() ? a[k] : Rat(0);
    for (size_t j = 1; j < k; ++j) {
      if (l[j] == 0 || k - j >= a.size()) continue;
      s -= Rat((long)j) * l[j] * a[k - j] / Rat((long)k);
    }
    l[k] = s;
  }
  return l;
}

inline RSeries series_exp(size_t len) {
  RSeries r(len);
  for (size_t k = 0; k < len; ++k) r[k] = Rat(1) / factorial((long)k);
  return r;
}

inline RSeries series_log1p(size_t len) {  // log(1+x)
  RSeries r(len, Rat(0));
  for (size_t k = 1; k < len; ++k) r[k] = Rat((k & 1) ? 1 : -1) / Rat((long)k);
  return r;
}

inline RSeries series_inv1p(size_t len) {  // 1/(1+x)
  RSeries r(len);
  for (size_t k = 0; k < len; ++k) r[k] = Rat((k & 1) ? -1 : 1);
  return r;
}

inline RSeries series_sqrt1p(size_t len) {  // (1+x)^{1/2}
  RSeries r(len, Rat(0));
  Rat c(1);
  r[0] = c;
  for (size_t k = 1; k < len; ++k) {
    c *= (Rat(1, 2) - Rat((long)k - 1)) / Rat((long)k);
    r[k] = c;
  }
  return r;
}

// sinh(x/2)/(x/2) and cosh(x/2); even series.
inline RSeries series_sinhc_half(size_t len) {
  RSeries r(len, Rat(0));
  for (size_t k = 0; 2 * k < len; ++k)
    r[2 * k] = Rat(1) / (rat_pow(Rat(4), (long)k) * factorial(2 * (long)k + 1));
  return r;
}

inline RSeries series_cosh_half(size_t len) {
  RSeries r(len, Rat(0));
  for (size_t k = 0; 2 * k < len; ++k)
    r[2 * k] = Rat(1) / (rat_pow(Rat(4), (long)k) * factorial(2 * (long)k));
  return r;
}

// (x/2)/sinh(x/2) = 1 - x^2/24 + 7 x^4/5760 - ...
inline RSeries series_half_x_over_sinh(size_t len) {
  return ps_inv(series_sinhc_half(len), len);
}

// (x/2)/tanh(x/2) = 1 + x^2/12 - x^4/720 + ...
inline RSeries series_half_x_over_tanh(size_t len) {
  return ps_mul(series_cosh_half(len), series_half_x_over_sinh(len), len);
}

// x/(1 - e^{-x}) = 1 + x/2 + x^2/12 - x^4/720 + ...
inline RSeries series_todd_inverse_style(size_t len) {
  RSeries g(len, Rat(0));  // (1 - e^{-x})/x
  for (size_t k = 0; k < len; ++k)
    g[k] = Rat((k & 1) ? -1 : 1) / factorial((long)k + 1);
  return ps_inv(g, len);
}

// 1 - e^{-x} = x - x^2/2 + x^3/6 - ... (vanishing constant term)
inline RSeries series_one_minus_exp_neg(size_t len) {
  RSeries r(len, Rat(0));
  for (size_t k = 1; k < len; ++k) r[k] = Rat((k & 1) ? 1 : -1) / factorial((long)k);
  return r;
}

template <class C>
C scalar_part(const Ext<C>& a) {
  return a.coeff(0);
}

template <class C>
Ext<C> nilpotent_part(const Ext<C>& a) {
  Ext<C> r = a;
  r.terms.erase(0u);
  return r;
}

// sum_k c_k u^k for u nilpotent; terminates when u^k = 0.
template <class C>
Ext<C> apply_series_nilpotent(const RSeries& c, const Ext<C>& u) {
  if (!scalar_part(u).is_zero()) throw std::domain_error("series argument must be nilpotent");
  Ext<C> acc(u.n), pw = Ext<C>::one(u.n);
  for (size_t k = 0; k < c.size(); ++k) {
    if (c[k] != 0) acc = acc + pw * cx_from_rat<C>(c[k]);
    pw = wedge(pw, u);
    if (pw.is_zero()) break;
  }
  return acc;
}

namespace detail {
template <class C>
size_t series_len(const Ext<C>& a) {
  return (size_t)a.n + 2;
}

// scalar branches; exact mode only admits values the field can represent
template <class R>
Cx<R> scalar_exp(const Cx<R>& s) {
  if constexpr (RealTraits<R>::exact) {
    if (!s.is_zero()) throw std::domain_error("exact exp needs zero scalar part");
    return Cx<R>::one();
  } else {
    return cx_from_std(std::exp(cx_to_std(s)));
  }
}

template <class R>
Cx<R> scalar_log(const Cx<R>& s) {
  if constexpr (RealTraits<R>::exact) {
    if (!(s == Cx<R>::one())) throw std::domain_error("exact log needs scalar part 1");
    return Cx<R>::zero();
  } else {
    if (s.is_zero()) throw std::domain_error("log of zero scalar part");
    return cx_from_std(std::log(cx_to_std(s)));
  }
}

template <class R>
Cx<R> scalar_sqrt(const Cx<R>& s) {
  if (!(s.im == R(0)) || !(s.re > R(0)))
    throw std::domain_error("principal sqrt needs positive real scalar part");
  if constexpr (RealTraits<R>::exact) {
    Rat r;
    if (!try_sqrt_rat(s.re, r)) throw std::domain_error("exact sqrt of non-square scalar");
    return Cx<R>(r);
  } else {
    return Cx<R>(std::sqrt(s.re));
  }
}
}  // namespace detail

enum class SeriesFn { Exp, Log, Inverse, Sqrt };

// Analytic function of a = s + u with u nilpotent. Exact mode restricts s to
// values representable in the rational field (exp: s = 0, log: s = 1,
// sqrt: s a positive rational square, inverse: any s != 0).
template <class C>
Ext<C> analytic_series(SeriesFn f, const Ext<C>& a) {
  const size_t len = detail::series_len(a);
  C s = scalar_part(a);
  Ext<C> u = nilpotent_part(a);
  switch (f) {
    case SeriesFn::Exp: {
      C es = detail::scalar_exp(s);
      return apply_series_nilpotent(series_exp(len), u) * es;
    }
    case SeriesFn::Log: {
      C ls = detail::scalar_log(s);
      Ext<C> rel = u * (C::one() / s);
      Ext<C> r = apply_series_nilpotent(series_log1p(len), rel);
      r.add_term(0u, ls);
      return r;
    }
    case SeriesFn::Inverse: {
      if (s.is_zero()) throw std::domain_error("inverse of element with zero scalar part");
      Ext<C> rel = u * (C::one() / s);
      return apply_series_nilpotent(series_inv1p(len), rel) * (C::one() / s);
    }
    case SeriesFn::Sqrt: {
      C rs = detail::scalar_sqrt(s);
      Ext<C> rel = u * (C::one() / s);
      return apply_series_nilpotent(series_sqrt1p(len), rel) * rs;
    }
  }
  throw std::logic_error("unreachable");
}

template <class C>
Ext<C> ext_exp(const Ext<C>& a) {
  return analytic_series(SeriesFn::Exp, a);
}
template <class C>
Ext<C> ext_log(const Ext<C>& a) {
  return analytic_series(SeriesFn::Log, a);
}
template <class C>
Ext<C> ext_inv(const Ext<C>& a) {
  return analytic_series(SeriesFn::Inverse, a);
}
template <class C>
Ext<C> ext_sqrt(const Ext<C>& a) {
  return analytic_series(SeriesFn::Sqrt, a);
}

}  // namespace eqi
