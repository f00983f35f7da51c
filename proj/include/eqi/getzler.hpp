#pragma once
// Polynomial differential operators with Clifford factors and twist blocks,
// graded by the rescaling degree
//
//     deg = (form degree of the coefficient) + |d_exp| + #clifford
//           + 2*(d/dt power) - |x_exp|.
//
// A term is  coeff_block * x^alpha c(dx^{i1})...c(dx^{ik}) d^beta (d/dt)^dt,
// where coeff_block is a rank x rank matrix of forms (rank 1 = untwisted).
// Forms, Clifford factors and twist blocks act on independent tensor factors;
// twist blocks multiply in operator order, forms wedge in operator order.

#include <bit>
#include <climits>
#include <map>
#include <stdexcept>
#include <tuple>

#include <eqi/form_matrix.hpp>
#include <eqi/multiindex.hpp>
#include <eqi/volterra.hpp>

namespace eqi {

template <class C>
struct GOp {
  using Key = std::tuple<MIdx, MIdx, uint32_t, int>;  // (x_exp, d_exp, clifford mask, dt power)
  int n = 0;
  int rank = 1;
  std::map<Key, FMat<C>> terms;

  explicit GOp(int dim = 0, int twist_rank = 1) : n(dim), rank(twist_rank) {}

  static GOp zero(int n, int rank = 1) { return GOp(n, rank); }

  static GOp scalar_op(int n, const C& c) {
    GOp p(n);
    FMat<C> blk(n, 1);
    blk.at(0, 0) = Ext<C>::scalar(n, c);
    p.add_term(midx_zero(n), midx_zero(n), 0, 0, blk);
    return p;
  }

  static GOp identity(int n, int rank = 1) {
    GOp p(n, rank);
    p.add_term(midx_zero(n), midx_zero(n), 0, 0, FMat<C>::identity(n, rank));
    return p;
  }

  static GOp d(int n, int j) {  // d/dx_j, 1-based
    GOp p(n);
    FMat<C> blk(n, 1);
    blk.at(0, 0) = Ext<C>::one(n);
    p.add_term(midx_zero(n), midx_unit(n, j - 1), 0, 0, blk);
    return p;
  }

  static GOp x(int n, int j) {
    GOp p(n);
    FMat<C> blk(n, 1);
    blk.at(0, 0) = Ext<C>::one(n);
    p.add_term(midx_unit(n, j - 1), midx_zero(n), 0, 0, blk);
    return p;
  }

  static GOp clifford(int n, int j) {  // c(dx^j)
    GOp p(n);
    FMat<C> blk(n, 1);
    blk.at(0, 0) = Ext<C>::one(n);
    p.add_term(midx_zero(n), midx_zero(n), uint32_t(1) << (j - 1), 0, blk);
    return p;
  }

  static GOp dt(int n) {
    GOp p(n);
    FMat<C> blk(n, 1);
    blk.at(0, 0) = Ext<C>::one(n);
    p.add_term(midx_zero(n), midx_zero(n), 0, 1, blk);
    return p;
  }

  // untwisted term with a form coefficient
  static GOp form_term(int n, const Ext<C>& w, const MIdx& a, const MIdx& b,
                       uint32_t cliff = 0, int dtp = 0) {
    GOp p(n);
    FMat<C> blk(n, 1);
    blk.at(0, 0) = w;
    p.add_term(a, b, cliff, dtp, blk);
    return p;
  }

  void add_term(const MIdx& a, const MIdx& b, uint32_t cliff, int dtp, const FMat<C>& blk) {
    if ((int)a.size() != n || (int)b.size() != n)
      throw std::invalid_argument("multi-index length mismatch");
    if (blk.size != rank || blk.n != n) throw std::invalid_argument("coefficient block mismatch");
    if (blk.is_zero()) return;
    Key key{a, b, cliff, dtp};
    auto it = terms.find(key);
    if (it == terms.end()) {
      terms.emplace(key, blk);
    } else {
      it->second = it->second + blk;
      if (it->second.is_zero()) terms.erase(it);
    }
  }

  bool is_zero() const { return terms.empty(); }

  friend bool operator==(const GOp& p, const GOp& q) {
    return p.n == q.n && p.rank == q.rank && p.terms == q.terms;
  }
};

template <class C>
GOp<C> operator+(const GOp<C>& p, const GOp<C>& q) {
  if (p.n != q.n || p.rank != q.rank) throw std::invalid_argument("operator shape mismatch");
  GOp<C> out = p;
  for (const auto& [key, blk] : q.terms)
    out.add_term(std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), blk);
  return out;
}

template <class C>
GOp<C> operator-(const GOp<C>& p) {
  GOp<C> out(p.n, p.rank);
  for (const auto& [key, blk] : p.terms) out.terms.emplace(key, -blk);
  return out;
}

template <class C>
GOp<C> operator-(const GOp<C>& p, const GOp<C>& q) { return p + (-q); }

template <class C>
GOp<C> operator*(const GOp<C>& p, const C& s) {
  GOp<C> out(p.n, p.rank);
  for (const auto& [key, blk] : p.terms) out.terms.emplace(key, blk * s);
  return out;
}

template <class C>
GOp<C> operator*(const C& s, const GOp<C>& p) { return p * s; }

// Operator product. Leibniz rule moves d^{beta1} across x^{alpha2}; Clifford
// words multiply by the Clifford relations; twist blocks multiply in order.
template <class C>
GOp<C> gop_compose(const GOp<C>& p, const GOp<C>& q) {
  if (p.n != q.n || p.rank != q.rank) throw std::invalid_argument("operator shape mismatch");
  int n = p.n;
  GOp<C> out(n, p.rank);
  for (const auto& [k1, b1] : p.terms)
    for (const auto& [k2, b2] : q.terms) {
      const auto& [a1, be1, cl1, dt1] = k1;
      const auto& [a2, be2, cl2, dt2] = k2;
      // clifford word product expands into a signed sum of masks
      Ext<C> w1(n), w2(n);
      w1.terms.emplace(cl1, C::one());
      w2.terms.emplace(cl2, C::one());
      Ext<C> cw = clifford_product(w1, w2);
      FMat<C> blk = b1 * b2;
      if (blk.is_zero()) continue;
      MIdx bound(n);
      for (int i = 0; i < n; ++i) bound[i] = std::min(be1[i], a2[i]);
      for (const MIdx& g : midx_all_below(bound)) {
        Rat f(midx_binom(be1, g) * midx_falling(a2, g));
        FMat<C> scaled = blk * cx_from_rat<C>(f);
        MIdx a = midx_add(a1, midx_sub(a2, g));
        MIdx be = midx_add(midx_sub(be1, g), be2);
        for (const auto& [mask, sgn] : cw.terms)
          out.add_term(a, be, mask, dt1 + dt2, scaled * sgn);
      }
    }
  return out;
}

namespace detail {

template <class C>
FMat<C> block_degree_part(const FMat<C>& blk, int d) {
  FMat<C> out(blk.n, blk.size);
  for (int i = 0; i < blk.size * blk.size; ++i) out.e[i] = degree_part(blk.e[i], d);
  return out;
}

template <class C>
int block_max_degree(const FMat<C>& blk) {
  int m = -1;
  for (const auto& e : blk.e)
    for (const auto& [mask, c] : e.terms) m = std::max(m, std::popcount(mask));
  return m;
}

}  // namespace detail

// Rescaling order and model operator: the order is the maximal degree over
// terms and form-degree layers of their coefficients; the model keeps the
// maximal layers with every Clifford word replaced by the corresponding
// exterior factor (wedged onto the coefficient).
template <class C>
std::pair<int, GOp<C>> getzler_order_and_model(const GOp<C>& p) {
  int order = INT_MIN;
  for (const auto& [key, blk] : p.terms) {
    const auto& [a, b, cl, dtp] = key;
    int base = midx_total(b) + std::popcount(cl) + 2 * dtp - midx_total(a);
    for (int f = 0; f <= detail::block_max_degree(blk); ++f)
      if (!detail::block_degree_part(blk, f).is_zero()) order = std::max(order, base + f);
  }
  GOp<C> model(p.n, p.rank);
  if (order == INT_MIN) return {order, model};
  for (const auto& [key, blk] : p.terms) {
    const auto& [a, b, cl, dtp] = key;
    int base = midx_total(b) + std::popcount(cl) + 2 * dtp - midx_total(a);
    int f = order - base;
    if (f < 0) continue;
    FMat<C> layer = detail::block_degree_part(blk, f);
    if (layer.is_zero()) continue;
    Ext<C> dxw(p.n);
    dxw.terms.emplace(cl, C::one());
    model.add_term(a, b, 0, dtp, scale_form_right(layer, dxw));
  }
  return {order, model};
}

// top-degree part of p with Clifford words replaced by exterior factors
template <class C>
GOp<C> model_degree_part(const GOp<C>& p, int degree) {
  GOp<C> out(p.n, p.rank);
  for (const auto& [key, blk] : p.terms) {
    const auto& [a, b, cl, dtp] = key;
    int base = midx_total(b) + std::popcount(cl) + 2 * dtp - midx_total(a);
    int f = degree - base;
    if (f < 0) continue;
    FMat<C> layer = detail::block_degree_part(blk, f);
    if (layer.is_zero()) continue;
    Ext<C> dxw(p.n);
    dxw.terms.emplace(cl, C::one());
    out.add_term(a, b, 0, dtp, scale_form_right(layer, dxw));
  }
  return out;
}

// The model of a product agrees with the product of the models at total order
// m1 + m2 (either both sides carry that order, or both vanish there).
template <class C>
bool model_product_check(const GOp<C>& p, const GOp<C>& q) {
  if (p.is_zero() || q.is_zero()) return true;
  auto [m1, mod1] = getzler_order_and_model(p);
  auto [m2, mod2] = getzler_order_and_model(q);
  GOp<C> lhs = model_degree_part(gop_compose(p, q), m1 + m2);
  GOp<C> rhs = model_degree_part(gop_compose(mod1, mod2), m1 + m2);
  return lhs == rhs;
}

// Full symbol of a Clifford-free scalar operator: d^beta -> (i xi)^beta,
// (d/dt)^m -> (i tau)^m = (heat factor - |xi|^2)^m.
template <class C>
VolterraSymbol<C> gop_to_symbol(const GOp<C>& p) {
  if (p.rank != 1) throw std::invalid_argument("symbol extraction needs an untwisted operator");
  int n = p.n;
  VolterraSymbol<C> itau(n);  // i tau = (|xi|^2 + i tau) - |xi|^2
  itau.add_term(midx_zero(n), midx_zero(n), -1, Ext<C>::one(n));
  for (int i = 0; i < n; ++i) {
    MIdx b = midx_zero(n);
    b[i] = 2;
    itau.add_term(midx_zero(n), b, 0, -Ext<C>::one(n));
  }
  VolterraSymbol<C> out(n);
  for (const auto& [key, blk] : p.terms) {
    const auto& [a, b, cl, dtp] = key;
    if (cl != 0) throw std::invalid_argument("symbol extraction needs a Clifford-free operator");
    VolterraSymbol<C> piece(n);
    piece.add_term(a, b, 0, blk.at(0, 0) * pow_nonneg(C::i(), midx_total(b)));
    for (int r = 0; r < dtp; ++r) piece = symbol_mul(piece, itau);
    out = out + piece;
  }
  return out;
}

// Heat parametrix of a Laplace-type operator L = -Laplacian + b_i(x) d_i + c(x)
// (Clifford-free, polynomial coefficients, forms allowed in b and c).
template <class C>
VolterraSymbol<C> heat_parametrix(const GOp<C>& L, int J) {
  for (const auto& [key, blk] : L.terms)
    if (std::get<3>(key) != 0)
      throw std::invalid_argument("spatial operator must not contain d/dt");
  return heat_parametrix_symbol(gop_to_symbol(L), J);
}

// Apply a Clifford-free scalar operator to a Gaussian kernel in its base
// variable x (the offset w = x - y moves along).
template <class C>
GaussianKernel<C> apply_gop_to_kernel(const GOp<C>& p, const GaussianKernel<C>& K) {
  if (p.rank != 1) throw std::invalid_argument("kernel application needs an untwisted operator");
  if (p.n != K.n) throw std::invalid_argument("dimension mismatch");
  GaussianKernel<C> out(K.n);
  for (const auto& [key, blk] : p.terms) {
    const auto& [a, b, cl, dtp] = key;
    if (cl != 0) throw std::invalid_argument("kernel application needs a Clifford-free operator");
    GaussianKernel<C> piece = K;
    for (int r = 0; r < dtp; ++r) piece = kernel_dt(piece);
    for (int i = 0; i < K.n; ++i)
      for (int r = 0; r < b[i]; ++r) piece = kernel_dx(piece, i + 1);
    for (int i = 0; i < K.n; ++i)
      for (int r = 0; r < a[i]; ++r) piece = kernel_mul_base(piece, i + 1);
    out = out + kernel_wedge_left(blk.at(0, 0), piece);
  }
  return out;
}

}  // namespace eqi
