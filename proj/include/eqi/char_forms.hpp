#pragma once
// Characteristic forms of the fixed-point formula: the A-hat genus, the
// equivariant normal factor nu_phi, the equivariant Chern character, and the
// scalar determinant of 1 - phi^N. The normal rotation angles are stored as
// half-angle cosine/sine pairs so that exact mode works on rational points of
// the unit circle (e.g. (3/5, 4/5)); the f64 constructor accepts raw angles.

#include "eqi/form_matrix.hpp"

namespace eqi {

template <class R>
struct NormalAction {
  // (cos(theta_j/2), sin(theta_j/2)) per normal 2-plane, theta_j in (0, pi]
  std::vector<std::pair<R, R>> half;

  NormalAction() = default;

  static NormalAction from_half_pairs(std::vector<std::pair<R, R>> pairs) {
    NormalAction a;
    for (auto& [c, s] : pairs) {
      if constexpr (RealTraits<R>::exact) {
        if (c * c + s * s != R(1)) throw std::domain_error("half-angle pair not on unit circle");
      } else {
        if (std::abs(c * c + s * s - 1.0) > 1e-12)
          throw std::domain_error("half-angle pair not on unit circle");
      }
      if (!(s > R(0)) || c < R(0)) throw std::domain_error("rotation angle outside (0, pi]");
    }
    a.half = std::move(pairs);
    return a;
  }

  static NormalAction from_angles(const std::vector<double>& theta) {
    static_assert(!RealTraits<R>::exact, "raw angles are a float-mode input");
    std::vector<std::pair<R, R>> pairs;
    for (double th : theta) {
      if (!(th > 1e-9) || th > M_PI + 1e-12)
        throw std::domain_error("rotation angle outside (0, pi]");
      pairs.emplace_back(std::cos(th / 2), std::sin(th / 2));
    }
    return from_half_pairs(std::move(pairs));
  }

  int planes() const { return (int)half.size(); }
  int normal_dim() const { return 2 * planes(); }
  R cos_theta(int j) const { return half[j].first * half[j].first - half[j].second * half[j].second; }
  R sin_theta(int j) const { return R(2) * half[j].first * half[j].second; }

  // det^{1/2}(1 - phi^N) = prod 2 sin(theta_j/2) > 0
  R det_sqrt() const {
    R p(1);
    for (auto& [c, s] : half) p *= R(2) * s;
    return p;
  }

  // rotation matrix phi^N on the normal coordinates (block diagonal 2x2)
  template <class C>
  FMat<C> matrix(int n_ambient) const {
    int d = normal_dim();
    FMat<C> m(n_ambient, d);
    for (int j = 0; j < planes(); ++j) {
      C c(cos_theta(j)), s(sin_theta(j));
      m.at(2 * j, 2 * j) = Ext<C>::scalar(n_ambient, c);
      m.at(2 * j, 2 * j + 1) = Ext<C>::scalar(n_ambient, -s);
      m.at(2 * j + 1, 2 * j) = Ext<C>::scalar(n_ambient, s);
      m.at(2 * j + 1, 2 * j + 1) = Ext<C>::scalar(n_ambient, c);
    }
    return m;
  }

  // (1 - phi^N)^{-1}, exact per 2x2 block: det = 4 sin^2(theta/2)
  template <class C>
  FMat<C> one_minus_inverse(int n_ambient) const {
    int d = normal_dim();
    FMat<C> m(n_ambient, d);
    for (int j = 0; j < planes(); ++j) {
      R det = R(4) * half[j].second * half[j].second;
      C a(( R(1) - cos_theta(j)) / det), b(sin_theta(j) / det);
      m.at(2 * j, 2 * j) = Ext<C>::scalar(n_ambient, a);
      m.at(2 * j, 2 * j + 1) = Ext<C>::scalar(n_ambient, -b);
      m.at(2 * j + 1, 2 * j) = Ext<C>::scalar(n_ambient, b);
      m.at(2 * j + 1, 2 * j + 1) = Ext<C>::scalar(n_ambient, a);
    }
    return m;
  }
};

template <class C>
struct TwistData {
  int rank = 1;
  FMat<C> F0;              // rank x rank, degree-2 entries
  std::vector<C> phiE;     // rank x rank, row-major, unitary

  static TwistData trivial(int n_ambient) {
    TwistData t;
    t.rank = 1;
    t.F0 = FMat<C>(n_ambient, 1);
    t.phiE = {C::one()};
    return t;
  }
};

template <class R>
R det_sqrt_one_minus(const NormalAction<R>& normal) {
  return normal.det_sqrt();
}

// A-hat(R) = det^{1/2}( (R/2) / sinh(R/2) ), R antisymmetric with even entries.
template <class C>
Ext<C> a_hat(const FMat<C>& R) {
  if (!is_antisymmetric(R) || !entries_even(R))
    throw std::domain_error("a_hat needs an antisymmetric even-degree matrix");
  if (!entries_nilpotent(R)) throw std::domain_error("a_hat needs nilpotent entries");
  size_t len = size_t(R.n) + 2;
  FMat<C> A = mat_apply_series(series_half_x_over_sinh(len), R);
  return det_power_one_plus(A - FMat<C>::identity(R.n, R.size), Rat(1, 2));
}

// nu_phi(R'') = det^{-1/2}(1 - phi^N e^{-R''}), computed around the invertible
// scalar matrix: det^{-1/2}(1-phi^N) * det^{-1/2}(1 + (1-phi^N)^{-1} phi^N (1 - e^{-R''})).
template <class C>
Ext<C> nu_phi(const FMat<C>& Rpp, const NormalAction<typename C::Real>& normal) {
  int d = normal.normal_dim();
  if (Rpp.size != d) throw std::invalid_argument("normal curvature size mismatch");
  if (!is_antisymmetric(Rpp) || !entries_even(Rpp) || !entries_nilpotent(Rpp))
    throw std::domain_error("nu_phi needs an antisymmetric nilpotent even matrix");
  size_t len = size_t(Rpp.n) + 2;
  FMat<C> one_minus_exp = mat_apply_series(series_one_minus_exp_neg(len), Rpp);
  FMat<C> N = normal.template one_minus_inverse<C>(Rpp.n) * normal.template matrix<C>(Rpp.n) * one_minus_exp;
  Ext<C> rel = det_power_one_plus(N, Rat(-1, 2));
  C scale = C::one() / C(normal.det_sqrt());
  return rel * scale;
}

// Ch_phi(F) = Tr[ phi^E exp(-F0) ]
template <class C>
Ext<C> ch_phi(const TwistData<C>& twist) {
  int p = twist.rank;
  if (twist.F0.size != p || (int)twist.phiE.size() != p * p)
    throw std::invalid_argument("twist size mismatch");
  size_t len = size_t(twist.F0.n) + 2;
  FMat<C> E = mat_apply_series(series_exp(len), -twist.F0);
  Ext<C> r(twist.F0.n);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      r = r + E.at(j, i) * twist.phiE[size_t(i) * p + j];
  return r;
}

// phi_spinor_symbol taking the stored half-angle pairs (exterior.hpp has the
// raw-angle f64 wrapper).
template <class C>
Ext<C> phi_spinor_symbol(const NormalAction<typename C::Real>& normal, int a_dim) {
  return phi_spinor_symbol<C>(normal.half, a_dim);
}

}  // namespace eqi
