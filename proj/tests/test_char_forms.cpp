#include <doctest.h>

#include <random>

#include "eqi/char_forms.hpp"
#include "naive_oracle.hpp"

using namespace eqi;

namespace {

// random antisymmetric matrix with degree-2 entries (exact coefficients)
FMat<CRat> random_curvature(std::mt19937& rng, int n_ambient, int size) {
  std::uniform_int_distribution<int> num_d(-2, 2), den_d(1, 2), i_d(1, n_ambient);
  FMat<CRat> m(n_ambient, size);
  for (int i = 0; i < size; ++i)
    for (int j = i + 1; j < size; ++j) {
      Ext<CRat> w(n_ambient);
      for (int t = 0; t < 2; ++t) {
        int p = i_d(rng), q = i_d(rng);
        if (p == q) continue;
        auto mono = wedge(Ext<CRat>::dx(n_ambient, p), Ext<CRat>::dx(n_ambient, q));
        w = w + mono * CRat(Rat(num_d(rng), den_d(rng)));
      }
      m.at(i, j) = w;
      m.at(j, i) = -w;
    }
  return m;
}

std::vector<std::vector<naive::Dense>> to_naive(const FMat<CRat>& m) {
  std::vector<std::vector<naive::Dense>> r(m.size, std::vector<naive::Dense>(m.size));
  for (int i = 0; i < m.size; ++i)
    for (int j = 0; j < m.size; ++j) r[i][j] = naive::from_ext(m.at(i, j));
  return r;
}

// naive (R/2)/sinh(R/2): long-division of power series done inline, then a
// permutation-expansion determinant and a direct sqrt series
Ext<CRat> naive_a_hat(const FMat<CRat>& R) {
  size_t len = size_t(R.n) + 2;
  // sinh(y)/y coefficients at y = x/2 by direct factorials
  std::vector<Rat> den(len, Rat(0));
  for (size_t k = 0; 2 * k < len; ++k)
    den[2 * k] = Rat(1) / (rat_pow(Rat(4), (long)k) * factorial(2 * (long)k + 1));
  // long division 1 / den
  std::vector<Rat> quo(len, Rat(0));
  std::vector<Rat> rem(len, Rat(0));
  rem[0] = 1;
  for (size_t k = 0; k < len; ++k) {
    Rat c = rem[k] / den[0];
    quo[k] = c;
    for (size_t j = 0; j + k < len; ++j) rem[j + k] -= c * den[j];
  }
  // matrix series via naive dense arithmetic
  auto nd = to_naive(R);
  int s = R.size;
  std::vector<std::vector<naive::Dense>> acc(s, std::vector<naive::Dense>(s, naive::Dense(R.n))),
      pw(s, std::vector<naive::Dense>(s, naive::Dense(R.n)));
  for (int i = 0; i < s; ++i) pw[i][i] = naive::one(R.n);
  for (size_t k = 0; k < len; ++k) {
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        acc[i][j] = naive::add(acc[i][j], naive::scale(pw[i][j], CRat(quo[k])));
    std::vector<std::vector<naive::Dense>> nx(s, std::vector<naive::Dense>(s, naive::Dense(R.n)));
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j)
        for (int t = 0; t < s; ++t) nx[i][j] = naive::add(nx[i][j], naive::wedge(pw[i][t], nd[t][j]));
    pw = nx;
  }
  return naive::to_ext(naive::det_sqrt(naive::det(acc)));
}

}  // namespace

TEST_CASE("a_hat basics: zero curvature, even structure") {
  FMat<CRat> z(4, 4);
  CHECK(a_hat(z) == Ext<CRat>::one(4));
  std::mt19937 rng(41);
  auto R = random_curvature(rng, 4, 4);
  auto A = a_hat(R);
  CHECK(scalar_part(A) == CRat::one());
  CHECK(degree_part(A, 2).is_zero());  // even series has no x^1 term
  for (int d = 1; d <= 4; ++d)
    if (d % 4 != 0) CHECK(degree_part(A, d).is_zero());
}

TEST_CASE("a_hat agrees with permutation-determinant oracle") {
  std::mt19937 rng(43);
  for (int rep = 0; rep < 6; ++rep) {
    auto R = random_curvature(rng, 4, rep % 2 ? 3 : 4);
    CHECK(a_hat(R) == naive_a_hat(R));
  }
  // n = 6 once (bigger ambient form space)
  auto R6 = random_curvature(rng, 6, 4);
  CHECK(a_hat(R6) == naive_a_hat(R6));
}

TEST_CASE("a_hat multiplicative under direct sums") {
  std::mt19937 rng(47);
  auto R1 = random_curvature(rng, 6, 2), R2 = random_curvature(rng, 6, 3);
  FMat<CRat> sum(6, 5);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) sum.at(i, j) = R1.at(i, j);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) sum.at(2 + i, 2 + j) = R2.at(i, j);
  CHECK(a_hat(sum) == wedge(a_hat(R1), a_hat(R2)));
}

TEST_CASE("normal action validation and determinant scalar") {
  auto act = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}, {Rat(0), Rat(1)}});
  CHECK(act.det_sqrt() == Rat(16, 5));  // 2*(4/5) * 2*1
  CHECK(det_sqrt_one_minus(NormalAction<Rat>{}) == Rat(1));
  CHECK_THROWS_AS(NormalAction<Rat>::from_half_pairs({{Rat(1), Rat(0)}}), std::domain_error);
  CHECK_THROWS_AS(NormalAction<Rat>::from_half_pairs({{Rat(1, 2), Rat(1, 2)}}), std::domain_error);
  CHECK_THROWS_AS(NormalAction<double>::from_angles({1e-12}), std::domain_error);
  auto f = NormalAction<double>::from_angles({M_PI});
  CHECK(f.det_sqrt() == doctest::Approx(2.0));
}

TEST_CASE("1 - phi^N determinant identity 4 sin^2(theta/2) blockwise") {
  auto act = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}});
  auto phi = act.matrix<CRat>(2);
  auto eye = FMat<CRat>::identity(2, 2);
  auto M = eye - phi;
  // 2x2 determinant by hand
  auto det = wedge(M.at(0, 0), M.at(1, 1)) - wedge(M.at(0, 1), M.at(1, 0));
  CHECK(scalar_part(det) == CRat(Rat(4) * Rat(16, 25)));
  auto Minv = act.one_minus_inverse<CRat>(2);
  auto prod = M * Minv;
  CHECK(prod.at(0, 0) == Ext<CRat>::one(2));
  CHECK(prod.at(0, 1).is_zero());
}

TEST_CASE("nu_phi scalar values and oracle agreement") {
  int n = 4;
  auto act1 = NormalAction<Rat>::from_half_pairs({{Rat(0), Rat(1)}});  // theta = pi
  FMat<CRat> z(n, 2);
  auto v = nu_phi(z, act1);
  CHECK(v == Ext<CRat>::scalar(n, CRat(Rat(1, 2))));

  auto act2 = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}});
  auto v2 = nu_phi(z, act2);
  CHECK(v2 == Ext<CRat>::scalar(n, CRat(Rat(5, 8))));
  CHECK(scalar_part(v2) * CRat(act2.det_sqrt()) == CRat::one());

  // oracle: naive det of (1 - phi e^{-R}) then inverse sqrt series
  std::mt19937 rng(53);
  for (int rep = 0; rep < 5; ++rep) {
    auto act = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}, {Rat(5, 13), Rat(12, 13)}});
    auto R = random_curvature(rng, 6, 4);
    auto mine = nu_phi(R, act);

    // naive: exp(-R) entrywise-matrix series, then 1 - phi*that, det, det^{-1/2}
    int s = 4;
    auto nd = to_naive(-R);
    std::vector<std::vector<naive::Dense>> expm(s, std::vector<naive::Dense>(s, naive::Dense(6))),
        pw(s, std::vector<naive::Dense>(s, naive::Dense(6)));
    for (int i = 0; i < s; ++i) pw[i][i] = naive::one(6);
    auto ec = naive::coef_exp(8);
    for (size_t k = 0; k < ec.size(); ++k) {
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
          expm[i][j] = naive::add(expm[i][j], naive::scale(pw[i][j], CRat(ec[k])));
      std::vector<std::vector<naive::Dense>> nx(s, std::vector<naive::Dense>(s, naive::Dense(6)));
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
          for (int t = 0; t < s; ++t)
            nx[i][j] = naive::add(nx[i][j], naive::wedge(pw[i][t], nd[t][j]));
      pw = nx;
    }
    auto phi = act.matrix<CRat>(6);
    std::vector<std::vector<naive::Dense>> M(s, std::vector<naive::Dense>(s, naive::Dense(6)));
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        naive::Dense acc(6);
        for (int t = 0; t < s; ++t)
          acc = naive::add(acc, naive::wedge(naive::from_ext(phi.at(i, t)), expm[t][j]));
        M[i][j] = naive::scale(acc, -CRat::one());
        if (i == j) M[i][j] = naive::add(M[i][j], naive::one(6));
      }
    auto oracle = naive::to_ext(naive::det_inv_sqrt(naive::det(M)));
    CHECK(mine == oracle);
  }
}

TEST_CASE("ch_phi values and additivity") {
  int n = 4;
  auto triv = TwistData<CRat>::trivial(n);
  CHECK(ch_phi(triv) == Ext<CRat>::one(n));

  TwistData<CRat> rot;
  rot.rank = 2;
  rot.F0 = FMat<CRat>(n, 2);
  rot.phiE = {CRat(Rat(3, 5), Rat(4, 5)), CRat::zero(), CRat::zero(), CRat(Rat(3, 5), Rat(-4, 5))};
  CHECK(ch_phi(rot) == Ext<CRat>::scalar(n, CRat(Rat(6, 5))));  // 2 cos(alpha)

  // rank 1 with curvature: e^{i a}(1 - w + w^2/2 - ...)
  TwistData<CRat> tw;
  tw.rank = 1;
  tw.F0 = FMat<CRat>(n, 1);
  auto w = Ext<CRat>::monomial(n, {1, 2}, CRat(Rat(2, 3)));
  tw.F0.at(0, 0) = w;
  tw.phiE = {CRat(Rat(0), Rat(1))};
  auto expect = ext_exp(-w) * CRat(Rat(0), Rat(1));
  CHECK(ch_phi(tw) == expect);

  // additivity under direct sum
  std::mt19937 rng(59);
  TwistData<CRat> t1;
  t1.rank = 1;
  t1.F0 = FMat<CRat>(n, 1);
  t1.F0.at(0, 0) = Ext<CRat>::monomial(n, {1, 2}, CRat(Rat(1, 2)));
  t1.phiE = {CRat(Rat(1))};
  TwistData<CRat> t2;
  t2.rank = 1;
  t2.F0 = FMat<CRat>(n, 1);
  t2.F0.at(0, 0) = Ext<CRat>::monomial(n, {3, 4}, CRat(Rat(-1, 3)));
  t2.phiE = {CRat(Rat(0), Rat(1))};
  TwistData<CRat> sum;
  sum.rank = 2;
  sum.F0 = FMat<CRat>(n, 2);
  sum.F0.at(0, 0) = t1.F0.at(0, 0);
  sum.F0.at(1, 1) = t2.F0.at(0, 0);
  sum.phiE = {t1.phiE[0], CRat::zero(), CRat::zero(), t2.phiE[0]};
  CHECK(ch_phi(sum) == ch_phi(t1) + ch_phi(t2));
}

TEST_CASE("characteristic outputs are purely even") {
  std::mt19937 rng(61);
  auto R = random_curvature(rng, 6, 4);
  auto act = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}, {Rat(0), Rat(1)}});
  auto A = a_hat(R);
  auto V = nu_phi(R, act);
  for (auto& [m, v] : A.terms) CHECK(std::popcount(m) % 2 == 0);
  for (auto& [m, v] : V.terms) CHECK(std::popcount(m) % 2 == 0);
}
