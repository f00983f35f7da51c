#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <eqi/mehler.hpp>
#include <eqi/quadrature.hpp>

using namespace eqi;

namespace {

using Op = GOp<CRat>;

CRat crat(long num, long den = 1) { return CRat(Rat(num, den)); }

Ext<CRat> sc(int n, const CRat& c) { return Ext<CRat>::scalar(n, c); }

Ext<CRat> random_two_form(std::mt19937& rng, int n) {
  std::uniform_int_distribution<int> num(-3, 3), pick(0, n - 1);
  Ext<CRat> w(n);
  for (int rep = 0; rep < 2; ++rep) {
    int p = pick(rng), q = pick(rng);
    if (p == q) continue;
    if (p > q) std::swap(p, q);
    w = w + Ext<CRat>::monomial(n, {p + 1, q + 1}, crat(num(rng), 2));
  }
  return w;
}

// antisymmetric matrix whose entries are random 2-forms on R^n
FMat<CRat> random_block(std::mt19937& rng, int n, int size) {
  FMat<CRat> R(n, size);
  for (int i = 0; i < size; ++i)
    for (int j = i + 1; j < size; ++j) {
      Ext<CRat> w = random_two_form(rng, n);
      R.at(i, j) = w;
      R.at(j, i) = -w;
    }
  return R;
}

// random curvature of a rotation-invariant normal bundle: rho_j on each
// 2-plane, plus an intertwiner block between planes with equal angles
FMat<CRat> random_normal_block(std::mt19937& rng, int n, const NormalAction<Rat>& normal) {
  int planes = normal.planes();
  FMat<CRat> R(n, 2 * planes);
  for (int j = 0; j < planes; ++j) {
    Ext<CRat> rho = random_two_form(rng, n);
    R.at(2 * j, 2 * j + 1) = rho;
    R.at(2 * j + 1, 2 * j) = -rho;
  }
  for (int j = 0; j < planes; ++j)
    for (int k = j + 1; k < planes; ++k) {
      if (normal.half[j] != normal.half[k]) continue;
      Ext<CRat> al = random_two_form(rng, n), be = random_two_form(rng, n);
      R.at(2 * j, 2 * k) = al;
      R.at(2 * j, 2 * k + 1) = be;
      R.at(2 * j + 1, 2 * k) = -be;
      R.at(2 * j + 1, 2 * k + 1) = al;
      R.at(2 * k, 2 * j) = -al;
      R.at(2 * k, 2 * j + 1) = be;
      R.at(2 * k + 1, 2 * j) = -be;
      R.at(2 * k + 1, 2 * j + 1) = -al;
    }
  return R;
}

// the oscillator the kernel must solve: -sum_i (d_i - (1/4)(R x)_i)^2
Op curvature_oscillator(const FMat<CRat>& R) {
  int n = R.size;
  Op H = Op::zero(n);
  for (int i = 0; i < n; ++i) {
    Op nab = Op::d(n, i + 1);
    for (int j = 0; j < n; ++j) {
      const Ext<CRat>& rij = R.at(i, j);
      if (rij.terms.empty()) continue;
      nab = nab + Op::form_term(n, rij * crat(-1, 4), midx_unit(n, j), midx_zero(n));
    }
    H = H - gop_compose(nab, nab);
  }
  return H;
}

// K(y, x): swap the evaluation points. x^a w^b -> (x - w)^a (-w)^b with the
// Gaussian factor even in w.
GaussianKernel<CRat> kernel_swap_args(const GaussianKernel<CRat>& K) {
  GaussianKernel<CRat> out(K.n);
  for (const auto& [key, c] : K.terms) {
    const auto& [base, off, tp] = key;
    for (const MIdx& g : midx_all_below(base)) {
      long flip = midx_total(base) - midx_total(g) + midx_total(off);
      CRat s = cx_from_rat<CRat>(Rat(midx_binom(base, g)) * rat_pow(Rat(-1), flip));
      out.add_term(g, midx_add(midx_sub(base, g), off), tp, c * s);
    }
  }
  return out;
}

// 60-mode eigenfunction expansion for -d^2/dx^2 + x^2 (the b = 4 oscillator)
double hermite_heat_1d(double x, double y, double t) {
  const int modes = 60;
  auto psi = [&](double z) {
    std::vector<double> v(modes);
    v[0] = std::pow(M_PI, -0.25) * std::exp(-z * z / 2);
    v[1] = std::sqrt(2.0) * z * v[0];
    for (int k = 1; k + 1 < modes; ++k)
      v[k + 1] = z * std::sqrt(2.0 / (k + 1)) * v[k] - std::sqrt(double(k) / (k + 1)) * v[k - 1];
    return v;
  };
  std::vector<double> px = psi(x), py = psi(y);
  double s = 0;
  for (int k = modes - 1; k >= 0; --k) s += std::exp(-(2 * k + 1) * t) * px[k] * py[k];
  return s;
}

// int dz K(x,z,s) K(z,y,tt-s), resolved on the scale of the sharper factor
double conv_slice(double b, double x, double y, double tt, double s) {
  double tau = std::min(s, tt - s);
  double c = s <= tt - s ? x : y;
  std::vector<double> us, uw;
  panel_rule(12, 16, -8.0, 8.0, us, uw);
  double wscale = 2.0 * std::sqrt(tau);
  double acc = 0;
  for (size_t k = 0; k < us.size(); ++k) {
    double z = c + wscale * us[k];
    acc += uw[k] * wscale * mehler_kernel_real_1d(b, x, z, s) *
           mehler_kernel_real_1d(b, z, y, tt - s);
  }
  return acc;
}

}  // namespace

TEST_CASE("zero curvature reproduces the free heat kernel") {
  int n = 2;
  CHECK(mehler_kernel_gaussian(FMat<CRat>(n, n)) == GaussianKernel<CRat>::heat(n));

  FMat<CF64> zero(n, n);
  double t = 0.5;
  std::vector<double> x{0.3, -0.1}, y{0.0, 0.2};
  double d2 = 0.09 + 0.09;
  double expect = std::exp(-d2 / (4 * t)) / (4 * M_PI * t);
  Ext<CF64> got = mehler_kernel(zero, x, y, t);
  CHECK(got.coeff(0).re == doctest::Approx(expect).epsilon(1e-14));
  CHECK(got.coeff(0).im == 0.0);

  CHECK_THROWS_AS((void)mehler_kernel(zero, x, y, 0.0), std::domain_error);
  CHECK_THROWS_AS((void)mehler_kernel(zero, x, y, -1.0), std::domain_error);
}

TEST_CASE("curvature oscillator annihilates the kernel exactly") {
  // n = 2, single generator
  {
    int n = 2;
    FMat<CRat> R(n, n);
    R.at(0, 1) = Ext<CRat>::monomial(n, {1, 2}, crat(3, 2));
    R.at(1, 0) = -R.at(0, 1);
    Op H = curvature_oscillator(R) + Op::dt(n);
    CHECK(apply_gop_to_kernel(H, mehler_kernel_gaussian(R)).is_zero());
    // canary: the kernel of -R fails against the same operator, so the test
    // genuinely pins the cross-term orientation
    CHECK_FALSE(apply_gop_to_kernel(H, mehler_kernel_gaussian(-R)).is_zero());
  }

  // n = 4, random 2-form entries
  std::mt19937 rng(41);
  for (int rep = 0; rep < 3; ++rep) {
    int n = 4;
    FMat<CRat> R = random_block(rng, n, n);
    Op H = curvature_oscillator(R) + Op::dt(n);
    CHECK(apply_gop_to_kernel(H, mehler_kernel_gaussian(R)).is_zero());
  }

  // mixed-degree entries (2-form plus 4-form) stay inside the family
  {
    int n = 4;
    FMat<CRat> R = random_block(rng, n, n);
    Ext<CRat> quad = Ext<CRat>::monomial(n, {1, 2, 3, 4}, crat(5, 3));
    R.at(0, 1) = R.at(0, 1) + quad;
    R.at(1, 0) = R.at(1, 0) - quad;
    Op H = curvature_oscillator(R) + Op::dt(n);
    CHECK(apply_gop_to_kernel(H, mehler_kernel_gaussian(R)).is_zero());
  }
}

TEST_CASE("kernel validation rejects malformed curvature") {
  CHECK_THROWS_AS((void)mehler_kernel_gaussian(FMat<CRat>(2, 1)), std::invalid_argument);

  FMat<CRat> sym(2, 2);
  sym.at(0, 1) = sym.at(1, 0) = Ext<CRat>::monomial(2, {1, 2}, crat(1));
  CHECK_THROWS_AS((void)mehler_kernel_gaussian(sym), std::domain_error);

  FMat<CRat> odd(2, 2);
  odd.at(0, 1) = Ext<CRat>::dx(2, 1);
  odd.at(1, 0) = -odd.at(0, 1);
  CHECK_THROWS_AS((void)mehler_kernel_gaussian(odd), std::domain_error);

  FMat<CRat> scal(2, 2);
  scal.at(0, 1) = sc(2, crat(1));
  scal.at(1, 0) = -scal.at(0, 1);
  CHECK_THROWS_AS((void)mehler_kernel_gaussian(scal), std::domain_error);
}

TEST_CASE("swapping the evaluation points flips the curvature") {
  std::mt19937 rng(43);
  for (int rep = 0; rep < 3; ++rep) {
    FMat<CRat> R = random_block(rng, 4, 4);
    CHECK(kernel_swap_args(mehler_kernel_gaussian(R)) == mehler_kernel_gaussian(-R));
  }
}

TEST_CASE("one-variable kernel matches the eigenfunction expansion") {
  double x = 0.3, y = -0.2, t = 0.7;
  CHECK(mehler_kernel_real_1d(4.0, x, y, t) ==
        doctest::Approx(hermite_heat_1d(x, y, t)).epsilon(1e-8));

  // a few more points, same oracle
  std::mt19937 rng(47);
  std::uniform_real_distribution<double> pos(-1.2, 1.2), tim(0.2, 1.5);
  for (int rep = 0; rep < 5; ++rep) {
    double a = pos(rng), b = pos(rng), s = tim(rng);
    CHECK(mehler_kernel_real_1d(4.0, a, b, s) ==
          doctest::Approx(hermite_heat_1d(a, b, s)).epsilon(1e-8));
  }

  // free limit agrees through the series branch
  double free_val = std::exp(-0.25 / (4 * t)) / std::sqrt(4 * M_PI * t);
  CHECK(mehler_kernel_real_1d(0.0, 0.5, 0.0, t) == doctest::Approx(free_val).epsilon(1e-12));

  CHECK_THROWS_AS((void)mehler_kernel_real_1d(4.0, x, y, 0.0), std::domain_error);
  CHECK_THROWS_AS((void)mehler_kernel_real_1d(-1.0, x, y, t), std::domain_error);
}

TEST_CASE("one-variable kernel satisfies the semigroup law") {
  double b = 4.0, x = 0.25, y = -0.15;
  for (auto [t, s] : {std::pair{0.3, 0.4}, std::pair{0.6, 0.2}, std::pair{0.15, 0.15}}) {
    double lhs = conv_slice(b, x, y, t + s, t);
    double rhs = mehler_kernel_real_1d(b, x, y, t + s);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  }
}

TEST_CASE("fiber integral closed forms at flat curvature") {
  int n = 2;
  auto normal = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}});
  auto mc = flat_model_curvature<CRat>(n, normal);
  FiberDensity<CRat> dens = mehler_fiber_density(mc);
  CHECK(dens.pow4pit == Rat(0));
  CHECK(dens.coefficient(Rat(0)) == sc(n, crat(25, 64)));
  // t-independent at zero curvature
  CHECK(mehler_fiber_integral(mc, Rat(3, 2)) == sc(n, crat(25, 64)));

  // two planes: scalar part is the product of the angle factors
  auto normal2 = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)},
                                                     {Rat(5, 13), Rat(12, 13)}});
  auto mc2 = flat_model_curvature<CRat>(4, normal2);
  CHECK(mehler_fiber_density(mc2).coefficient(Rat(0)) == sc(4, crat(4225, 36864)));

  // a > 0 in exact mode carries an irrational prefactor
  auto mc_a2 = flat_model_curvature<CRat>(2, NormalAction<Rat>());
  CHECK_THROWS_AS((void)mehler_fiber_integral(mc_a2, Rat(1)), std::domain_error);
  CHECK_THROWS_AS((void)mehler_fiber_integral(mc, Rat(0)), std::domain_error);
}

TEST_CASE("fully horizontal stratum reduces to the genus of the curvature") {
  std::mt19937 rng(53);
  NormalAction<Rat> trivial;
  for (int n : {2, 4}) {
    FMat<CRat> Rp = random_block(rng, n, n);
    auto mc = make_model_curvature(n, Rp, FMat<CRat>(n, 0), TwistData<CRat>::trivial(n),
                                   trivial);
    FiberDensity<CRat> closed = mehler_fiber_density(mc);
    FiberDensity<CRat> direct = fiber_density(mehler_kernel_gaussian(Rp), trivial, n);
    CHECK(closed == direct);
    // and the ladder really is the degree expansion of the genus
    Ext<CRat> genus = a_hat(Rp);
    for (int m = 0; 2 * m <= n; ++m)
      CHECK(closed.coefficient(Rat(m)) == degree_part(genus, 2 * m));
  }
}

TEST_CASE("closed fiber integral equals the coordinate fiber integral") {
  std::mt19937 rng(59);

  auto check_identity = [&](int n, const NormalAction<Rat>& normal) {
    int a = n - normal.normal_dim();
    FMat<CRat> Rp = random_block(rng, n, a);
    FMat<CRat> Rpp = random_normal_block(rng, n, normal);
    auto mc = make_model_curvature(n, Rp, Rpp, TwistData<CRat>::trivial(n), normal);
    GaussianKernel<CRat> K = mehler_kernel_gaussian(curvature_block_diag(mc));
    CHECK(fiber_density(K, mc.normal, mc.a) == mehler_fiber_density(mc));
  };

  auto one = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}});
  auto two = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)},
                                                 {Rat(5, 13), Rat(12, 13)}});
  // equal angles admit intertwiner cross-blocks in the normal curvature
  auto twin = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)},
                                                  {Rat(3, 5), Rat(4, 5)}});
  for (int rep = 0; rep < 4; ++rep) check_identity(2, one);
  for (int rep = 0; rep < 3; ++rep) check_identity(4, one);
  for (int rep = 0; rep < 3; ++rep) check_identity(4, two);
  for (int rep = 0; rep < 2; ++rep) check_identity(4, twin);
  check_identity(6, two);
  check_identity(6, twin);
}

TEST_CASE("resolvent powers shift the time ladder") {
  auto normal = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}});
  auto mc = flat_model_curvature<CRat>(2, normal);

  CHECK(resolvent_power_fiber_density(mc, 0) == mehler_fiber_density(mc));
  // (t^2/2!) scaling at t = 3/2
  CHECK(resolvent_power_fiber_integral(mc, 2, Rat(3, 2)) ==
        sc(2, crat(25, 64) * crat(9, 8)));
  CHECK_THROWS_AS((void)resolvent_power_fiber_density(mc, -1), std::invalid_argument);

  // ladder keys shift by m with 1/m! on a curved stratum
  std::mt19937 rng(61);
  auto mc4 = make_model_curvature(4, random_block(rng, 4, 2), random_block(rng, 4, 2),
                                  TwistData<CRat>::trivial(4), normal);
  FiberDensity<CRat> base = mehler_fiber_density(mc4);
  FiberDensity<CRat> shifted = resolvent_power_fiber_density(mc4, 3);
  CHECK(shifted.pow4pit == base.pow4pit);
  CHECK(!base.ladder.empty());
  for (const auto& [key, c] : base.ladder) CHECK(shifted.coefficient(key + 3) == c * crat(1, 6));
}

TEST_CASE("resolvent powers match the iterated time convolution") {
  double b = 4.0, x = 0.25, y = -0.15, t = 0.6;
  std::vector<double> sx, sw;
  panel_rule(12, 16, 0.0, t, sx, sw);
  double fact = 1;
  for (int m = 1; m <= 3; ++m) {
    fact *= m;
    // int_0^t s^{m-1}/(m-1)! K_s * K_{t-s} ds = (t^m/m!) K_t
    double prev_fact = fact / m;
    double lhs = 0;
    for (size_t k = 0; k < sx.size(); ++k)
      lhs += sw[k] * std::pow(sx[k], m - 1) / prev_fact * conv_slice(b, x, y, t, sx[k]);
    double rhs = std::pow(t, m) / fact * mehler_kernel_real_1d(b, x, y, t);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  }
}

TEST_CASE("gamma_phi of the identity model operator") {
  // exact isolated fixed point: -i / (2 sin(theta/2)) at sin(theta/2) = 4/5
  auto normal = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}});
  auto mc = flat_model_curvature<CRat>(2, normal);
  CHECK(gamma_phi_density(Op::identity(2), mc, 0) == CRat(Rat(0), Rat(-5, 8)));

  // float mode, theta = pi/3: -i / (2 sin(pi/6)) = -i
  auto normal_f = NormalAction<double>::from_angles({M_PI / 3});
  auto mc_f = flat_model_curvature<CF64>(2, normal_f);
  CF64 g = gamma_phi_density(GOp<CF64>::identity(2), mc_f, 0);
  CHECK(g.re == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.im == doctest::Approx(-1.0).epsilon(1e-12));

  // an odd-form model operator has no horizontal volume component
  Op oddop = Op::form_term(2, Ext<CRat>::dx(2, 1), midx_zero(2), midx_zero(2));
  CHECK(gamma_phi_density(oddop, mc, 0) == CRat());

  // twist character multiplies in: phi^E = 3/5 + 4i/5
  auto mc_tw = mc;
  mc_tw.twist.phiE = {CRat(Rat(3, 5), Rat(4, 5))};
  CHECK(gamma_phi_density(Op::identity(2), mc_tw, 0) == CRat(Rat(1, 2), Rat(-3, 8)));

  CHECK_THROWS_AS((void)gamma_phi_density(Op::identity(2), mc, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)gamma_phi_density(Op::identity(2), mc, 2), std::invalid_argument);
  auto mc_a2 = flat_model_curvature<CRat>(2, NormalAction<Rat>());
  CHECK_THROWS_AS((void)gamma_phi_density(Op::identity(2), mc_a2, 2), std::domain_error);
}

TEST_CASE("model curvature validation") {
  auto normal = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)}});
  std::mt19937 rng(67);
  FMat<CRat> Rp = random_block(rng, 4, 2), Rpp = random_block(rng, 4, 2);

  // wrong block sizes
  CHECK_THROWS_AS((void)make_model_curvature(4, random_block(rng, 4, 3), Rpp,
                                             TwistData<CRat>::trivial(4), normal),
                  std::invalid_argument);
  // scalar entry breaks the pure 2-form requirement
  FMat<CRat> bad = Rp;
  bad.at(0, 1) = sc(4, crat(1));
  bad.at(1, 0) = -bad.at(0, 1);
  CHECK_THROWS_AS((void)make_model_curvature(4, bad, Rpp, TwistData<CRat>::trivial(4), normal),
                  std::invalid_argument);
  // non-antisymmetric block
  FMat<CRat> nonanti = Rp;
  nonanti.at(1, 0) = nonanti.at(0, 1);
  CHECK_THROWS_AS(
      (void)make_model_curvature(4, nonanti, Rpp, TwistData<CRat>::trivial(4), normal),
      std::invalid_argument);
  // twist in the wrong form algebra
  CHECK_THROWS_AS((void)make_model_curvature(4, Rp, Rpp, TwistData<CRat>::trivial(3), normal),
                  std::invalid_argument);
  // normal curvature that fails to commute with the rotation
  auto two = NormalAction<Rat>::from_half_pairs({{Rat(3, 5), Rat(4, 5)},
                                                 {Rat(5, 13), Rat(12, 13)}});
  FMat<CRat> skew(4, 4);
  skew.at(0, 2) = Ext<CRat>::monomial(4, {1, 2}, crat(1));
  skew.at(2, 0) = -skew.at(0, 2);
  CHECK_THROWS_AS(
      (void)make_model_curvature(4, FMat<CRat>(4, 0), skew, TwistData<CRat>::trivial(4), two),
      std::invalid_argument);
}
