#include <eqi/sampling.hpp>

#include <utility>
#include <vector>

namespace eqi {

Ext<CRat> random_two_form(std::mt19937& rng, int n) {
  std::uniform_int_distribution<int> num(-3, 3), pick(0, n - 1);
  Ext<CRat> w(n);
  for (int rep = 0; rep < 2; ++rep) {
    int p = pick(rng), q = pick(rng);
    if (p == q) continue;
    if (p > q) std::swap(p, q);
    w = w + Ext<CRat>::monomial(n, {p + 1, q + 1}, CRat(Rat(num(rng), 2)));
  }
  return w;
}

FMat<CRat> random_form_block(std::mt19937& rng, int n, int size) {
  FMat<CRat> R(n, size);
  for (int i = 0; i < size; ++i)
    for (int j = i + 1; j < size; ++j) {
      Ext<CRat> w = random_two_form(rng, n);
      R.at(i, j) = w;
      R.at(j, i) = -w;
    }
  return R;
}

FMat<CRat> random_normal_curvature(std::mt19937& rng, int n, const NormalAction<Rat>& normal) {
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

namespace {

struct DrawConfig {
  int n;
  std::vector<std::pair<Rat, Rat>> pairs;
  const char* label;
};

const std::vector<DrawConfig>& draw_configs() {
  static const std::vector<DrawConfig> cfgs = [] {
    std::pair<Rat, Rat> p1{Rat(3, 5), Rat(4, 5)}, p2{Rat(5, 13), Rat(12, 13)};
    return std::vector<DrawConfig>{
        {2, {p1}, "n=2 one plane"},     {4, {p1}, "n=4 one plane"},
        {4, {p1, p2}, "n=4 two planes"}, {4, {p1, p1}, "n=4 equal planes"},
        {6, {p1, p2}, "n=6 two planes"}, {6, {p1, p1}, "n=6 equal planes"},
    };
  }();
  return cfgs;
}

const DrawConfig& config_at(int which) {
  int m = (int)draw_configs().size();
  return draw_configs()[((which % m) + m) % m];
}

}  // namespace

int mehler_draw_count() { return (int)draw_configs().size(); }

std::string mehler_draw_label(int which) { return config_at(which).label; }

ModelCurvature<CRat> random_mehler_draw(std::mt19937& rng, int which) {
  const DrawConfig& c = config_at(which);
  auto normal = NormalAction<Rat>::from_half_pairs(c.pairs);
  int a = c.n - normal.normal_dim();
  FMat<CRat> Rp = random_form_block(rng, c.n, a);
  FMat<CRat> Rpp = random_normal_curvature(rng, c.n, normal);
  return make_model_curvature(c.n, Rp, Rpp, TwistData<CRat>::trivial(c.n), normal);
}

}  // namespace eqi
