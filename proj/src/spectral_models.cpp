#include <eqi/spectral_models.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include <eqi/quadrature.hpp>

namespace eqi {

namespace {

using SparseRows = std::vector<std::map<int, CF64>>;

SparseRows sparse_mul(const SparseRows& A, const SparseRows& B) {
  SparseRows C(A.size());
  for (size_t i = 0; i < A.size(); ++i)
    for (const auto& [j, a] : A[i])
      for (const auto& [c, b] : B[j]) {
        CF64& slot = C[i][c];
        slot = slot + a * b;
      }
  return C;
}

SparseRows sparse_sub(const SparseRows& A, const SparseRows& B) {
  SparseRows C = A;
  for (size_t i = 0; i < B.size(); ++i)
    for (const auto& [c, b] : B[i]) {
      CF64& slot = C[i][c];
      slot = slot - b;
    }
  return C;
}

double cabs(const CF64& z) { return std::hypot(z.re, z.im); }

const LevelCharacter& level_char(const SpectralLevel& lv, const std::string& phi) {
  auto it = lv.character.find(phi);
  if (it == lv.character.end()) throw std::invalid_argument("unknown group element: " + phi);
  return it->second;
}

double trunc_bound(const SpectralModel& m, double t) {
  return (double)m.total_dim * std::exp(-t * m.lambda_trunc * m.lambda_trunc);
}

}  // namespace

SpectralModel make_spectral_model(std::vector<SpectralLevel> levels, double lambda_trunc,
                                  std::map<std::string, std::string> meta) {
  if (levels.empty()) throw std::invalid_argument("model needs at least one level");
  if (!(lambda_trunc > 0)) throw std::invalid_argument("lambda_trunc must be positive");
  std::sort(levels.begin(), levels.end(),
            [](const SpectralLevel& a, const SpectralLevel& b) { return a.lambda < b.lambda; });
  std::vector<double> lams;
  for (const auto& lv : levels) {
    if (lv.dim_plus < 0 || lv.dim_minus < 0 || lv.dim_plus + lv.dim_minus == 0)
      throw std::invalid_argument("level dimensions must be nonnegative and not both zero");
    if (!lams.empty() && lv.lambda - lams.back() < 1e-12)
      throw std::invalid_argument("levels must carry distinct eigenvalues");
    lams.push_back(lv.lambda);
  }
  auto mirror_of = [&](double lam) -> const SpectralLevel* {
    double tol = 1e-9 * (1 + std::abs(lam));
    auto it = std::lower_bound(lams.begin(), lams.end(), -lam - tol);
    if (it == lams.end() || std::abs(*it + lam) > tol) return nullptr;
    return &levels[it - lams.begin()];
  };
  for (const auto& lv : levels) {
    if (std::abs(lv.lambda) <= 1e-12) continue;
    const SpectralLevel* mir = mirror_of(lv.lambda);
    if (!mir) throw std::invalid_argument("missing mirror level for spectral symmetry");
    if (lv.dim_plus != mir->dim_minus || lv.dim_minus != mir->dim_plus)
      throw std::invalid_argument("mirror level grading dimensions must swap");
    if (lv.character.size() != mir->character.size())
      throw std::invalid_argument("mirror level characters must match");
    for (const auto& [id, c] : lv.character) {
      auto it = mir->character.find(id);
      if (it == mir->character.end())
        throw std::invalid_argument("mirror level characters must match");
      double tol = 1e-9 * (1 + cabs(c.plus) + cabs(c.minus));
      if (cabs(c.plus - it->second.minus) > tol || cabs(c.minus - it->second.plus) > tol)
        throw std::invalid_argument("mirror level characters must swap");
    }
  }
  SpectralModel m;
  m.levels = std::move(levels);
  m.lambda_trunc = lambda_trunc;
  m.meta = std::move(meta);
  for (const auto& lv : m.levels) m.total_dim += lv.dim_plus + lv.dim_minus;
  return m;
}

SpectralModel build_sphere_model(int lmax, int monopole_k,
                                 const std::vector<double>& rotation_angles) {
  if (lmax < 1) throw std::invalid_argument("lmax must be at least 1");
  const int k = monopole_k;
  const int twos_p = k - 1;
  const int twos_m = k + 1;
  const int top = 2 * lmax + (std::abs(twos_p) % 2);

  auto dsum = [](int twol, double theta) {  // tr of the rotation on one rung
    CF64 acc;
    for (int twom = -twol; twom <= twol; twom += 2)
      acc = acc + CF64(std::cos(twom * theta / 2), std::sin(twom * theta / 2));
    return acc;
  };
  auto rung_chars = [&](int twol) {
    std::map<std::string, CF64> c;
    c["id"] = CF64(double(twol + 1));
    for (size_t a = 0; a < rotation_angles.size(); ++a)
      c["rot" + std::to_string(a)] = dsum(twol, rotation_angles[a]);
    return c;
  };

  std::vector<SpectralLevel> levels;
  if (k != 0) {
    // the ladder annihilates one rung; it sits on the s+ half for k >= 1 and
    // on the s- half for k <= -1, giving index k either way
    int twol = k >= 1 ? twos_p : -twos_m;
    SpectralLevel z;
    z.lambda = 0;
    auto chars = rung_chars(twol);
    if (k >= 1) {
      z.dim_plus = twol + 1;
      for (const auto& [id, c] : chars) z.character[id] = {c, CF64()};
    } else {
      z.dim_minus = twol + 1;
      for (const auto& [id, c] : chars) z.character[id] = {CF64(), c};
    }
    levels.push_back(z);
  }
  int start = std::max(std::abs(twos_p), std::abs(twos_m));
  for (int twol = start; twol <= top; twol += 2) {
    double lam = std::sqrt(double(twol - twos_p) * double(twol + twos_p + 2)) / 2;
    auto chars = rung_chars(twol);
    SpectralLevel p, n;
    p.lambda = lam;
    p.dim_plus = twol + 1;
    n.lambda = -lam;
    n.dim_minus = twol + 1;
    for (const auto& [id, c] : chars) {
      p.character[id] = {c, CF64()};
      n.character[id] = {CF64(), c};
    }
    levels.push_back(p);
    levels.push_back(n);
  }
  double lam_trunc =
      std::sqrt(double(top + 2 - twos_p) * double(top + 2 + twos_p + 2)) / 2;

  std::map<std::string, std::string> meta{{"model", "sphere"},
                                          {"lmax", std::to_string(lmax)},
                                          {"monopole_k", std::to_string(k)}};
  std::string joined;
  for (double a : rotation_angles) joined += (joined.empty() ? "" : ",") + std::to_string(a);
  meta["angles"] = joined;
  return make_spectral_model(std::move(levels), lam_trunc, std::move(meta));
}

SpectralModel build_torus_model(int kmax, int spin_structure,
                                std::pair<double, double> translation) {
  if (kmax < 1) throw std::invalid_argument("kmax must be at least 1");
  if (spin_structure < 0 || spin_structure > 3)
    throw std::invalid_argument("spin structure must be one of 0..3");
  const int e1 = spin_structure & 1;
  const int e2 = (spin_structure >> 1) & 1;
  const int width = 2 * kmax + 1;

  struct Shell {
    int count = 0;
    CF64 chi{};
  };
  std::map<long, Shell> shells;  // key: |2(k + eps)|^2, exact integer
  for (int k1 = -kmax; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      long a1 = 2L * k1 + e1, a2 = 2L * k2 + e2;
      Shell& sh = shells[a1 * a1 + a2 * a2];
      sh.count += 1;
      double ph = 2 * M_PI * (k1 * translation.first + k2 * translation.second);
      sh.chi = sh.chi + CF64(std::cos(ph), std::sin(ph));
    }

  std::vector<SpectralLevel> levels;
  for (const auto& [key, sh] : shells) {
    if (key == 0) {
      SpectralLevel z;
      z.lambda = 0;
      z.dim_plus = z.dim_minus = sh.count;
      z.character["id"] = {CF64(double(sh.count)), CF64(double(sh.count))};
      z.character["t"] = {sh.chi, sh.chi};
      levels.push_back(z);
      continue;
    }
    double lam = M_PI * std::sqrt(double(key));
    SpectralLevel p, n;
    p.lambda = lam;
    p.dim_plus = sh.count;
    p.character["id"] = {CF64(double(sh.count)), CF64()};
    p.character["t"] = {sh.chi, CF64()};
    n.lambda = -lam;
    n.dim_minus = sh.count;
    n.character["id"] = {CF64(), CF64(double(sh.count))};
    n.character["t"] = {CF64(), sh.chi};
    levels.push_back(p);
    levels.push_back(n);
  }
  // smallest |2(k+eps)| with some |k_i| > kmax is at least 2 kmax + 1
  double lam_trunc = M_PI * (2.0 * kmax + 1.0);
  std::map<std::string, std::string> meta{{"model", "torus"},
                                          {"kmax", std::to_string(kmax)},
                                          {"spin_structure", std::to_string(spin_structure)},
                                          {"s1", std::to_string(translation.first)},
                                          {"s2", std::to_string(translation.second)}};
  SpectralModel m = make_spectral_model(std::move(levels), lam_trunc, std::move(meta));

  ModeBasisOps B;
  B.dim = 2 * width * width;
  auto midx = [&](int k1, int k2) { return (k1 + kmax) * width + (k2 + kmax); };
  B.lam2.resize(B.dim);
  B.grading.resize(B.dim);
  B.dirac.assign(B.dim, {});
  std::vector<CF64> uid(B.dim, CF64::one()), ut(B.dim);
  for (int k1 = -kmax; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2) {
      int b = 2 * midx(k1, k2);
      double m1 = k1 + 0.5 * e1, m2 = k2 + 0.5 * e2;
      B.lam2[b] = B.lam2[b + 1] = 4 * M_PI * M_PI * (m1 * m1 + m2 * m2);
      B.grading[b] = 1;
      B.grading[b + 1] = -1;
      if (m1 != 0 || m2 != 0) {
        CF64 off = CF64(2 * M_PI * m1, -2 * M_PI * m2);
        B.dirac[b][b + 1] = off;
        B.dirac[b + 1][b] = CF64(off.re, -off.im);
      }
      double ph = 2 * M_PI * (k1 * translation.first + k2 * translation.second);
      ut[b] = ut[b + 1] = CF64(std::cos(ph), std::sin(ph));
    }
  auto add_shift = [&](const std::string& name,
                       std::vector<std::pair<std::pair<int, int>, CF64>> terms) {
    SparseRows rows(B.dim);
    for (int k1 = -kmax; k1 <= kmax; ++k1)
      for (int k2 = -kmax; k2 <= kmax; ++k2)
        for (const auto& [d, c] : terms) {
          int t1 = k1 + d.first, t2 = k2 + d.second;
          if (std::abs(t1) > kmax || std::abs(t2) > kmax) continue;
          for (int cmp = 0; cmp < 2; ++cmp) {
            CF64& slot = rows[2 * midx(t1, t2) + cmp][2 * midx(k1, k2) + cmp];
            slot = slot + c;
          }
        }
    B.ops[name] = std::move(rows);
  };
  add_shift("one", {{{0, 0}, CF64::one()}});
  add_shift("f1", {{{1, 0}, CF64::one()}});
  add_shift("f2", {{{0, 1}, CF64::one()}});
  add_shift("f0", {{{-1, -1}, CF64::one()}});
  add_shift("cos1", {{{1, 0}, CF64(0.5)}, {{-1, 0}, CF64(0.5)}});
  add_shift("sin1", {{{1, 0}, CF64(0, -0.5)}, {{-1, 0}, CF64(0, 0.5)}});
  add_shift("cos2", {{{0, 1}, CF64(0.5)}, {{0, -1}, CF64(0.5)}});
  add_shift("sin2", {{{0, 1}, CF64(0, -0.5)}, {{0, -1}, CF64(0, 0.5)}});
  B.unitary["id"] = std::move(uid);
  B.unitary["t"] = std::move(ut);
  m.basis = std::move(B);
  return m;
}

TraceValue heat_supertrace(const SpectralModel& m, const std::string& phi, double t) {
  if (!(t > 0)) throw std::invalid_argument("t must be positive");
  CF64 acc;
  for (const auto& lv : m.levels) {
    const LevelCharacter& c = level_char(lv, phi);
    acc = acc + (c.plus - c.minus) * CF64(std::exp(-t * lv.lambda * lv.lambda));
  }
  return {acc, trunc_bound(m, t)};
}

TraceValue heat_trace(const SpectralModel& m, const std::string& phi, double t) {
  if (!(t > 0)) throw std::invalid_argument("t must be positive");
  CF64 acc;
  for (const auto& lv : m.levels) {
    const LevelCharacter& c = level_char(lv, phi);
    acc = acc + (c.plus + c.minus) * CF64(std::exp(-t * lv.lambda * lv.lambda));
  }
  return {acc, trunc_bound(m, t)};
}

TraceValue heat_supertrace(const SpectralModel& m, const std::string& phi, double t,
                           const std::string& op) {
  if (!(t > 0)) throw std::invalid_argument("t must be positive");
  if (!m.has_basis()) throw std::invalid_argument("model carries no matrix elements");
  auto pit = m.basis.ops.find(op);
  if (pit == m.basis.ops.end())
    throw std::invalid_argument("missing matrix elements for operator: " + op);
  auto uit = m.basis.unitary.find(phi);
  if (uit == m.basis.unitary.end()) throw std::invalid_argument("unknown group element: " + phi);
  CF64 acc;
  for (int i = 0; i < m.basis.dim; ++i) {
    auto it = pit->second[i].find(i);
    if (it == pit->second[i].end()) continue;
    acc = acc + CF64(double(m.basis.grading[i]) * std::exp(-t * m.basis.lam2[i])) *
                    it->second * uit->second[i];
  }
  return {acc, trunc_bound(m, t)};
}

void simplex_rule(int m_dim, int per_axis, std::vector<std::vector<double>>& nodes,
                  std::vector<double>& weights) {
  if (m_dim < 0 || per_axis < 1) throw std::invalid_argument("bad simplex rule parameters");
  nodes.clear();
  weights.clear();
  if (m_dim == 0) {
    nodes.push_back({1.0});
    weights.push_back(1.0);
    return;
  }
  std::vector<double> xs, ws;
  panel_rule(per_axis, 1, 0.0, 1.0, xs, ws);
  std::vector<int> idx(m_dim, 0);
  for (;;) {
    double w = 1;
    std::vector<double> s(m_dim + 1);
    double run = 1;
    for (int j = 0; j < m_dim; ++j) {
      double u = xs[idx[j]];
      w *= ws[idx[j]];
      // stick-breaking Jacobian: u_j^(m_dim-1-j)
      for (int p = 0; p < m_dim - 1 - j; ++p) w *= u;
      s[j] = run * (1 - u);
      run *= u;
    }
    s[m_dim] = run;
    nodes.push_back(std::move(s));
    weights.push_back(w);
    int ax = 0;
    while (ax < m_dim && ++idx[ax] == per_axis) idx[ax++] = 0;
    if (ax == m_dim) break;
  }
}

JloValue jlo_numeric(const SpectralModel& m, const GroupWord& word, int q, double t,
                     int simplex_nodes, int rotate) {
  if (q < 0) throw std::invalid_argument("cocycle degree must be nonnegative");
  if ((int)word.factors.size() != 2 * q + 1)
    throw std::invalid_argument("group word must list exactly 2q+1 factors");
  if (!(t > 0)) throw std::invalid_argument("t must be positive");
  if (simplex_nodes < 1) throw std::invalid_argument("simplex node budget must be positive");
  if (rotate < 0 || rotate > 2 * q) throw std::invalid_argument("rotation offset out of range");
  if (q == 0) {
    TraceValue tv = heat_supertrace(m, word.factors[0].second, t, word.factors[0].first);
    return {tv.value, 0.0, tv.bound};
  }
  if (!m.has_basis()) throw std::invalid_argument("model carries no matrix elements");
  const ModeBasisOps& B = m.basis;
  const int mdim = 2 * q;

  auto op_of = [&](const std::string& id) -> const SparseRows& {
    auto it = B.ops.find(id);
    if (it == B.ops.end())
      throw std::invalid_argument("missing matrix elements for operator: " + id);
    return it->second;
  };
  auto unitary_of = [&](const std::string& id) -> const std::vector<CF64>& {
    auto it = B.unitary.find(id);
    if (it == B.unitary.end()) throw std::invalid_argument("unknown group element: " + id);
    return it->second;
  };
  auto col_scale = [](SparseRows A, const std::vector<CF64>& u) {
    for (auto& row : A)
      for (auto& [c, v] : row) v = v * u[c];
    return A;
  };

  std::vector<SparseRows> X;
  X.push_back(col_scale(op_of(word.factors[0].first), unitary_of(word.factors[0].second)));
  for (int j = 1; j <= mdim; ++j) {
    const SparseRows& f = op_of(word.factors[j].first);
    SparseRows comm = sparse_sub(sparse_mul(B.dirac, f), sparse_mul(f, B.dirac));
    X.push_back(col_scale(std::move(comm), unitary_of(word.factors[j].second)));
  }

  std::vector<double> ev(B.dim);
  auto eval = [&](int per_axis) -> CF64 {
    std::vector<std::vector<double>> nodes;
    std::vector<double> ws;
    simplex_rule(mdim, per_axis, nodes, ws);
    CF64 acc;
    for (size_t p = 0; p < nodes.size(); ++p) {
      SparseRows M;
      for (int pos = 0; pos <= mdim; ++pos) {
        int j = (rotate + pos) % (mdim + 1);
        double sj = nodes[p][j];
        for (int c = 0; c < B.dim; ++c) ev[c] = std::exp(-sj * t * B.lam2[c]);
        if (pos == 0) {
          M = X[j];
          for (auto& row : M)
            for (auto& [c, v] : row) v = v * CF64(ev[c]);
        } else {
          SparseRows C(B.dim);
          for (int i = 0; i < B.dim; ++i)
            for (const auto& [c, a] : M[i])
              for (const auto& [c2, b] : X[j][c]) {
                CF64& slot = C[i][c2];
                slot = slot + a * b * CF64(ev[c2]);
              }
          M = std::move(C);
        }
      }
      CF64 str;
      for (int i = 0; i < B.dim; ++i) {
        auto it = M[i].find(i);
        if (it != M[i].end()) str = str + CF64(double(B.grading[i])) * it->second;
      }
      acc = acc + CF64(ws[p]) * str;
    }
    return acc * CF64(std::pow(t, q));
  };

  int na = std::max(2, (int)std::floor(std::pow(double(simplex_nodes), 1.0 / mdim) + 1e-9));
  CF64 value = eval(na);
  CF64 coarse = eval(std::max(1, na / 2));
  return {value, cabs(value - coarse), trunc_bound(m, t)};
}

FitReport fit_asymptotic_orders(const std::vector<std::pair<double, CF64>>& samples,
                                double expected_leading) {
  if (samples.size() < 4) throw std::invalid_argument("need at least 4 samples");
  auto s = samples;
  std::sort(s.begin(), s.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t, v] : s)
    if (!(t > 0)) throw std::invalid_argument("sample times must be positive");
  double r0 = s[1].first / s[0].first;
  if (r0 <= 1 + 1e-12) throw std::invalid_argument("degenerate t-grid");
  for (size_t i = 1; i + 1 < s.size(); ++i) {
    double r = s[i + 1].first / s[i].first;
    if (std::abs(r - r0) > 1e-6 * r0)
      throw std::invalid_argument("samples must lie on a geometric t-grid");
  }

  FitReport rep;
  double den = 0;
  CF64 num;
  for (const auto& [t, v] : s) {
    double w = std::pow(t, expected_leading);
    num = num + v * CF64(w);
    den += w * w;
  }
  rep.coeff_at_expected = num * CF64(1.0 / den);

  for (const auto& [t, v] : s)
    if (cabs(v) < 1e-140) rep.vanishing = true;
  if (rep.vanishing) return rep;

  double n = double(s.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [t, v] : s) {
    double x = std::log(t), y = std::log(cabs(v));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double inter = (sy - slope * sx) / n;
  double rss = 0;
  for (const auto& [t, v] : s) {
    double r = std::log(cabs(v)) - (inter + slope * std::log(t));
    rss += r * r;
  }
  rep.exponent = slope;
  rep.coefficient = std::exp(inter);
  rep.residual = std::sqrt(rss / n);
  return rep;
}

std::string model_to_json(const SpectralModel& m) {
  nlohmann::ordered_json root;
  root["levels"] = nlohmann::ordered_json::array();
  for (const auto& lv : m.levels) {
    nlohmann::ordered_json L;
    L["lambda"] = lv.lambda;
    L["dim_plus"] = lv.dim_plus;
    L["dim_minus"] = lv.dim_minus;
    nlohmann::ordered_json chars;
    for (const auto& [id, c] : lv.character)
      chars[id] = {c.plus.re, c.plus.im, c.minus.re, c.minus.im};
    L["characters"] = std::move(chars);
    root["levels"].push_back(std::move(L));
  }
  root["lmax"] = m.lambda_trunc;
  root["meta"] = m.meta;
  return root.dump(2) + "\n";
}

SpectralModel model_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    std::vector<SpectralLevel> levels;
    for (const auto& L : j.at("levels")) {
      SpectralLevel lv;
      lv.lambda = L.at("lambda").get<double>();
      lv.dim_plus = L.at("dim_plus").get<int>();
      lv.dim_minus = L.at("dim_minus").get<int>();
      for (const auto& [id, arr] : L.at("characters").items()) {
        if (!arr.is_array() || arr.size() != 4)
          throw std::invalid_argument("model document: characters entries must be [re+, im+, re-, im-]");
        lv.character[id] = {CF64(arr[0].get<double>(), arr[1].get<double>()),
                            CF64(arr[2].get<double>(), arr[3].get<double>())};
      }
      levels.push_back(std::move(lv));
    }
    std::map<std::string, std::string> meta;
    if (j.contains("meta"))
      for (const auto& [k, v] : j.at("meta").items()) meta[k] = v.get<std::string>();
    return make_spectral_model(std::move(levels), j.at("lmax").get<double>(), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("model document: ") + e.what());
  }
}

}  // namespace eqi
