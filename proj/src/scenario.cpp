#include <eqi/scenario.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include <eqi/quadrature.hpp>
#include <eqi/sampling.hpp>

namespace eqi {

FunctionJet<CF64> torus_function_jet(const std::string& name, double x1, double x2) {
  const double w = 2 * M_PI;
  auto cis = [](double ph) { return CF64(std::cos(ph), std::sin(ph)); };
  FunctionJet<CF64> j;
  if (name == "one") {
    j = {CF64::one(), {CF64(), CF64()}};
  } else if (name == "f1") {
    CF64 g = cis(w * x1);
    j = {g, {CF64(0, w) * g, CF64()}};
  } else if (name == "f2") {
    CF64 g = cis(w * x2);
    j = {g, {CF64(), CF64(0, w) * g}};
  } else if (name == "f0") {
    CF64 g = cis(-w * (x1 + x2));
    j = {g, {CF64(0, -w) * g, CF64(0, -w) * g}};
  } else if (name == "cos1") {
    j = {CF64(std::cos(w * x1)), {CF64(-w * std::sin(w * x1)), CF64()}};
  } else if (name == "sin1") {
    j = {CF64(std::sin(w * x1)), {CF64(w * std::cos(w * x1)), CF64()}};
  } else if (name == "cos2") {
    j = {CF64(std::cos(w * x2)), {CF64(), CF64(-w * std::sin(w * x2))}};
  } else if (name == "sin2") {
    j = {CF64(std::sin(w * x2)), {CF64(), CF64(w * std::cos(w * x2))}};
  } else {
    throw std::invalid_argument("unknown torus function: " + name);
  }
  return j;
}

std::vector<FixedPointStratum<CF64>> flat_torus_strata(const std::vector<std::string>& names,
                                                       int panels) {
  if (panels < 2) throw std::invalid_argument("torus grid needs at least 2 points per axis");
  std::vector<double> xs, ws;
  panel_rule(panels, 1, 0.0, 1.0, xs, ws);
  FixedPointStratum<CF64> st;
  st.a = 2;
  st.nodes.reserve(xs.size() * xs.size());
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = 0; j < xs.size(); ++j) {
      StratumNode<CF64> nd;
      nd.weight = ws[i] * ws[j];
      nd.mc = flat_model_curvature<CF64>(2, NormalAction<double>{});
      for (const std::string& nm : names) nd.jets[nm] = torus_function_jet(nm, xs[i], xs[j]);
      st.nodes.push_back(std::move(nd));
    }
  return {st};
}

CF64 torus_pairing_quadrature(const std::vector<std::string>& names, int panels) {
  if (names.size() != 3) throw std::invalid_argument("pairing quadrature needs exactly 3 functions");
  std::vector<double> xs, ws;
  panel_rule(panels, 1, 0.0, 1.0, xs, ws);
  CF64 acc;
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = 0; j < xs.size(); ++j) {
      FunctionJet<CF64> f0 = torus_function_jet(names[0], xs[i], xs[j]);
      FunctionJet<CF64> f1 = torus_function_jet(names[1], xs[i], xs[j]);
      FunctionJet<CF64> f2 = torus_function_jet(names[2], xs[i], xs[j]);
      CF64 wedge = f1.diff[0] * f2.diff[1] - f1.diff[1] * f2.diff[0];
      acc = acc + CF64(ws[i] * ws[j]) * f0.value * wedge;
    }
  // (2 i pi)^{-1} / 2! = -i / (4 pi)
  return CF64(0, -1.0 / (4 * M_PI)) * acc;
}

CF64 richardson_limit(std::vector<std::pair<double, CF64>> samples) {
  if (samples.size() < 2) throw std::invalid_argument("extrapolation needs at least two samples");
  std::sort(samples.begin(), samples.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 0; i + 1 < samples.size(); ++i)
    if (!(samples[i].first < samples[i + 1].first))
      throw std::invalid_argument("extrapolation needs distinct t values");
  std::vector<CF64> v(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) v[i] = samples[i].second;
  for (size_t lev = 1; lev < v.size(); ++lev)
    for (size_t i = 0; i + lev < v.size(); ++i) {
      double ti = samples[i].first, tj = samples[i + lev].first;
      v[i] = (v[i] * CF64(tj) - v[i + 1] * CF64(ti)) * CF64(1.0 / (tj - ti));
    }
  return v[0];
}

namespace {

using json = nlohmann::ordered_json;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string cx_pair(const CF64& v) { return "(" + fmt3(v.re) + ", " + fmt3(v.im) + ")"; }

[[noreturn]] void fail_field(const std::string& field, const std::string& msg) {
  throw ScenarioError("config field '" + field + "': " + msg);
}

const json& need(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains(field)) fail_field(field, "missing");
  return j.at(field);
}

std::string get_str(const json& j, const std::string& field) {
  const json& v = need(j, field);
  if (!v.is_string()) fail_field(field, "expected a string");
  return v.get<std::string>();
}

int get_int(const json& j, const std::string& field) {
  const json& v = need(j, field);
  if (!v.is_number_integer()) fail_field(field, "expected an integer");
  return v.get<int>();
}

int int_or(const json& j, const std::string& field, int dflt) {
  return j.contains(field) ? get_int(j, field) : dflt;
}

bool bool_or(const json& j, const std::string& field, bool dflt) {
  if (!j.contains(field)) return dflt;
  const json& v = j.at(field);
  if (!v.is_boolean()) fail_field(field, "expected true or false");
  return v.get<bool>();
}

// number, or a fraction/decimal string
double as_double(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return RealTraits<Rat>::to_double(parse_rat(v.get<std::string>()));
    } catch (const std::exception&) {
      fail_field(field, "not a number or fraction: '" + v.get<std::string>() + "'");
    }
  }
  fail_field(field, "expected a number or fraction string");
}

Rat as_rat(const json& v, const std::string& field) {
  if (v.is_number_integer()) return Rat((long long)v.get<long long>());
  if (v.is_string()) {
    try {
      return parse_rat(v.get<std::string>());
    } catch (const std::exception&) {
      fail_field(field, "not a fraction: '" + v.get<std::string>() + "'");
    }
  }
  fail_field(field, "exact values are integers or fraction strings");
}

CF64 as_complex(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2) fail_field(field, "complex values are [re, im] pairs");
  return CF64(as_double(v[0], field), as_double(v[1], field));
}

CRat as_complex_rat(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2) fail_field(field, "complex values are [re, im] pairs");
  return CRat(as_rat(v[0], field), as_rat(v[1], field));
}

std::vector<double> grid_field(const json& cfg, const std::string& field) {
  const json& g = need(cfg, field);
  if (!g.is_array() || g.empty()) fail_field(field, "expected a nonempty array of t values");
  std::vector<double> ts(g.size());
  for (size_t i = 0; i < g.size(); ++i) ts[i] = as_double(g[i], field);
  for (double t : ts)
    if (!(t > 0)) fail_field(field, "t values must be strictly positive");
  for (size_t i = 0; i + 1 < ts.size(); ++i)
    if (!(ts[i] < ts[i + 1])) fail_field(field, "t values must be sorted increasing");
  return ts;
}

// deterministic indexed parallel loop; rethrows the first worker exception
template <class F>
void for_indices(int threads, int count, F&& fn) {
  int nt = std::min(threads, count);
  if (nt <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

const json* checks_of(const json& cfg) {
  if (!cfg.contains("checks")) return nullptr;
  const json& ch = cfg.at("checks");
  if (!ch.is_object()) fail_field("checks", "expected an object");
  return &ch;
}

GroupWord parse_word(const json& cfg) {
  const json& wj = need(cfg, "word");
  if (!wj.is_array() || wj.empty()) fail_field("word", "expected a nonempty array");
  GroupWord w;
  for (const json& e : wj) {
    if (e.is_string())
      w.factors.push_back({e.get<std::string>(), w.identity});
    else if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string())
      w.factors.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
    else
      fail_field("word", "factors are function names or [name, element] pairs");
  }
  auto table = [&](const std::string& field,
                   std::map<std::pair<std::string, std::string>, std::string>& out) {
    if (!cfg.contains(field)) return;
    const json& tj = cfg.at(field);
    if (!tj.is_array()) fail_field(field, "expected an array of [a, b, result] triples");
    for (const json& e : tj) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_string() || !e[1].is_string() ||
          !e[2].is_string())
        fail_field(field, "entries are [a, b, result] string triples");
      out[{e[0].get<std::string>(), e[1].get<std::string>()}] = e[2].get<std::string>();
    }
  };
  table("compose", w.compose);
  table("pullback", w.pullback);
  return w;
}

// function names each cocycle slot actually reads, after pullbacks
std::vector<std::string> slot_jet_names(const GroupWord& w) {
  std::set<std::string> seen;
  std::vector<std::string> names;
  for (size_t j = 0; j < w.factors.size(); ++j) {
    std::string id = word_pullback_id(w, j);
    if (seen.insert(id).second) names.push_back(id);
  }
  return names;
}

void check_known_functions(const std::vector<std::string>& names) {
  for (const std::string& nm : names) {
    try {
      (void)torus_function_jet(nm, 0.1, 0.2);
    } catch (const std::exception& e) {
      fail_field("word", e.what());
    }
  }
}

void run_index(const json& cfg, ScenarioReport& rep, int threads) {
  std::string geom = cfg.contains("geometry") ? get_str(cfg, "geometry") : "two_pole_rotation";
  if (geom != "two_pole_rotation") fail_field("geometry", "unknown geometry '" + geom + "'");
  int k = int_or(cfg, "monopole_k", 0);
  const json* ch = checks_of(cfg);

  std::vector<CF64> approx;
  std::vector<CRat> exact;
  if (rep.precision == "exact") {
    const json& hp = need(cfg, "half_pairs");
    if (!hp.is_array() || hp.empty())
      fail_field("half_pairs", "expected a nonempty array of [cos, sin] pairs");
    std::vector<std::pair<Rat, Rat>> pairs(hp.size());
    for (size_t i = 0; i < hp.size(); ++i) {
      const json& e = hp[i];
      if (!e.is_array() || e.size() != 2) fail_field("half_pairs", "entries are [cos, sin] pairs");
      pairs[i] = {as_rat(e[0], "half_pairs"), as_rat(e[1], "half_pairs")};
    }
    exact.resize(pairs.size());
    for_indices(threads, (int)pairs.size(), [&](int i) {
      NormalAction<Rat> normal;
      try {
        normal = NormalAction<Rat>::from_half_pairs({pairs[i]});
      } catch (const std::exception& e) {
        fail_field("half_pairs", e.what());
      }
      CRat u(pairs[i].first, pairs[i].second);
      exact[i] = equivariant_index(two_pole_strata<CRat>(normal, u, k), 2);
    });
    for (size_t i = 0; i < pairs.size(); ++i) {
      double c = RealTraits<Rat>::to_double(pairs[i].first);
      double s = RealTraits<Rat>::to_double(pairs[i].second);
      approx.push_back(CF64(RealTraits<Rat>::to_double(exact[i].re),
                            RealTraits<Rat>::to_double(exact[i].im)));
      rep.rows.push_back({"halfpair " + rat_str(pairs[i].first) + " " + rat_str(pairs[i].second),
                          2 * std::atan2(s, c), rat_str(exact[i].re), rat_str(exact[i].im), "0"});
    }
  } else {
    const json& an = need(cfg, "angles");
    if (!an.is_array() || an.empty()) fail_field("angles", "expected a nonempty array");
    std::vector<double> th(an.size());
    for (size_t i = 0; i < an.size(); ++i) th[i] = as_double(an[i], "angles");
    for (double t : th)
      if (!(t > 0 && t < 2 * M_PI)) fail_field("angles", "rotation angles must lie in (0, 2 pi)");
    approx.resize(th.size());
    for_indices(threads, (int)th.size(), [&](int i) {
      auto normal = NormalAction<double>::from_angles({th[i]});
      CF64 u(std::cos(th[i] / 2), std::sin(th[i] / 2));
      approx[i] = equivariant_index(two_pole_strata<CF64>(normal, u, k), 2);
    });
    for (size_t i = 0; i < th.size(); ++i)
      rep.rows.push_back(
          {"theta", th[i], fmt17(approx[i].re), fmt17(approx[i].im), "0"});
  }

  if (!ch) return;
  if (ch->contains("expect_zero")) {
    double tol = as_double(ch->at("expect_zero"), "checks.expect_zero");
    double worst = 0;
    for (const CF64& v : approx) worst = std::max(worst, cx_abs(v));
    rep.checks.push_back({"expect_zero", worst < tol,
                          "max |index| = " + fmt3(worst) + " (tol " + fmt3(tol) + ")"});
  }
  if (ch->contains("expect_values")) {
    const json& ev = ch->at("expect_values");
    const json& vals = need(ev, "values");
    if (!vals.is_array() || vals.size() != approx.size())
      fail_field("checks.expect_values.values", "needs one [re, im] entry per evaluation");
    bool ok = true;
    std::string detail;
    if (rep.precision == "exact") {
      for (size_t i = 0; i < vals.size(); ++i) {
        CRat want = as_complex_rat(vals[i], "checks.expect_values.values");
        if (!(exact[i] == want)) {
          ok = false;
          detail = "entry " + std::to_string(i) + ": got " + rat_str(exact[i].re) + "+" +
                   rat_str(exact[i].im) + "i";
          break;
        }
      }
      if (ok) detail = "all " + std::to_string(vals.size()) + " values match exactly";
    } else {
      double tol = as_double(need(ev, "tol"), "checks.expect_values.tol");
      double worst = 0;
      for (size_t i = 0; i < vals.size(); ++i) {
        CF64 want = as_complex(vals[i], "checks.expect_values.values");
        worst = std::max(worst, cx_abs(approx[i] - want));
      }
      ok = worst <= tol;
      detail = "max deviation " + fmt3(worst) + " (tol " + fmt3(tol) + ")";
    }
    rep.checks.push_back({"expect_values", ok, detail});
  }
}

void run_cm(const json& cfg, ScenarioReport& rep, int threads) {
  (void)threads;
  GroupWord w = parse_word(cfg);
  if (w.factors.size() % 2 == 0)
    fail_field("word", "a degree-q cocycle takes 2q+1 factors (odd count)");
  int q = ((int)w.factors.size() - 1) / 2;
  bool fpf = bool_or(cfg, "fixed_point_free", false);
  int panels = int_or(cfg, "panels", 12);
  std::vector<std::string> names = slot_jet_names(w);
  if (!fpf) check_known_functions(names);
  const json* ch = checks_of(cfg);

  CF64 value;
  if (rep.precision == "exact") {
    if (!fpf)
      fail_field("precision", "torus quadrature runs in f64; exact mode needs fixed_point_free");
    CRat v = cm_cocycle(q, w, std::vector<FixedPointStratum<CRat>>{}, 2);
    rep.rows.push_back({"value", 0.0, rat_str(v.re), rat_str(v.im), "0"});
    value = CF64(RealTraits<Rat>::to_double(v.re), RealTraits<Rat>::to_double(v.im));
  } else {
    if (!fpf && panels < 2) fail_field("panels", "needs at least 2 grid points per axis");
    auto strata = fpf ? std::vector<FixedPointStratum<CF64>>{} : flat_torus_strata(names, panels);
    value = cm_cocycle(q, w, strata, 2);
    rep.rows.push_back(
        {"value", double(fpf ? 0 : panels), fmt17(value.re), fmt17(value.im), "0"});
  }

  if (!ch) return;
  if (ch->contains("expect")) {
    const json& ex = ch->at("expect");
    CF64 want = as_complex(need(ex, "value"), "checks.expect.value");
    double tol = as_double(need(ex, "tol"), "checks.expect.tol");
    double dev = cx_abs(value - want);
    rep.checks.push_back({"expect", dev <= tol,
                          "value " + cx_pair(value) + ", deviation " + fmt3(dev) + " (tol " +
                              fmt3(tol) + ")"});
  }
  if (ch->contains("quadrature")) {
    if (q != 1) fail_field("checks.quadrature", "direct quadrature covers q = 1 only");
    const json& qu = ch->at("quadrature");
    int qp = int_or(qu, "panels", 2 * panels);
    double tol = as_double(need(qu, "tol"), "checks.quadrature.tol");
    CF64 direct = torus_pairing_quadrature(names, qp);
    rep.rows.push_back(
        {"quadrature", double(qp), fmt17(direct.re), fmt17(direct.im), "0"});
    double dev = cx_abs(value - direct);
    rep.checks.push_back({"quadrature", dev <= tol,
                          "cocycle " + cx_pair(value) + " vs integral " + cx_pair(direct) +
                              ", deviation " + fmt3(dev) + " (tol " + fmt3(tol) + ")"});
  }
  if (ch->contains("refinement")) {
    if (fpf || rep.precision == "exact")
      fail_field("checks.refinement", "refinement applies to the f64 torus grid");
    const json& rf = ch->at("refinement");
    int rp = int_or(rf, "panels", 2 * panels);
    double tol = as_double(need(rf, "tol"), "checks.refinement.tol");
    CF64 fine = cm_cocycle(q, w, flat_torus_strata(names, rp), 2);
    rep.rows.push_back({"refined", double(rp), fmt17(fine.re), fmt17(fine.im), "0"});
    double dev = cx_abs(value - fine);
    rep.checks.push_back({"refinement", dev <= tol,
                          "grid " + std::to_string(panels) + " vs " + std::to_string(rp) +
                              ": deviation " + fmt3(dev) + " (tol " + fmt3(tol) + ")"});
  }
}

SpectralModel load_model(const json& jm) {
  if (!jm.is_object()) fail_field("model", "expected an object");
  if (jm.contains("file")) {
    std::string path = get_str(jm, "file");
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_field("model.file", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return model_from_json(ss.str());
    } catch (const std::exception& e) {
      fail_field("model.file", e.what());
    }
  }
  std::string type = get_str(jm, "type");
  try {
    if (type == "sphere") {
      int lmax = get_int(jm, "lmax");
      int k = int_or(jm, "monopole_k", 0);
      std::vector<double> angles;
      if (jm.contains("angles")) {
        const json& an = jm.at("angles");
        if (!an.is_array()) fail_field("model.angles", "expected an array");
        for (const json& e : an) angles.push_back(as_double(e, "model.angles"));
      }
      return build_sphere_model(lmax, k, angles);
    }
    if (type == "torus") {
      int kmax = get_int(jm, "kmax");
      int spin = int_or(jm, "spin_structure", 0);
      std::pair<double, double> tr{0, 0};
      if (jm.contains("translation")) {
        const json& trj = jm.at("translation");
        if (!trj.is_array() || trj.size() != 2)
          fail_field("model.translation", "expected [s1, s2]");
        tr = {as_double(trj[0], "model.translation"), as_double(trj[1], "model.translation")};
      }
      return build_torus_model(kmax, spin, tr);
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    fail_field("model", e.what());
  }
  fail_field("model.type", "unknown model type '" + type + "'");
}

void run_heat(const json& cfg, ScenarioReport& rep, int threads) {
  if (rep.precision == "exact") fail_field("precision", "spectral traces run in f64");
  SpectralModel m = load_model(need(cfg, "model"));
  std::string phi = get_str(cfg, "phi");
  bool graded = bool_or(cfg, "graded", true);
  std::string op = cfg.contains("op") ? get_str(cfg, "op") : "";
  if (!op.empty() && !graded) fail_field("op", "operator insertions are graded only");
  std::vector<double> ts = grid_field(cfg, "t_grid");
  const json* ch = checks_of(cfg);

  std::vector<TraceValue> tv(ts.size());
  for_indices(threads, (int)ts.size(), [&](int i) {
    tv[i] = op.empty() ? (graded ? heat_supertrace(m, phi, ts[i]) : heat_trace(m, phi, ts[i]))
                       : heat_supertrace(m, phi, ts[i], op);
  });
  std::string label = (graded ? std::string("Str") : std::string("Tr")) +
                      (op.empty() ? "" : "[" + op + "]");
  for (size_t i = 0; i < ts.size(); ++i)
    rep.rows.push_back({label, ts[i], fmt17(tv[i].value.re), fmt17(tv[i].value.im),
                        fmt17(tv[i].bound)});

  if (!ch) return;
  if (ch->contains("max_abs")) {
    double tol = as_double(ch->at("max_abs"), "checks.max_abs");
    double worst = -1;
    bool ok = true;
    for (const TraceValue& v : tv) {
      double margin = cx_abs(v.value) - v.bound;
      if (margin > tol) ok = false;
      worst = std::max(worst, margin);
    }
    rep.checks.push_back({"max_abs", ok,
                          "max(|value| - bound) = " + fmt3(worst) + " (tol " + fmt3(tol) + ")"});
  }
  if (ch->contains("t_independent")) {
    double tol = as_double(ch->at("t_independent"), "checks.t_independent");
    double worst = 0;
    bool ok = true;
    for (size_t i = 0; i < tv.size(); ++i)
      for (size_t j = i + 1; j < tv.size(); ++j) {
        double margin = cx_abs(tv[i].value - tv[j].value) - tv[i].bound - tv[j].bound;
        if (margin > tol) ok = false;
        worst = std::max(worst, margin);
      }
    rep.checks.push_back({"t_independent", ok,
                          "max spread beyond bounds = " + fmt3(worst) + " (tol " + fmt3(tol) +
                              ")"});
  }
  std::vector<std::pair<double, CF64>> samples;
  for (size_t i = 0; i < ts.size(); ++i) samples.push_back({ts[i], tv[i].value});
  auto fit_at = [&](double e) {
    try {
      return fit_asymptotic_orders(samples, e);
    } catch (const std::invalid_argument& err) {
      fail_field("t_grid", err.what());
    }
  };
  if (ch->contains("fit")) {
    const json& fj = ch->at("fit");
    const json& exps = need(fj, "expected");
    if (!exps.is_array() || exps.empty())
      fail_field("checks.fit.expected", "expected an array of exponents");
    double cmax = as_double(need(fj, "coeff_max"), "checks.fit.coeff_max");
    bool ok = true;
    double worst = 0;
    for (const json& ej : exps) {
      double e = as_double(ej, "checks.fit.expected");
      double c = cx_abs(fit_at(e).coeff_at_expected);
      worst = std::max(worst, c);
      if (!(c <= cmax)) ok = false;
    }
    rep.checks.push_back({"fit", ok,
                          "max |coefficient| over expected exponents = " + fmt3(worst) +
                              " (tol " + fmt3(cmax) + ")"});
  }
  if (ch->contains("fit_leading")) {
    const json& fj = ch->at("fit_leading");
    double e0 = as_double(need(fj, "exponent"), "checks.fit_leading.exponent");
    double etol = as_double(need(fj, "tol"), "checks.fit_leading.tol");
    FitReport fr = fit_at(e0);
    bool ok = !fr.vanishing && std::abs(fr.exponent - e0) <= etol;
    std::string detail = "fitted exponent " + fmt3(fr.exponent) + " vs " + fmt3(e0);
    if (fj.contains("coefficient")) {
      double c0 = as_double(fj.at("coefficient"), "checks.fit_leading.coefficient");
      double ctol = as_double(need(fj, "coeff_tol"), "checks.fit_leading.coeff_tol");
      ok = ok && std::abs(fr.coefficient - c0) <= ctol;
      detail += ", coefficient " + fmt3(fr.coefficient) + " vs " + fmt3(c0);
    }
    rep.checks.push_back({"fit_leading", ok, detail});
  }
}

void run_jlo(const json& cfg, ScenarioReport& rep, int threads) {
  if (rep.precision == "exact") fail_field("precision", "heat cochain evaluation runs in f64");
  SpectralModel m = load_model(need(cfg, "model"));
  if (!m.has_basis())
    fail_field("model", "cochain evaluation needs a model with matrix elements (inline torus)");
  GroupWord w = parse_word(cfg);
  if (w.factors.size() % 2 == 0)
    fail_field("word", "a degree-q cochain takes 2q+1 factors (odd count)");
  int q = ((int)w.factors.size() - 1) / 2;
  std::vector<double> ts = grid_field(cfg, "t_grid");
  int nodes = int_or(cfg, "simplex_nodes", 200);
  if (nodes < 1) fail_field("simplex_nodes", "must be positive");
  int rotate = int_or(cfg, "rotate", 0);
  const json* ch = checks_of(cfg);

  std::vector<JloValue> jv(ts.size());
  for_indices(threads, (int)ts.size(), [&](int i) {
    jv[i] = jlo_numeric(m, w, q, ts[i], nodes, rotate);
  });
  for (size_t i = 0; i < ts.size(); ++i)
    rep.rows.push_back({"jlo", ts[i], fmt17(jv[i].value.re), fmt17(jv[i].value.im),
                        fmt17(jv[i].quad_error + jv[i].bound)});

  std::vector<std::pair<double, CF64>> samples;
  for (size_t i = 0; i < ts.size(); ++i) samples.push_back({ts[i], jv[i].value});
  CF64 limit;
  try {
    limit = richardson_limit(samples);
  } catch (const std::invalid_argument& e) {
    fail_field("t_grid", e.what());
  }
  CF64 shorter = samples.size() > 2
                     ? richardson_limit({samples.begin(), samples.end() - 1})
                     : limit;
  rep.rows.push_back({"extrapolated", 0.0, fmt17(limit.re), fmt17(limit.im),
                      fmt17(cx_abs(limit - shorter))});

  if (!ch) return;
  if (ch->contains("quad_error_max")) {
    double tol = as_double(ch->at("quad_error_max"), "checks.quad_error_max");
    double worst = 0;
    for (const JloValue& v : jv) worst = std::max(worst, v.quad_error);
    rep.checks.push_back({"quad_error_max", worst <= tol,
                          "max simplex-rule error estimate = " + fmt3(worst) + " (tol " +
                              fmt3(tol) + ")"});
  }
  if (ch->contains("limit")) {
    const json& lj = ch->at("limit");
    CF64 want = as_complex(need(lj, "value"), "checks.limit.value");
    double tol = as_double(need(lj, "tol"), "checks.limit.tol");
    double dev = cx_abs(limit - want);
    rep.checks.push_back({"limit", dev <= tol,
                          "extrapolated " + cx_pair(limit) + ", deviation " + fmt3(dev) +
                              " (tol " + fmt3(tol) + ")"});
  }
  if (ch->contains("compare_local")) {
    const json& cl = ch->at("compare_local");
    int panels = int_or(cl, "panels", 12);
    double tol = as_double(need(cl, "tol"), "checks.compare_local.tol");
    std::vector<std::string> names = slot_jet_names(w);
    check_known_functions(names);
    CF64 local = jlo_limit(q, w, flat_torus_strata(names, panels), 2);
    rep.rows.push_back({"local_limit", double(panels), fmt17(local.re), fmt17(local.im), "0"});
    double dev = cx_abs(limit - local);
    rep.checks.push_back({"compare_local", dev <= tol,
                          "extrapolated " + cx_pair(limit) + " vs local " + cx_pair(local) +
                              ", deviation " + fmt3(dev) + " (tol " + fmt3(tol) + ")"});
  }
}

void run_volterra(const json& cfg, ScenarioReport& rep) {
  rep.precision = "exact";  // rational arithmetic throughout
  int trials = int_or(cfg, "trials", 10);
  if (trials < 1) fail_field("trials", "must be positive");
  int seed = int_or(cfg, "seed", 1);
  std::mt19937 rng((unsigned)seed);
  long compared = 0;
  int bad = 0;
  for (int i = 0; i < trials; ++i) {
    ModelCurvature<CRat> mc = random_mehler_draw(rng, i);
    FiberDensity<CRat> viaKernel =
        fiber_density(mehler_kernel_gaussian(curvature_block_diag(mc)), mc.normal, mc.a);
    FiberDensity<CRat> closed = mehler_fiber_density(mc);
    int mism = viaKernel.pow4pit == closed.pow4pit ? 0 : 1;
    std::set<Rat> keys;
    for (const auto& [k, v] : viaKernel.ladder) keys.insert(k);
    for (const auto& [k, v] : closed.ladder) keys.insert(k);
    for (const Rat& k : keys) {
      ++compared;
      if (!(viaKernel.coefficient(k) == closed.coefficient(k))) ++mism;
    }
    if (mism > 0) ++bad;
    rep.rows.push_back({mehler_draw_label(i), double(i), std::to_string(mism), "0", "0"});
  }
  rep.checks.push_back({"identity", bad == 0 && compared > 0,
                        std::to_string(trials) + " draws, " + std::to_string(compared) +
                            " ladder coefficients compared, " + std::to_string(bad) +
                            " mismatching draws"});
}

}  // namespace

bool ScenarioReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string ScenarioReport::csv() const {
  std::string out = "case,param,value_re,value_im,bound\n";
  for (const auto& r : rows)
    out += r.id + "," + fmt17(r.param) + "," + r.value_re + "," + r.value_im + "," + r.bound +
           "\n";
  return out;
}

std::string ScenarioReport::summary_json() const {
  json j;
  j["schema"] = "eqindex-report/1";
  j["scenario"] = name;
  j["kind"] = kind;
  j["precision"] = precision;
  j["results"] = json::array();
  for (const auto& r : rows)
    j["results"].push_back(json{{"case", r.id},
                                {"param", r.param},
                                {"value_re", r.value_re},
                                {"value_im", r.value_im},
                                {"bound", r.bound}});
  j["checks"] = json::array();
  for (const auto& c : checks)
    j["checks"].push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["pass"] = all_pass();
  return j.dump(2) + "\n";
}

ScenarioReport run_scenario_text(const std::string& text, const std::string& default_name,
                                 const std::string& precision_override, int threads,
                                 const std::string& expected_kind) {
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    std::size_t stop = e.byte > 0 ? std::min(text.size(), (std::size_t)e.byte - 1) : 0;
    for (std::size_t p = 0; p < stop; ++p) {
      if (text[p] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ScenarioError("config parse error at line " + std::to_string(line) + ", column " +
                        std::to_string(col) + ": " + e.what());
  }
  if (!cfg.is_object()) throw ScenarioError("config root must be an object");

  ScenarioReport rep;
  rep.kind = get_str(cfg, "kind");
  rep.name = cfg.contains("name") ? get_str(cfg, "name") : default_name;
  if (!expected_kind.empty() && rep.kind != expected_kind)
    fail_field("kind", "scenario kind is '" + rep.kind + "' but the subcommand expects '" +
                           expected_kind + "'");
  std::string prec = precision_override.empty()
                         ? (cfg.contains("precision") ? get_str(cfg, "precision") : "f64")
                         : precision_override;
  if (prec != "exact" && prec != "f64") fail_field("precision", "must be 'exact' or 'f64'");
  rep.precision = prec;
  if (threads < 1) threads = 1;

  if (rep.kind == "fixed_point_index")
    run_index(cfg, rep, threads);
  else if (rep.kind == "cm_cocycle" || rep.kind == "jlo_limit")
    run_cm(cfg, rep, threads);
  else if (rep.kind == "heat_trace")
    run_heat(cfg, rep, threads);
  else if (rep.kind == "jlo_numeric")
    run_jlo(cfg, rep, threads);
  else if (rep.kind == "volterra_check")
    run_volterra(cfg, rep);
  else
    fail_field("kind", "unknown scenario kind '" + rep.kind + "'");
  return rep;
}

ScenarioReport run_scenario_file(const std::string& path, const std::string& precision_override,
                                 int threads, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return run_scenario_text(ss.str(), std::filesystem::path(path).stem().string(),
                           precision_override, threads, expected_kind);
}

}  // namespace eqi
