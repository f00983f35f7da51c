#pragma once
// Scenario runner behind the command line front end. A scenario is one JSON
// document whose "kind" selects the computation; the runner produces a CSV
// table (one row per evaluation) plus a JSON summary with embedded checks.
// Also hosts the small geometry builders shared with the acceptance suite:
// two-pole rotation strata and the flat-torus quadrature stratum.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <eqi/equivariant_index.hpp>
#include <eqi/spectral_models.hpp>

namespace eqi {

// Isolated fixed points of a surface rotation with half-angle phase u: a
// rank-one twist acts by u^k at the first pole and by conj(u)^k at the
// second, and the poles carry opposite normal orientation. The flip flag is
// a sensitivity fixture: it repeats the first orientation at the second pole,
// which must break the untwisted cancellation.
template <class C>
std::vector<FixedPointStratum<C>> two_pole_strata(const NormalAction<typename C::Real>& normal,
                                                  const C& u, int k,
                                                  bool flip_second_sign = false) {
  auto pole = [&](const C& ph, int sign) {
    TwistData<C> tw;
    tw.rank = 1;
    tw.F0 = FMat<C>(2, 1);
    tw.phiE = {ph};
    StratumNode<C> nd;
    nd.weight = typename C::Real(1);
    nd.sign = sign;
    nd.mc = make_model_curvature(2, FMat<C>(2, 0), FMat<C>(2, 2), tw, normal);
    return nd;
  };
  C ph = pow_nonneg(u, k < 0 ? -k : k);
  if (k < 0) ph = ph.conj();
  FixedPointStratum<C> st;
  st.a = 0;
  st.nodes = {pole(ph, 1), pole(ph.conj(), flip_second_sign ? 1 : -1)};
  return {st};
}

// Jet (value and the two partials) of a named function on the flat 2-torus
// with unit periods. Names: one, f1 = exp(2 pi i x1), f2 = exp(2 pi i x2),
// f0 = conj(f1 f2), cos1, sin1, cos2, sin2.
FunctionJet<CF64> torus_function_jet(const std::string& name, double x1, double x2);

// Full-torus stratum (a = n = 2) carrying the jets of the named functions on
// a product Gauss-Legendre grid with `panels` points per axis.
std::vector<FixedPointStratum<CF64>> flat_torus_strata(const std::vector<std::string>& names,
                                                       int panels);

// (2 i pi)^{-1} / 2! * integral of f0 df1 ^ df2 by direct 2-D quadrature,
// for cross-checking the degree-one cocycle.
CF64 torus_pairing_quadrature(const std::vector<std::string>& names, int panels);

// Polynomial extrapolation of (t, value) samples to t -> 0. Needs at least
// two samples with distinct t.
CF64 richardson_limit(std::vector<std::pair<double, CF64>> samples);

struct ReportRow {
  std::string id;
  double param = 0;
  std::string value_re, value_im, bound;
};

struct ReportCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  std::string kind;
  std::string precision;
  std::vector<ReportRow> rows;
  std::vector<ReportCheck> checks;
  bool all_pass() const;
  std::string csv() const;
  std::string summary_json() const;
};

// Configuration problems (parse errors, missing or ill-typed fields, wrong
// kind for the subcommand). The front end maps these to exit code 2.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// `precision_override` empty keeps the config's own "precision" (default
// f64); `expected_kind` empty accepts any kind.
ScenarioReport run_scenario_text(const std::string& text, const std::string& default_name,
                                 const std::string& precision_override, int threads,
                                 const std::string& expected_kind = "");
ScenarioReport run_scenario_file(const std::string& path, const std::string& precision_override,
                                 int threads, const std::string& expected_kind = "");

}  // namespace eqi
