#pragma once
// Exact Dirac spectral models (flat torus, round sphere with monopole twist)
// providing equivariant heat traces, simplex-quadrature JLO values, and
// power-law fits. These are the spectral-side oracles for the fixed-point
// index and cocycle formulas.
//
// Level bookkeeping: levels are signed eigenvalues of D. For a +-lambda pair
// the positive level carries the even half of ker(D^2 - lambda^2) and the
// negative level the odd half, with characters attributed the same way, so
// graded and ungraded level sums reproduce the truncated traces exactly and
// the spectral-symmetry invariant reads "swap the grading data under
// lambda -> -lambda".  lambda_trunc is the completeness radius: every
// eigenvalue of the full operator below it is listed (levels above it may be
// partially filled by corner modes of the truncation box).

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <eqi/equivariant_index.hpp>

namespace eqi {

struct LevelCharacter {
  CF64 plus{}, minus{};
};

struct SpectralLevel {
  double lambda = 0;
  int dim_plus = 0;
  int dim_minus = 0;
  std::map<std::string, LevelCharacter> character;  // group element id -> traces
};

// Named operators on the truncated mode basis: sparse rows (col -> value),
// the diagonal of D^2, the grading, the Dirac matrix itself (for forming
// [D, f]), and diagonal unitaries implementing the group elements.
struct ModeBasisOps {
  int dim = 0;
  std::vector<double> lam2;
  std::vector<int> grading;
  std::vector<std::map<int, CF64>> dirac;
  std::map<std::string, std::vector<std::map<int, CF64>>> ops;
  std::map<std::string, std::vector<CF64>> unitary;
};

struct SpectralModel {
  std::vector<SpectralLevel> levels;  // ascending lambda
  double lambda_trunc = 0;
  long total_dim = 0;
  std::map<std::string, std::string> meta;
  ModeBasisOps basis;  // empty unless the model ships matrix elements
  bool has_basis() const { return basis.dim > 0; }
};

// Validates and finalizes level data: ascending lambda, positive dims, and
// exact spectral symmetry (each nonzero level has a mirror with swapped
// grading data). total_dim is derived.
SpectralModel make_spectral_model(std::vector<SpectralLevel> levels, double lambda_trunc,
                                  std::map<std::string, std::string> meta);

// Round-sphere Dirac twisted by a degree-k monopole bundle. Group elements:
// "id" plus "rot0", "rot1", ... for the given pole rotation angles. Shares
// its truncation convention with sphere_dirac_diagonalize so the two cover
// identical mode sets.
SpectralModel build_sphere_model(int lmax, int monopole_k,
                                 const std::vector<double>& rotation_angles);

// Flat-torus Dirac on the unit square lattice, modes |k_i| <= kmax.
// spin_structure bits: 1 -> half-integer shift in x1, 2 -> in x2 (0 is the
// periodic structure, the only one with zero modes). Group elements: "id"
// and "t" (the given translation, character e^{2 pi i k.s} per mode; the
// implementing unitary is normalized to make that the character). Ships
// matrix elements: "one", "f1" = e^{2 pi i x1}, "f2", "f0" = (f1 f2)^{-1},
// "cos1", "sin1", "cos2", "sin2".
SpectralModel build_torus_model(int kmax, int spin_structure,
                                std::pair<double, double> translation);

struct TraceValue {
  CF64 value{};
  double bound = 0;  // truncation heuristic: total_dim * exp(-t lambda_trunc^2)
};

// str[U_phi e^{-t D^2}] from the level data.
TraceValue heat_supertrace(const SpectralModel& m, const std::string& phi, double t);
// str[P U_phi e^{-t D^2}] with P a named operator from the mode basis.
TraceValue heat_supertrace(const SpectralModel& m, const std::string& phi, double t,
                           const std::string& op);
// ungraded companion tr[U_phi e^{-t D^2}]
TraceValue heat_trace(const SpectralModel& m, const std::string& phi, double t);

// Product Gauss-Legendre rule on the standard simplex {s >= 0, sum = 1} of
// dimension m_dim via the stick-breaking map; nodes carry m_dim+1 barycentric
// coordinates. Exposed for direct testing.
void simplex_rule(int m_dim, int per_axis, std::vector<std::vector<double>>& nodes,
                  std::vector<double>& weights);

struct JloValue {
  CF64 value{};
  double quad_error = 0;  // node-count halving estimate
  double bound = 0;       // spectral truncation heuristic
};

// t^q str[X^0 e^{-s0 t D^2} X^1 ... X^{2q} e^{-s_2q t D^2}] integrated over
// the simplex, X^0 = f^0 U_0 and X^j = [D, f^j] U_j, with the word's factor
// ids resolved against the model's matrix elements. q=0 falls through to
// heat_supertrace (identical code path). rotate cyclically shifts which
// (X, s) pair leads the trace; graded cyclicity makes rotate=1 a no-op and
// flips the sign when the leading block is odd.
JloValue jlo_numeric(const SpectralModel& m, const GroupWord& word, int q, double t,
                     int simplex_nodes, int rotate = 0);

struct FitReport {
  double exponent = 0;          // free log-log fit of |value| ~ C t^exponent
  double coefficient = 0;       // C of the free fit
  double residual = 0;          // rms residual of the log fit
  CF64 coeff_at_expected{};     // least-squares c in value ~ c t^expected
  bool vanishing = false;       // values at the floor; free fit skipped
};

// Requires >= 4 samples on a geometric t-grid.
FitReport fit_asymptotic_orders(const std::vector<std::pair<double, CF64>>& samples,
                                double expected_leading);

// JSON document {levels:[{lambda, dim_plus, dim_minus, characters:{id:
// [re+, im+, re-, im-]}}], lmax, meta} with deterministic field order.
// Matrix elements are not serialized.
std::string model_to_json(const SpectralModel& m);
SpectralModel model_from_json(const std::string& text);

}  // namespace eqi
