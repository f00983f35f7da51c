#pragma once
// Brute-force spectral oracle for the Dirac operator on the round sphere
// twisted by a monopole line bundle of integer degree k.
//
// The operator is assembled as a dense symmetric matrix over a truncated
// spin-weighted harmonic basis and handed to a dense eigensolver; spectra,
// kernel data, rotation characters and heat traces are all read off the
// numerical eigenvectors.  Nothing downstream of the ladder coefficients is
// assumed: multiplicities, the index and the characters come out of the
// solve, so closed-form model builders can be checked against this.
//
// Basis: modes sY_{lm} at spin weight s+ = (k-1)/2 on the positive chirality
// half and s- = s+ + 1 on the negative half, truncated at l <= lmax (+1/2
// when l is half-integral), with the ladder action
//   (raise)  sY_lm -> sqrt((l-s)(l+s+1)) (s+1)Y_lm
// defining D = [[0, A^T], [A, 0]] for A the raising matrix between the two
// halves.  Rotation about the pole acts diagonally by e^{i m theta}; doubled
// integers (2l, 2m, 2s) keep the bookkeeping exact for both parities.

#include <vector>

#include <eqi/num.hpp>

namespace eqi {

struct SphereOracle {
  int k = 0;
  int lmax = 0;
  int dim = 0;
  std::vector<int> twom;      // doubled rotation weight per basis vector
  std::vector<int> grading;   // +1 on the s+ half, -1 on the s- half
  std::vector<double> eigs;   // ascending eigenvalues of D
  std::vector<double> vecs;   // dim x dim eigenvectors, column-major

  // graded dimension of the numerical kernel
  int index(double tol = 1e-8) const;
  // graded tr of the rotation on the numerical kernel (supertrace at t = inf)
  CF64 kernel_character(double theta, double tol = 1e-8) const;
  int count_in_window(double lo, double hi) const;
  // ungraded tr of the rotation on eigenspaces with lo <= lambda <= hi
  CF64 character_in_window(double lo, double hi, double theta) const;
  CF64 supertrace(double theta, double t) const;
  CF64 trace(double theta, double t) const;
  std::vector<double> distinct_levels(double tol = 1e-7) const;
  // smallest |eigenvalue| excluded by the truncation
  double lambda_trunc() const;
};

SphereOracle sphere_dirac_diagonalize(int lmax, int monopole_k);

}  // namespace eqi
