#include <eqi/sphere_oracle.hpp>

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace eqi {

namespace {

// doubled l runs over twos parity, |twos| <= twol <= twolmax
int ladder_top(int lmax, int twos) {
  return 2 * lmax + (std::abs(twos) % 2);
}

struct ModeTable {
  std::vector<std::pair<int, int>> modes;  // (twol, twom)
  std::map<std::pair<int, int>, int> at;
};

ModeTable enumerate_modes(int lmax, int twos) {
  ModeTable t;
  for (int twol = std::abs(twos); twol <= ladder_top(lmax, twos); twol += 2)
    for (int twom = -twol; twom <= twol; twom += 2) {
      t.at[{twol, twom}] = (int)t.modes.size();
      t.modes.push_back({twol, twom});
    }
  return t;
}

}  // namespace

SphereOracle sphere_dirac_diagonalize(int lmax, int monopole_k) {
  if (lmax < 1) throw std::invalid_argument("lmax must be at least 1");
  const int twos_p = monopole_k - 1;
  const int twos_m = monopole_k + 1;
  ModeTable plus = enumerate_modes(lmax, twos_p);
  ModeTable minus = enumerate_modes(lmax, twos_m);
  const int np = (int)plus.modes.size();
  const int nm = (int)minus.modes.size();
  const int dim = np + nm;

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim, dim);
  for (int b = 0; b < np; ++b) {
    auto [twol, twom] = plus.modes[b];
    double prod = double(twol - twos_p) * double(twol + twos_p + 2);
    if (prod <= 0) continue;  // ladder annihilates the mode
    double alpha = std::sqrt(prod) / 2.0;
    int tgt = minus.at.at({twol, twom});
    D(np + tgt, b) = alpha;
    D(b, np + tgt) = alpha;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(D);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");

  SphereOracle o;
  o.k = monopole_k;
  o.lmax = lmax;
  o.dim = dim;
  o.twom.resize(dim);
  o.grading.resize(dim);
  for (int b = 0; b < np; ++b) {
    o.twom[b] = plus.modes[b].second;
    o.grading[b] = 1;
  }
  for (int b = 0; b < nm; ++b) {
    o.twom[np + b] = minus.modes[b].second;
    o.grading[np + b] = -1;
  }
  o.eigs.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + dim);
  o.vecs.resize((size_t)dim * dim);
  Eigen::Map<Eigen::MatrixXd>(o.vecs.data(), dim, dim) = solver.eigenvectors();
  return o;
}

int SphereOracle::index(double tol) const {
  double acc = 0;
  for (int i = 0; i < dim; ++i) {
    if (std::abs(eigs[i]) >= tol) continue;
    for (int b = 0; b < dim; ++b) {
      double v = vecs[(size_t)i * dim + b];
      acc += grading[b] * v * v;
    }
  }
  return (int)std::lround(acc);
}

CF64 SphereOracle::kernel_character(double theta, double tol) const {
  // graded: the plus and minus halves of the kernel enter with opposite sign,
  // so this is the t -> infinity limit of the equivariant supertrace
  CF64 acc;
  for (int i = 0; i < dim; ++i) {
    if (std::abs(eigs[i]) > tol) continue;
    for (int b = 0; b < dim; ++b) {
      double v = vecs[(size_t)i * dim + b];
      double w = grading[b] * v * v;
      double ph = twom[b] * theta / 2.0;
      acc = acc + CF64(w * std::cos(ph), w * std::sin(ph));
    }
  }
  return acc;
}

int SphereOracle::count_in_window(double lo, double hi) const {
  int c = 0;
  for (double e : eigs)
    if (e >= lo && e <= hi) ++c;
  return c;
}

CF64 SphereOracle::character_in_window(double lo, double hi, double theta) const {
  CF64 acc;
  for (int i = 0; i < dim; ++i) {
    if (eigs[i] < lo || eigs[i] > hi) continue;
    for (int b = 0; b < dim; ++b) {
      double v = vecs[(size_t)i * dim + b];
      double w = v * v;
      double ph = twom[b] * theta / 2.0;
      acc = acc + CF64(w * std::cos(ph), w * std::sin(ph));
    }
  }
  return acc;
}

CF64 SphereOracle::supertrace(double theta, double t) const {
  CF64 acc;
  for (int i = 0; i < dim; ++i) {
    double damp = std::exp(-t * eigs[i] * eigs[i]);
    for (int b = 0; b < dim; ++b) {
      double v = vecs[(size_t)i * dim + b];
      double w = grading[b] * v * v * damp;
      double ph = twom[b] * theta / 2.0;
      acc = acc + CF64(w * std::cos(ph), w * std::sin(ph));
    }
  }
  return acc;
}

CF64 SphereOracle::trace(double theta, double t) const {
  CF64 acc;
  for (int i = 0; i < dim; ++i) {
    double damp = std::exp(-t * eigs[i] * eigs[i]);
    for (int b = 0; b < dim; ++b) {
      double v = vecs[(size_t)i * dim + b];
      double w = v * v * damp;
      double ph = twom[b] * theta / 2.0;
      acc = acc + CF64(w * std::cos(ph), w * std::sin(ph));
    }
  }
  return acc;
}

std::vector<double> SphereOracle::distinct_levels(double tol) const {
  std::vector<double> out;
  for (double e : eigs)
    if (out.empty() || e - out.back() > tol) out.push_back(e);
  return out;
}

double SphereOracle::lambda_trunc() const {
  const int twos_p = k - 1;
  int next = ladder_top(lmax, twos_p) + 2;
  return std::sqrt(double(next - twos_p) * double(next + twos_p + 2)) / 2.0;
}

}  // namespace eqi
