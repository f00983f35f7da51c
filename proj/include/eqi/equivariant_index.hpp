#pragma once
// Fixed-point evaluation of the equivariant index and of the cyclic cocycles
// (Connes-Moscovici pairing and its short-time JLO limit) built from it.
//
// Geometry enters only through per-node data on fixed-point strata: a model
// curvature block pair (R', R''), the normal rotation, a twist, a quadrature
// weight, and an orientation sign for the normal frame.  Functions enter as
// jets (value plus differential in the stratum frame) stored per node under
// string ids; a GroupWord resolves which jet each cocycle slot reads after
// pulling back through the partial composites of the group factors.
//
// A stratum of dimension a contributes
//   (2 pi)^{-a/2} sum_nodes weight * sign * | jets ^ A-hat(R') ^ nu(R'') |^{(a,0)}
// and the total carries the spinor normalisation (-i)^{n/2}.  The nu factor
// uses nu_phi(-R'') so that gamma_phi_volterra applied to the model fiber
// density reproduces these densities exactly (same orientation as the fiber
// integral of the curvature kernel).

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <eqi/mehler.hpp>

namespace eqi {

// Value and stratum-frame differential of a function at one node.
template <class C>
struct FunctionJet {
  C value{};
  std::vector<C> diff;  // a components, one per horizontal frame vector
};

template <class C>
struct StratumNode {
  typename C::Real weight{};
  int sign = 1;  // orientation of the normal frame relative to the rotation
  ModelCurvature<C> mc;
  std::map<std::string, FunctionJet<C>> jets;
};

template <class C>
struct FixedPointStratum {
  int a = 0;
  std::vector<StratumNode<C>> nodes;
};

// Word of (function id, group element id) factors together with the tables
// needed to resolve partial composites and pullbacks to stored jet ids.
struct GroupWord {
  std::vector<std::pair<std::string, std::string>> factors;
  std::map<std::pair<std::string, std::string>, std::string> compose;   // (g,h) -> g h
  std::map<std::pair<std::string, std::string>, std::string> pullback;  // (f,g) -> f o g^{-1}
  std::string identity = "id";
};

inline std::string word_composite(const GroupWord& w, std::size_t upto) {
  if (upto >= w.factors.size()) throw std::invalid_argument("composite index exceeds the word length");
  std::string g = w.identity;
  for (std::size_t j = 0; j <= upto; ++j) {
    const std::string& h = w.factors[j].second;
    if (h == w.identity) continue;
    if (g == w.identity) {
      g = h;
      continue;
    }
    auto it = w.compose.find({g, h});
    if (it == w.compose.end()) throw std::invalid_argument("composition table is missing " + g + " * " + h);
    g = it->second;
  }
  return g;
}

// Jet id read by slot j: f^0 as stored, f^j pulled back through phi_(j-1).
inline std::string word_pullback_id(const GroupWord& w, std::size_t j) {
  if (j >= w.factors.size()) throw std::invalid_argument("slot index exceeds the word length");
  const std::string& f = w.factors[j].first;
  if (j == 0) return f;
  std::string g = word_composite(w, j - 1);
  if (g == w.identity) return f;
  auto it = w.pullback.find({f, g});
  if (it == w.pullback.end()) throw std::invalid_argument("pullback table is missing " + f + " o " + g + "^{-1}");
  return it->second;
}

// Checks that the composition table is closed over the elements it mentions
// and associative wherever all four products are listed.
inline bool group_word_closed_associative(const GroupWord& w) {
  std::set<std::string> els{w.identity};
  for (const auto& [f, g] : w.factors) els.insert(g);
  for (const auto& [key, v] : w.compose) {
    els.insert(key.first);
    els.insert(key.second);
  }
  auto mul = [&](const std::string& g, const std::string& h, std::string& out) {
    if (g == w.identity) { out = h; return true; }
    if (h == w.identity) { out = g; return true; }
    auto it = w.compose.find({g, h});
    if (it == w.compose.end()) return false;
    out = it->second;
    return true;
  };
  for (const auto& [key, v] : w.compose)
    if (!els.count(v)) return false;
  for (const auto& a : els)
    for (const auto& b : els)
      for (const auto& c : els) {
        std::string ab, bc, l, r;
        if (!mul(a, b, ab) || !mul(b, c, bc)) continue;
        if (!mul(ab, c, l) || !mul(a, bc, r)) continue;
        if (l != r) return false;
      }
  return true;
}

// Cocycle constants c_{q,alpha} = (-1)^{|alpha|} (q-1)! |alpha|! /
// (alpha! (alpha_1+1)(alpha_2+2)...(alpha_{2q}+2q)), alpha of length 2q.
inline Rat cm_constants(int q, const MIdx& alpha) {
  if (q < 1) throw std::invalid_argument("cocycle degree must be at least 1");
  if ((int)alpha.size() != 2 * q) throw std::invalid_argument("multi-index length must be 2q");
  long total = 0;
  for (int ak : alpha) {
    if (ak < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
    total += ak;
  }
  Rat c = factorial(q - 1) * factorial(total);
  if (total % 2) c = -c;
  for (int j = 0; j < 2 * q; ++j) c /= factorial(alpha[j]) * Rat(alpha[j] + j + 1);
  return c;
}

namespace detail {

template <class C>
void validate_strata(const std::vector<FixedPointStratum<C>>& strata, int n) {
  if (n <= 0 || n % 2) throw std::invalid_argument("ambient dimension must be positive and even");
  for (const auto& s : strata) {
    if (s.a < 0 || s.a % 2 || s.a > n)
      throw std::invalid_argument("stratum dimension must be even and at most the ambient dimension");
    for (const auto& node : s.nodes) {
      if (node.mc.n != n) throw std::invalid_argument("node curvature dimension differs from the ambient dimension");
      if (node.mc.a != s.a) throw std::invalid_argument("node curvature does not match the stratum dimension");
      if (!(node.weight > typename C::Real(0))) throw std::invalid_argument("node weights must be positive");
      if (node.sign != 1 && node.sign != -1) throw std::invalid_argument("normal orientation sign must be +1 or -1");
      if (s.a == 0 && !(node.weight == typename C::Real(1)))
        throw std::invalid_argument("isolated fixed points carry unit weight");
    }
  }
}

// A-hat(R') ^ nu(R''), optionally ^ Ch(twist).  Same nu orientation as
// mehler_fiber_density, so the two densities agree form by form.
template <class C>
Ext<C> stratum_char_form(const ModelCurvature<C>& mc, bool with_chern) {
  Ext<C> total = mc.a > 0 ? a_hat(mc.Rp) : Ext<C>::one(mc.n);
  if (mc.normal.normal_dim() > 0) total = wedge(total, nu_phi(-mc.Rpp, mc.normal));
  if (with_chern) total = wedge(total, ch_phi(mc.twist));
  return total;
}

// Multiplies a per-stratum horizontal sum by (2 pi)^{-a/2}.  Exact scalars
// cannot absorb the irrational factor, so they only pass through when zero.
template <class C>
C scale_two_pi(const C& s, int a) {
  if (a == 0) return s;
  if constexpr (RealTraits<typename C::Real>::exact) {
    if (s.is_zero()) return s;
    throw std::domain_error("positive-dimensional strata scale by (2 pi)^{-a/2}; use floating point");
  } else {
    return s * C(std::pow(2.0 * M_PI, -0.5 * a));
  }
}

template <class C>
const FunctionJet<C>& node_jet(const StratumNode<C>& node, const std::string& id) {
  auto it = node.jets.find(id);
  if (it == node.jets.end()) throw std::invalid_argument("node is missing jets for function " + id);
  return it->second;
}

}  // namespace detail

// Equivariant index from fixed-point data:
//   (-i)^{n/2} sum_strata (2 pi)^{-a/2} sum_nodes w s |A-hat ^ nu ^ Ch|^{(a,0)}.
template <class C>
C equivariant_index(const std::vector<FixedPointStratum<C>>& strata, int n) {
  detail::validate_strata(strata, n);
  C total{};
  for (const auto& s : strata) {
    C acc{};
    for (const auto& node : s.nodes) {
      C val = berezin_horizontal(detail::stratum_char_form(node.mc, true), s.a);
      acc = acc + val * C(node.weight * typename C::Real(node.sign));
    }
    total = total + detail::scale_two_pi(acc, s.a);
  }
  return pow_nonneg(-C::i(), n / 2) * total;
}

// Cyclic cocycle of degree 2q paired with the word f^0 phi_0 f^1 phi_1 ...:
//   (-i)^{n/2}/(2q)! sum_strata (2 pi)^{-a/2}
//     sum_nodes w s | f^0 dfhat^1 ^ ... ^ dfhat^{2q} ^ A-hat ^ nu |^{(a,0)}
// with fhat^j = f^j o phi_(j-1)^{-1} resolved through the word tables.
template <class C>
C cm_cocycle(int q, const GroupWord& word, const std::vector<FixedPointStratum<C>>& strata, int n) {
  if (q < 0) throw std::invalid_argument("cocycle degree must be nonnegative");
  if ((int)word.factors.size() != 2 * q + 1)
    throw std::invalid_argument("group word must list exactly 2q+1 factors");
  detail::validate_strata(strata, n);
  std::vector<std::string> ids(2 * q + 1);
  for (int j = 0; j <= 2 * q; ++j) ids[j] = word_pullback_id(word, j);
  C total{};
  for (const auto& s : strata) {
    C acc{};
    for (const auto& node : s.nodes) {
      Ext<C> form = detail::stratum_char_form(node.mc, false) * detail::node_jet(node, ids[0]).value;
      for (int j = 1; j <= 2 * q; ++j) {
        const FunctionJet<C>& fj = detail::node_jet(node, ids[j]);
        if ((int)fj.diff.size() != s.a)
          throw std::invalid_argument("jet differential does not match the stratum frame");
        Ext<C> df(n);
        for (int k = 0; k < s.a; ++k) df = df + Ext<C>::dx(n, k + 1) * fj.diff[k];
        form = wedge(form, df);
      }
      C val = berezin_horizontal(form, s.a);
      acc = acc + val * C(node.weight * typename C::Real(node.sign));
    }
    total = total + detail::scale_two_pi(acc, s.a);
  }
  return pow_nonneg(-C::i(), n / 2) * total * cx_from_rat<C>(Rat(1) / factorial(2 * q));
}

// Short-time limit of the JLO pairing.  The limit collapses onto the same
// fixed-point functional as the cyclic cocycle, so this is an alias kept for
// callers that reach it from the heat-kernel side.
template <class C>
C jlo_limit(int q, const GroupWord& word, const std::vector<FixedPointStratum<C>>& strata, int n) {
  return cm_cocycle(q, word, strata, n);
}

// Localised supertrace functional applied to an already fiber-integrated
// Volterra model density I_Q(0,1):
//   gamma_phi(Q) = (-i)^{n/2} 2^{a/2} det^{1/2}(1 - phi^N) | phi^E I_Q |^{(a,0)}.
template <class C>
C gamma_phi_volterra(const Ext<C>& q_fiber, const NormalAction<typename C::Real>& normal,
                     const C& phiE, int a_dim, int n) {
  if (n <= 0 || n % 2) throw std::invalid_argument("ambient dimension must be positive and even");
  if (a_dim < 0 || a_dim % 2) throw std::invalid_argument("stratum dimension must be even and nonnegative");
  if (a_dim > n) throw std::invalid_argument("stratum dimension exceeds the ambient dimension");
  if (q_fiber.n != n) throw std::invalid_argument("density lives in the wrong exterior algebra");
  if (normal.normal_dim() != n - a_dim)
    throw std::invalid_argument("normal action does not match the stratum codimension");
  C pref = pow_nonneg(-C::i(), n / 2) * cx_from_rat<C>(rat_pow(Rat(2), a_dim / 2)) * C(normal.det_sqrt());
  return pref * phiE * berezin_horizontal(q_fiber, a_dim);
}

}  // namespace eqi
