#pragma once
// Reproducible random inputs for the self-check scenarios and the acceptance
// suite: rational two-forms, antisymmetric curvature blocks, and a fixed
// cycle of model-curvature configurations at n <= 6.

#include <random>
#include <string>

#include <eqi/mehler.hpp>

namespace eqi {

Ext<CRat> random_two_form(std::mt19937& rng, int n);

// antisymmetric size x size matrix of random two-forms on R^n
FMat<CRat> random_form_block(std::mt19937& rng, int n, int size);

// curvature of a rotation-invariant normal bundle: a random two-form on each
// plane, plus intertwiner cross-blocks between planes with equal angles
FMat<CRat> random_normal_curvature(std::mt19937& rng, int n, const NormalAction<Rat>& normal);

// Fixed cycle of (dimension, normal action) configurations; `which` is taken
// modulo the cycle length. All draws carry a trivial twist.
int mehler_draw_count();
std::string mehler_draw_label(int which);
ModelCurvature<CRat> random_mehler_draw(std::mt19937& rng, int which);

}  // namespace eqi
