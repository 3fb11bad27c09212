// A tour of the library: transforms of a few distributions, a monotone
// convolution, and the Loewner flow of a p-generated field on the level-2
// ball over C + C^{2x2}.

#include <cstdio>

#include "qloewner/qloewner.hpp"

using namespace qloewner;

int main() {
  Rng rng(2024);

  // eta of a point mass is z -> u z; eta of Haar is identically zero.
  const AlgebraShape shape({1, 2});
  const AlgElem u = random_unitary(shape, rng);
  const MatElem z = random_ball_point(shape, 2, 0.8, rng);
  const auto delta = UnitaryDistribution::delta(u);
  std::printf("||eta_delta(z) - u z|| = %.3e\n", distance(eta(delta, z), MatElem::diagonal(u, 2) * z));

  // mu |> nu for two circle measures, through both moment pipelines.
  const auto mu = UnitaryDistribution::circle(CircleMeasure({{0.3, 0.5}, {-1.2, 0.5}}));
  const auto nu = UnitaryDistribution::poisson(0.6);
  const auto a = moments_via_composition(MomentSequence::of(mu, 6), MomentSequence::of(nu, 6), 6);
  const auto b = moments_via_monotone_expansion(MomentSequence::of(mu, 6), MomentSequence::of(nu, 6), 6);
  for (int n = 1; n <= 6; ++n) std::printf("m_%d(mu |> nu) = %+.12f %+.12fi\n", n, a[n].real(), a[n].imag());
  std::printf("pipelines differ by %.3e\n", max_deviation(a, b));

  // A p-generated field and its transition maps.
  const HerglotzField h = random_p_generated(shape, 2, 3, rng);
  const EvolutionFamily fam(h, shape, 2);
  const EvolveResult r = fam.evolve_detailed(0.0, 1.0, z);
  std::printf("||z|| = %.6f, ||v_{0,1}(z)|| = %.6f, %ld steps\n", operator_norm(z), operator_norm(r.value),
              r.stats.accepted);
  std::printf("semigroup error %.3e\n", semigroup_check(fam, 0.0, 0.4, 1.0, {z}).max_error);
  std::printf("||Dv_{0,1}(0) - e^{-1} I|| = %.3e\n", scalar_jacobian_defect(derivative_at_zero(fam, 0.0, 1.0), std::exp(-1.0)));

  // Coefficients of the starlike map generated by the same field at level 1.
  const EvolutionFamily fam1(random_p_generated(shape, 1, 2, rng), shape, 1);
  const CoefficientReport c = coefficient_extract(starlike_map(fam1), shape, 6, 0.5);
  for (int n = 1; n <= 6; ++n) std::printf("||A_%d|| / %d = %.6f\n", n, n, c.ratios[static_cast<std::size_t>(n - 1)]);
  return 0;
}
