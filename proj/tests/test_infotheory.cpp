#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "asyncnav/infotheory.hpp"

using namespace asyncnav;

TEST_CASE("exact LTV decomposition balances algebraically") {
  for (int k : {1, 2, 3}) {
    const ToyMdp mdp = toy_chain(k);
    for (int o = 0; o < mdp.n_states; ++o) {
      const LtvExact e = ltv_exact(mdp, o);
      CHECK(e.var_given_oprime ==
            Catch::Approx(e.mean_within + e.var_across).margin(1e-10));
      CHECK(e.var_across >= -1e-15);
    }
  }
}

TEST_CASE("delay-free chain: zero excess variance, equal entropies") {
  const ToyMdp mdp = toy_chain(1);  // k identically 0
  const LtvExact e = ltv_exact(mdp, 1);
  CHECK(e.var_across == Catch::Approx(0.0).margin(1e-15));
  const auto [h_op, h_o] = conditional_entropies(mdp);
  CHECK(h_op == Catch::Approx(h_o).margin(1e-12));
  CHECK(h_op == Catch::Approx(0.0).margin(1e-12));  // O' = S exactly
}

TEST_CASE("3-state chain with k in {0,1}: positive excess variance, entropy drop") {
  const ToyMdp mdp = toy_chain(2);
  const LtvExact e = ltv_exact(mdp, 1);
  CHECK(e.var_across > 0.0);
  const auto [h_op, h_o] = conditional_entropies(mdp);
  CHECK(h_o < h_op);
}

TEST_CASE("Monte Carlo identity check agrees with the exact oracle") {
  const ToyMdp mdp = toy_chain(2);
  const LtvReport rep = variance_decomposition_check(mdp, 1, 200000, 777);
  CHECK(rep.identity_ok);
  CHECK(rep.excess_positive);
  CHECK(rep.entropy_ok);
  // MC estimates land near the exact values
  CHECK(std::abs(rep.mc_lhs - rep.exact.var_given_oprime) <= 5.0 * rep.se_lhs + 1e-6);
  CHECK(std::abs(rep.mc_within - rep.exact.mean_within) <= 5.0 * rep.se_within + 1e-6);
  CHECK(std::abs(rep.mc_across - rep.exact.var_across) <= 5.0 * rep.se_across + 1e-3);
}

TEST_CASE("conditional entropy definitional sum on a known joint") {
  // X uniform over {0,1}, Y = X: H(Y|X) = 0
  std::vector<double> ident{0.5, 0.0, 0.0, 0.5};
  CHECK(conditional_entropy(ident, 2, 2) == Catch::Approx(0.0).margin(1e-15));
  // Y independent uniform: H(Y|X) = ln 2
  std::vector<double> indep{0.25, 0.25, 0.25, 0.25};
  CHECK(conditional_entropy(indep, 2, 2) == Catch::Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("conditioning on more variables never increases conditional entropy") {
  const double violation = entropy_monotonicity_max_violation(100, 4242);
  CHECK(violation <= 1e-12);
}

TEST_CASE("malformed toy MDP rejected") {
  ToyMdp empty;
  CHECK_THROWS_AS(variance_decomposition_check(empty, 0, 100), std::invalid_argument);
}
