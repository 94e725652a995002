#include <gtest/gtest.h>

#include <cmath>

#include "vanhove/hybrid.hpp"
#include "vanhove/states.hpp"

using namespace vanhove;

namespace {

const PhaseSpaceGrid kGrid({-3, 3, 513}, {-0.3, 0.3, 64});

MeasurementConfig config(double w_plus) {
  MeasurementConfig c;
  c.w_plus = w_plus;
  c.kappa = 2.0;
  c.time = 1.0;
  c.epsilon = 0.05;
  c.steps = 20;
  return c;
}

}  // namespace

TEST(Qubit, PointerStatisticsMatchQuadratureOracle) {
  const MeasurementResult r = qubit_measurement_run(kGrid, config(0.7));
  // Oracle: P(q, T) = 0.7 d(q - 2) + 0.3 d(q + 2); the tail across q = 0 is negligible.
  EXPECT_NEAR(r.pointer_mass_positive, 0.7, 1e-3);
  EXPECT_NEAR(r.pointer_mass_negative, 0.3, 1e-3);
  // Peak of the final pointer density at q = +K.
  std::size_t arg = 0;
  for (std::size_t k = 0; k < r.pointer_final.size(); ++k)
    if (r.pointer_final[k] > r.pointer_final[arg]) arg = k;
  EXPECT_NEAR(kGrid.q().coord(static_cast<int>(arg)), 2.0, 0.5 * kGrid.q().spacing());
}

TEST(Qubit, ConditionalDensityDecoheres) {
  const MeasurementResult r = qubit_measurement_run(kGrid, config(0.7));
  const ConditionalDensityOperator pre = conditional_density(r.initial);
  const ConditionalDensityOperator post = conditional_density(r.final_state);
  EXPECT_NEAR(pre.offdiag_magnitude(), std::sqrt(0.21), 1e-3);
  EXPECT_LT(post.offdiag_magnitude(), 1e-6);
  EXPECT_NEAR(post.rho(0, 0).real(), 0.7, 1e-3);
  EXPECT_NEAR(post.rho(1, 1).real(), 0.3, 1e-3);
  for (const ConditionalDensityOperator& rho : r.rho_series) {
    EXPECT_LT(rho.hermiticity_error(), 1e-10);
    EXPECT_NEAR(rho.trace(), 1.0, 1e-4);
    EXPECT_GE(rho.min_eigenvalue(), -1e-8);
  }
  for (std::size_t k = 1; k < r.offdiag_series.size(); ++k) {
    EXPECT_LE(r.offdiag_series[k].second, r.offdiag_series[k - 1].second + 1e-12);
  }
}

TEST(Qubit, PureUpStateIsProjector) {
  const MeasurementResult r = qubit_measurement_run(kGrid, config(1.0));
  const ConditionalDensityOperator rho = conditional_density(r.final_state);
  EXPECT_NEAR(rho.rho(0, 0).real(), 1.0, 1e-4);
  EXPECT_NEAR(std::abs(rho.rho(1, 1)), 0.0, 1e-12);
  EXPECT_NEAR(r.pointer_mass_positive, 1.0, 1e-3);
}

TEST(Qubit, InitialPointerIsMollifiedDelta) {
  const QubitHybridState s = pointer_initial_state(kGrid, config(0.7));
  EXPECT_NEAR(s.norm(), 1.0, 1e-12);
  const std::vector<double> p = pointer_density(s);
  for (int i = 200; i < 313; i += 8) EXPECT_NEAR(p[i], mollified_delta(kGrid.q().coord(i), 0.05), 1e-6);
}

TEST(Qubit, FullHamiltonianKeepsDensities) {
  MeasurementConfig c = config(0.7);
  c.full_hamiltonian = true;
  c.b0 = 0.8;
  const MeasurementResult full = qubit_measurement_run(kGrid, c);
  EXPECT_NEAR(full.pointer_mass_positive, 0.7, 1e-3);
  EXPECT_NEAR(conditional_density(full.final_state).rho(0, 0).real(), 0.7, 1e-3);
}

TEST(Qubit, Preconditions) {
  MeasurementConfig c = config(1.2);
  EXPECT_THROW(c.validate(), PreconditionError);
  c = config(0.5);
  c.kappa = 10.0;
  EXPECT_THROW(qubit_measurement_run(kGrid, c), PreconditionError);
}

TEST(Qubit, ReportLayout) {
  const nlohmann::json j = qubit_measurement_run(kGrid, config(0.7)).report();
  for (const char* key : {"w_plus", "w_minus", "K", "epsilon", "pointer_mass_positive", "pointer_mass_negative",
                          "rho_QC", "offdiag_magnitude_series"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["rho_QC"].size(), 4u);
}
