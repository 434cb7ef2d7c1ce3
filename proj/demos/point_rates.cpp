// Minimal library usage: analytic rates for a 20x20 array at a = 1.2
// lambda coupled to a w = 15 lambda beam, free space and finesse-1000
// cavity side by side.

#include <iostream>

#include "arraycav/arraycav.hpp"

int main() {
  arraycav::SimulationConfig config;
  config.lattice = {1.2, 20, 20, {}};
  config.beam.waist_w = 15.0;
  config = arraycav::validate_config(config);

  const arraycav::RateBreakdown free_rb = arraycav::free_space_rates(config);
  config.cavity = arraycav::CavitySpec{1000.0};
  const arraycav::RateBreakdown cavity_rb = arraycav::cavity_rates(config);

  std::cout << "free space : C = " << free_rb.cooperativity << ", r0 = " << free_rb.efficiency_r0
            << "\n";
  std::cout << "finesse 1e3: C = " << cavity_rb.cooperativity
            << ", eps = " << cavity_rb.inefficiency_eps << "\n";
  return 0;
}
