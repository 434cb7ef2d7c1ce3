// Writes the analytic cooperativity-versus-spacing table for a 20x20
// array (the resonance structure of the coupled system) to stdout as CSV.

#include <iostream>
#include <vector>

#include "arraycav/arraycav.hpp"

int main() {
  arraycav::SimulationConfig config;
  config.lattice = {1.2, 20, 20, {}};
  config.beam.waist_w = 15.0;
  config = arraycav::validate_config(config);

  std::vector<double> grid;
  for (int i = 0; i < 60; ++i) grid.push_back(1.05 + (2.3 - 1.05) * i / 59.0);
  grid = arraycav::refine_near_resonances(grid, 2.3, /*include_exact=*/true);

  const arraycav::SweepTable table = arraycav::spacing_sweep(config, grid);
  std::cout << arraycav::to_csv(table);
  return 0;
}
