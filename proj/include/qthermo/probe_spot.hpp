#pragma once

#include <cstddef>
#include <vector>

namespace qthermo::detect {

/// Focused probe beam on the sample plane.
struct ProbeSpot {
  double center_x = 0.0;          // m
  double center_y = 0.0;          // m
  double diameter_1e2 = 25e-6;    // 1/e^2 intensity diameter, m
  double power_at_sample = 25e-6; // W
  double wavelength = 795e-9;     // m, metadata

  void validate() const;
};

struct CellWeight {
  std::size_t cell = 0;
  double weight = 0.0;  // fraction of the spot's power landing on the cell
};

/// Cell-integrated Gaussian intensity fractions on an nx-by-ny grid of square
/// cells (origin at the grid corner). Light falling outside the grid is not
/// listed, so the weights sum to at most 1.
std::vector<CellWeight> spot_weights(const ProbeSpot& spot, int nx, int ny, double cell_size);

}  // namespace qthermo::detect
