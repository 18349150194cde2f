#pragma once

#include <utility>

#include "lsseg/grid.hpp"

namespace lsseg {

// Brute-force reference implementations, intentionally independent of the main
// modules they check (only the Grid type is shared). Intended for small inputs.

/// O(n^2 m^2) nearest-seed Euclidean distance.
Grid oracle_edt(const Grid& mask);

/// All-pairs region IoU weighted coverage (flood-fill labeling, 8-connectivity).
double oracle_wcov(const Grid& gt, const Grid& pred);

/// Direct Heaviside-weighted global means.
std::pair<double, double> oracle_global_means(const Grid& image, const Grid& phi, double eps);

struct OracleBoundaryMetrics {
    double boundf;
    double hausdorff;
};
/// Point-set scans over boundary pixels.
OracleBoundaryMetrics oracle_boundary_metrics(const Grid& gt, const Grid& pred);

}  // namespace lsseg
