#pragma once

#include <string>
#include <vector>

#include "lsseg/grid.hpp"

namespace lsseg {

struct MetricsReport {
    double dice = 0.0;
    double iou = 0.0;
    double wcov = 0.0;
    double boundf = 0.0;
    double hausdorff = -1.0;  // -1 when undefined (a mask is empty)
    int pixel_count = 0;
};

/// Connected components; labels are assigned in raster-scan first-pixel order,
/// 0 = background.
struct Regions {
    int count = 0;
    std::vector<int> labels;  // row-major, size = h*w
    std::vector<int> areas;   // indexed by label-1
};

double dice_score(const Grid& g, const Grid& y);
double iou(const Grid& g, const Grid& y);
Regions label_components(const Grid& mask, int connectivity = 8);
double wcov(const Grid& gt, const Grid& pred, int connectivity = 8);
/// Boundary F-measure averaged over 1..5 px tolerances.
double boundf(const Grid& gt, const Grid& pred);
/// Symmetric boundary Hausdorff distance (pixels); -1 if either boundary empty.
double hausdorff(const Grid& gt, const Grid& pred);

/// Foreground pixels with a 4-neighbor background pixel (grid border counts
/// as background).
Grid boundary_mask(const Grid& mask);

MetricsReport evaluate(const Grid& gt, const Grid& pred);
MetricsReport mean_report(const std::vector<MetricsReport>& reports);

/// CSV: header `file,dice,iou,wcov,boundf,hausdorff`, 6 decimals, MEAN row last.
std::string metrics_csv(const std::vector<std::string>& names,
                        const std::vector<MetricsReport>& reports);

}  // namespace lsseg
