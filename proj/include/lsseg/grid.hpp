#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace lsseg {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Dense 2D scalar field, row-major.
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Grid() = default;
    Grid(int h, int w, double fill = 0.0)
        : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {
        if (h <= 0 || w <= 0) throw DimensionError("grid dimensions must be positive");
    }

    double& at(int i, int j) { return values[static_cast<size_t>(i) * width + j]; }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * width + j]; }
    int size() const { return height * width; }
    bool same_shape(const Grid& o) const { return height == o.height && width == o.width; }
};

enum class PadMode { Replicate, Zero };
enum class Axis { X, Y };

// Guard added to denominators (the paper's unspecified "small constant").
inline constexpr double kDivGuard = 1e-8;
inline constexpr double kSdmSentinel = 1e9;

inline double pad_at(const Grid& g, int i, int j, PadMode pad) {
    if (i >= 0 && i < g.height && j >= 0 && j < g.width) return g.at(i, j);
    if (pad == PadMode::Zero) return 0.0;
    int ci = i < 0 ? 0 : (i >= g.height ? g.height - 1 : i);
    int cj = j < 0 ? 0 : (j >= g.width ? g.width - 1 : j);
    return g.at(ci, cj);
}

/// One tap of a linear stencil: out(i,j) += w * g(i+di, j+dj).
struct Tap {
    int di;
    int dj;
    double w;
};

Grid stencil_apply(const Grid& g, std::span<const Tap> taps, PadMode pad);
// Transpose of stencil_apply as a linear map (Replicate folds border taps back in).
Grid stencil_adjoint(const Grid& grad_out, std::span<const Tap> taps, PadMode pad, int h, int w);

Grid central_diff(const Grid& g, Axis axis, PadMode pad);
Grid diff_xx(const Grid& g, PadMode pad);
Grid diff_yy(const Grid& g, PadMode pad);
Grid diff_xy(const Grid& g, PadMode pad);

struct SecondDiffs {
    Grid xx, yy, xy;
};
SecondDiffs second_diffs(const Grid& g, PadMode pad);

Grid central_diff_adjoint(const Grid& grad_out, Axis axis, PadMode pad);
Grid diff_xx_adjoint(const Grid& grad_out, PadMode pad);
Grid diff_yy_adjoint(const Grid& grad_out, PadMode pad);
Grid diff_xy_adjoint(const Grid& grad_out, PadMode pad);

/// Mean over the (2f+1)x(2f+1) window centered at each pixel.
Grid box_mean(const Grid& g, int f, PadMode pad);
/// Transpose of box_mean as a linear map.
Grid box_mean_adjoint(const Grid& grad_out, int f, PadMode pad);

Grid sobel_magnitude(const Grid& g, PadMode pad);

/// 3x3 correlation (no kernel flip).
Grid conv3x3(const Grid& g, const Grid& kernel, PadMode pad);
void conv3x3_adjoint(const Grid& g, const Grid& kernel, const Grid& grad_out, PadMode pad,
                     Grid& grad_g, Grid& grad_kernel);

Grid ew_add(const Grid& a, const Grid& b);
Grid ew_sub(const Grid& a, const Grid& b);
Grid ew_mul(const Grid& a, const Grid& b);
Grid ew_div_guarded(const Grid& a, const Grid& b, double guard = kDivGuard);

Grid gmap(const Grid& g, double (*fn)(double));
Grid scalar_mul(const Grid& g, double c);
Grid scalar_add(const Grid& g, double c);
double gsum(const Grid& g);
double gmean(const Grid& g);
double gmin(const Grid& g);
double gmax(const Grid& g);
bool all_finite(const Grid& g);
/// 1 where g > t, else 0.
Grid threshold(const Grid& g, double t);

void check_same_shape(const Grid& a, const Grid& b, const char* what);

}  // namespace lsseg
