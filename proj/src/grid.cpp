#include "lsseg/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace lsseg {

void check_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": dimension mismatch (" +
                             std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                             std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
}

Grid stencil_apply(const Grid& g, std::span<const Tap> taps, PadMode pad) {
    Grid out(g.height, g.width);
    for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j) {
            double acc = 0.0;
            for (const Tap& t : taps) acc += t.w * pad_at(g, i + t.di, j + t.dj, pad);
            out.at(i, j) = acc;
        }
    return out;
}

Grid stencil_adjoint(const Grid& grad_out, std::span<const Tap> taps, PadMode pad, int h, int w) {
    Grid out(h, w);
    for (int i = 0; i < grad_out.height; ++i)
        for (int j = 0; j < grad_out.width; ++j) {
            double go = grad_out.at(i, j);
            for (const Tap& t : taps) {
                int si = i + t.di, sj = j + t.dj;
                if (si < 0 || si >= h || sj < 0 || sj >= w) {
                    if (pad == PadMode::Zero) continue;
                    si = std::clamp(si, 0, h - 1);
                    sj = std::clamp(sj, 0, w - 1);
                }
                out.at(si, sj) += t.w * go;
            }
        }
    return out;
}

namespace {

void require_min_dim(const Grid& g, int n) {
    if (g.height < n || g.width < n) throw DimensionError("grid too small for stencil");
}

constexpr std::array<Tap, 2> kDiffX{{{0, 1, 0.5}, {0, -1, -0.5}}};
constexpr std::array<Tap, 2> kDiffY{{{1, 0, 0.5}, {-1, 0, -0.5}}};
constexpr std::array<Tap, 3> kDiffXX{{{0, 1, 1.0}, {0, 0, -2.0}, {0, -1, 1.0}}};
constexpr std::array<Tap, 3> kDiffYY{{{1, 0, 1.0}, {0, 0, -2.0}, {-1, 0, 1.0}}};
constexpr std::array<Tap, 4> kDiffXY{
    {{1, 1, 0.25}, {1, -1, -0.25}, {-1, 1, -0.25}, {-1, -1, 0.25}}};
constexpr std::array<Tap, 6> kSobelX{
    {{-1, 1, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}, {-1, -1, -1.0}, {0, -1, -2.0}, {1, -1, -1.0}}};
constexpr std::array<Tap, 6> kSobelY{
    {{1, -1, 1.0}, {1, 0, 2.0}, {1, 1, 1.0}, {-1, -1, -1.0}, {-1, 0, -2.0}, {-1, 1, -1.0}}};

}  // namespace

Grid central_diff_adjoint(const Grid& grad_out, Axis axis, PadMode pad) {
    return stencil_adjoint(grad_out,
                           axis == Axis::X ? std::span<const Tap>(kDiffX)
                                           : std::span<const Tap>(kDiffY),
                           pad, grad_out.height, grad_out.width);
}

Grid diff_xx_adjoint(const Grid& grad_out, PadMode pad) {
    return stencil_adjoint(grad_out, kDiffXX, pad, grad_out.height, grad_out.width);
}

Grid diff_yy_adjoint(const Grid& grad_out, PadMode pad) {
    return stencil_adjoint(grad_out, kDiffYY, pad, grad_out.height, grad_out.width);
}

Grid diff_xy_adjoint(const Grid& grad_out, PadMode pad) {
    return stencil_adjoint(grad_out, kDiffXY, pad, grad_out.height, grad_out.width);
}

Grid central_diff(const Grid& g, Axis axis, PadMode pad) {
    require_min_dim(g, 2);
    return stencil_apply(g, axis == Axis::X ? std::span<const Tap>(kDiffX)
                                            : std::span<const Tap>(kDiffY),
                         pad);
}

Grid diff_xx(const Grid& g, PadMode pad) {
    require_min_dim(g, 3);
    return stencil_apply(g, kDiffXX, pad);
}

Grid diff_yy(const Grid& g, PadMode pad) {
    require_min_dim(g, 3);
    return stencil_apply(g, kDiffYY, pad);
}

Grid diff_xy(const Grid& g, PadMode pad) {
    require_min_dim(g, 3);
    return stencil_apply(g, kDiffXY, pad);
}

SecondDiffs second_diffs(const Grid& g, PadMode pad) {
    require_min_dim(g, 3);
    return {diff_xx(g, pad), diff_yy(g, pad), diff_xy(g, pad)};
}

Grid box_mean(const Grid& g, int f, PadMode pad) {
    if (f < 0) throw DimensionError("box_mean: window half-size must be >= 0");
    if (f == 0) return g;
    const int h = g.height, w = g.width, k = 2 * f + 1;
    // Padded copy, then separable running sums.
    Grid p(h + 2 * f, w + 2 * f);
    for (int i = 0; i < p.height; ++i)
        for (int j = 0; j < p.width; ++j) p.at(i, j) = pad_at(g, i - f, j - f, pad);
    // Horizontal k-sums: (h+2f) x w
    Grid hs(p.height, w);
    for (int i = 0; i < p.height; ++i) {
        double run = 0.0;
        for (int j = 0; j < k; ++j) run += p.at(i, j);
        hs.at(i, 0) = run;
        for (int j = 1; j < w; ++j) {
            run += p.at(i, j + k - 1) - p.at(i, j - 1);
            hs.at(i, j) = run;
        }
    }
    Grid out(h, w);
    const double inv = 1.0 / (static_cast<double>(k) * k);
    for (int j = 0; j < w; ++j) {
        double run = 0.0;
        for (int i = 0; i < k; ++i) run += hs.at(i, j);
        out.at(0, j) = run * inv;
        for (int i = 1; i < h; ++i) {
            run += hs.at(i + k - 1, j) - hs.at(i - 1, j);
            out.at(i, j) = run * inv;
        }
    }
    return out;
}

Grid box_mean_adjoint(const Grid& grad_out, int f, PadMode pad) {
    if (f == 0) return grad_out;
    const int h = grad_out.height, w = grad_out.width, k = 2 * f + 1;
    const double inv = 1.0 / (static_cast<double>(k) * k);
    // Padded cell (a,b) collects outputs (i,j) with i in [a-2f, a], j in [b-2f, b],
    // clipped to the output domain. Separable windowed sums of grad_out.
    Grid vs(h + 2 * f, w);  // vs(a,j) = sum_{i in [a-2f,a] cap [0,h)} grad_out(i,j)
    for (int j = 0; j < w; ++j) {
        double run = 0.0;
        for (int a = 0; a < h + 2 * f; ++a) {
            if (a < h) run += grad_out.at(a, j);
            if (a - k >= 0 && a - k < h) run -= grad_out.at(a - k, j);
            vs.at(a, j) = run;
        }
    }
    Grid out(h, w);
    for (int a = 0; a < h + 2 * f; ++a) {
        double run = 0.0;
        for (int b = 0; b < w + 2 * f; ++b) {
            if (b < w) run += vs.at(a, b);
            if (b - k >= 0 && b - k < w) run -= vs.at(a, b - k);
            int si = a - f, sj = b - f;
            if (si < 0 || si >= h || sj < 0 || sj >= w) {
                if (pad == PadMode::Zero) continue;
                si = std::clamp(si, 0, h - 1);
                sj = std::clamp(sj, 0, w - 1);
            }
            out.at(si, sj) += run * inv;
        }
    }
    return out;
}

Grid sobel_magnitude(const Grid& g, PadMode pad) {
    require_min_dim(g, 3);
    Grid sx = stencil_apply(g, kSobelX, pad);
    Grid sy = stencil_apply(g, kSobelY, pad);
    Grid out(g.height, g.width);
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = std::sqrt(sx.values[i] * sx.values[i] + sy.values[i] * sy.values[i]);
    return out;
}

Grid conv3x3(const Grid& g, const Grid& kernel, PadMode pad) {
    if (kernel.height != 3 || kernel.width != 3)
        throw DimensionError("conv3x3: kernel must be 3x3");
    Grid out(g.height, g.width);
    for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j) {
            double acc = 0.0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    acc += kernel.at(di + 1, dj + 1) * pad_at(g, i + di, j + dj, pad);
            out.at(i, j) = acc;
        }
    return out;
}

void conv3x3_adjoint(const Grid& g, const Grid& kernel, const Grid& grad_out, PadMode pad,
                     Grid& grad_g, Grid& grad_kernel) {
    grad_g = Grid(g.height, g.width);
    grad_kernel = Grid(3, 3);
    for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j) {
            double go = grad_out.at(i, j);
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    grad_kernel.at(di + 1, dj + 1) += go * pad_at(g, i + di, j + dj, pad);
                    int si = i + di, sj = j + dj;
                    if (si < 0 || si >= g.height || sj < 0 || sj >= g.width) {
                        if (pad == PadMode::Zero) continue;
                        si = std::clamp(si, 0, g.height - 1);
                        sj = std::clamp(sj, 0, g.width - 1);
                    }
                    grad_g.at(si, sj) += go * kernel.at(di + 1, dj + 1);
                }
        }
}

Grid ew_add(const Grid& a, const Grid& b) {
    check_same_shape(a, b, "add");
    Grid out(a.height, a.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] + b.values[i];
    return out;
}

Grid ew_sub(const Grid& a, const Grid& b) {
    check_same_shape(a, b, "sub");
    Grid out(a.height, a.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] - b.values[i];
    return out;
}

Grid ew_mul(const Grid& a, const Grid& b) {
    check_same_shape(a, b, "mul");
    Grid out(a.height, a.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] * b.values[i];
    return out;
}

Grid ew_div_guarded(const Grid& a, const Grid& b, double guard) {
    check_same_shape(a, b, "div");
    Grid out(a.height, a.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = a.values[i] / (b.values[i] + guard);
    return out;
}

Grid gmap(const Grid& g, double (*fn)(double)) {
    Grid out(g.height, g.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = fn(g.values[i]);
    return out;
}

Grid scalar_mul(const Grid& g, double c) {
    Grid out(g.height, g.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = g.values[i] * c;
    return out;
}

Grid scalar_add(const Grid& g, double c) {
    Grid out(g.height, g.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = g.values[i] + c;
    return out;
}

double gsum(const Grid& g) {
    double acc = 0.0;
    for (double v : g.values) acc += v;
    return acc;
}

double gmean(const Grid& g) { return gsum(g) / g.size(); }

double gmin(const Grid& g) { return *std::min_element(g.values.begin(), g.values.end()); }

double gmax(const Grid& g) { return *std::max_element(g.values.begin(), g.values.end()); }

bool all_finite(const Grid& g) {
    for (double v : g.values)
        if (!std::isfinite(v)) return false;
    return true;
}

Grid threshold(const Grid& g, double t) {
    Grid out(g.height, g.width);
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] = g.values[i] > t ? 1.0 : 0.0;
    return out;
}

}  // namespace lsseg
