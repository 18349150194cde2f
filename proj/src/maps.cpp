#include "lsseg/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lsseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform by the lower-envelope-of-parabolas method.
void dt1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
          std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        double s;
        while (true) {
            if (f[v[k]] == kInf) {
                // previous vertex dominates nothing
                if (k == 0) {
                    v[0] = q;
                    z[0] = -kInf;
                    z[1] = kInf;
                    goto placed;
                }
                --k;
                continue;
            }
            s = ((f[q] + static_cast<double>(q) * q) - (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    placed:;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double d = static_cast<double>(q) - v[k];
        out[q] = f[v[k]] == kInf ? kInf : d * d + f[v[k]];
    }
}

}  // namespace

Grid edt(const Grid& mask) {
    const int h = mask.height, w = mask.width;
    Grid d2(h, w);
    bool any = false;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            bool seed = mask.at(i, j) > 0.5;
            any = any || seed;
            d2.at(i, j) = seed ? 0.0 : kInf;
        }
    if (!any) return Grid(h, w, kSdmSentinel);

    const int n = std::max(h, w);
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<int> v(n);
    // columns
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i) f[i] = d2.at(i, j);
        f.resize(h);
        out.resize(h);
        dt1d(f, out, v, z);
        for (int i = 0; i < h; ++i) d2.at(i, j) = out[i];
        f.resize(n);
        out.resize(n);
    }
    // rows
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) f[j] = d2.at(i, j);
        f.resize(w);
        out.resize(w);
        dt1d(f, out, v, z);
        for (int j = 0; j < w; ++j) d2.at(i, j) = out[j];
        f.resize(n);
        out.resize(n);
    }
    Grid d(h, w);
    for (int i = 0; i < h * w; ++i)
        d.values[i] = d2.values[i] == kInf ? kSdmSentinel : std::sqrt(d2.values[i]);
    return d;
}

Grid prob_to_sdm(const Grid& prob, double threshold) {
    Grid interior = lsseg::threshold(prob, threshold);
    Grid exterior(prob.height, prob.width);
    for (int i = 0; i < prob.size(); ++i) exterior.values[i] = 1.0 - interior.values[i];
    Grid dist_to_ext = edt(exterior);
    Grid dist_to_int = edt(interior);
    Grid phi(prob.height, prob.width);
    for (int i = 0; i < prob.size(); ++i)
        phi.values[i] = interior.values[i] > 0.5 ? dist_to_ext.values[i] : -dist_to_int.values[i];
    return phi;
}

std::pair<Grid, Grid> lambda_maps(const Grid& prob) {
    Grid l1(prob.height, prob.width), l2(prob.height, prob.width);
    for (int i = 0; i < prob.size(); ++i) {
        double y = prob.values[i];
        if (y < 0.0 || y > 1.0)
            throw std::invalid_argument("lambda_maps: probability outside [0,1]");
        l1.values[i] = std::exp((2.0 - y) / (1.0 + y));
        l2.values[i] = std::exp((1.0 + y) / (2.0 - y));
    }
    return {std::move(l1), std::move(l2)};
}

Grid edge_gt(const Grid& mask) {
    Grid mag = sobel_magnitude(mask, PadMode::Replicate);
    return threshold(mag, 1e-12);
}

Var soft_boundary(Tape& tape, const std::vector<Var>& class_probs, double tau,
                  const std::vector<Grid>* frozen_noise) {
    if (!(tau > 0.0)) throw std::invalid_argument("soft_boundary: tau must be > 0");
    if (class_probs.size() < 2)
        throw std::invalid_argument("soft_boundary: at least 2 classes required");
    if (frozen_noise && frozen_noise->size() != class_probs.size())
        throw std::invalid_argument("soft_boundary: noise/class count mismatch");
    const int n = static_cast<int>(class_probs.size());
    // copy the dims: references into the tape go stale as nodes are added below
    const int height = tape.value(class_probs[0]).g.height;
    const int width = tape.value(class_probs[0]).g.width;
    // probs must sum to 1 pointwise
    {
        Grid total(height, width);
        for (int c = 0; c < n; ++c) {
            const Grid& g = tape.value(class_probs[c]).g;
            if (g.height != height || g.width != width)
                throw DimensionError("soft_boundary: class prob shape mismatch");
            for (int i = 0; i < g.size(); ++i) total.values[i] += g.values[i];
        }
        for (int i = 0; i < total.size(); ++i)
            if (std::fabs(total.values[i] - 1.0) > 1e-5)
                throw std::invalid_argument("soft_boundary: class probs do not sum to 1");
    }

    std::vector<Var> logits;
    logits.reserve(n);
    for (int c = 0; c < n; ++c) {
        Var lp = tape.map_log(tape.clamp(class_probs[c], 1e-7, 1.0 + 1e-12));
        if (frozen_noise) lp = tape.add(lp, tape.constant((*frozen_noise)[c]));
        logits.push_back(tape.cmul(lp, 1.0 / tau));
    }
    // stabilizing shift, treated as a constant
    Grid shift(height, width, -kInf);
    for (int c = 0; c < n; ++c) {
        const Grid& lg = tape.value(logits[c]).g;
        for (int i = 0; i < shift.size(); ++i) shift.values[i] = std::max(shift.values[i], lg.values[i]);
    }
    Var shift_c = tape.constant(shift);
    std::vector<Var> exps;
    Var denom;
    for (int c = 0; c < n; ++c) {
        Var ec = tape.map_exp(tape.sub(logits[c], shift_c));
        exps.push_back(ec);
        denom = c == 0 ? ec : tape.add(denom, ec);
    }
    Var y_fg = tape.div_guarded(exps[1], denom);
    Var dx = tape.central_diff(y_fg, Axis::X, PadMode::Replicate);
    Var dy = tape.central_diff(y_fg, Axis::Y, PadMode::Replicate);
    return tape.map_sqrt(tape.add(tape.mul(dx, dx), tape.mul(dy, dy)));
}

Grid soft_boundary(const std::vector<Grid>& class_probs, double tau,
                   const std::vector<Grid>* frozen_noise) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(class_probs.size());
    for (const Grid& g : class_probs) vars.push_back(tape.leaf(g));
    Var out = soft_boundary(tape, vars, tau, frozen_noise);
    return tape.value(out).g;
}

}  // namespace lsseg
