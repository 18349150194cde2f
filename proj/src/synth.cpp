#include "lsseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <vector>

#include "lsseg/rng.hpp"

namespace lsseg {

void SceneSpec::validate() const {
    if (size < 16) throw std::invalid_argument("SceneSpec: size too small");
    if (n_instances_min < 0 || n_instances_max < n_instances_min)
        throw std::invalid_argument("SceneSpec: bad instance range");
    if (!rects && !disks && !blobs) throw std::invalid_argument("SceneSpec: no shape kinds");
    if (fg_intensity == bg_intensity)
        throw std::invalid_argument("SceneSpec: fg and bg intensity must differ");
    if (noise_sigma < 0.0 || illumination_gradient < 0.0)
        throw std::invalid_argument("SceneSpec: negative noise or gradient");
}

std::string SceneSpec::to_json() const {
    nlohmann::json j;
    j["size"] = size;
    j["n_instances_min"] = n_instances_min;
    j["n_instances_max"] = n_instances_max;
    j["rects"] = rects;
    j["disks"] = disks;
    j["blobs"] = blobs;
    j["fg_intensity"] = fg_intensity;
    j["bg_intensity"] = bg_intensity;
    j["noise_sigma"] = noise_sigma;
    j["illumination_gradient"] = illumination_gradient;
    j["seed"] = seed;
    return j.dump(2);
}

namespace {

// Rasterizes one instance into `inst`; returns false if it would leave the grid.
bool rasterize(ShapeKind kind, Rng& rng, int size, Grid& inst) {
    inst = Grid(size, size);
    int r_min = std::max(3, size / 12);
    int r_max = std::max(r_min + 1, size / 5);
    switch (kind) {
        case ShapeKind::Rects: {
            int hh = rng.uniform_int(r_min, r_max);
            int hw = rng.uniform_int(r_min, r_max);
            int ci = rng.uniform_int(hh + 1, size - hh - 2);
            int cj = rng.uniform_int(hw + 1, size - hw - 2);
            for (int i = ci - hh; i <= ci + hh; ++i)
                for (int j = cj - hw; j <= cj + hw; ++j) inst.at(i, j) = 1.0;
            return true;
        }
        case ShapeKind::Disks: {
            int r = rng.uniform_int(r_min, r_max);
            int ci = rng.uniform_int(r + 1, size - r - 2);
            int cj = rng.uniform_int(r + 1, size - r - 2);
            for (int i = ci - r; i <= ci + r; ++i)
                for (int j = cj - r; j <= cj + r; ++j) {
                    double di = i - ci, dj = j - cj;
                    if (di * di + dj * dj <= static_cast<double>(r) * r) inst.at(i, j) = 1.0;
                }
            return true;
        }
        case ShapeKind::Blobs: {
            int r = rng.uniform_int(r_min, r_max);
            int ci = rng.uniform_int(r + 2, size - r - 3);
            int cj = rng.uniform_int(r + 2, size - r - 3);
            double a1 = rng.uniform(0.0, 0.25), p1 = rng.uniform(0.0, 6.2831853);
            double a2 = rng.uniform(0.0, 0.15), p2 = rng.uniform(0.0, 6.2831853);
            int reach = r + r / 3 + 2;
            for (int i = std::max(0, ci - reach); i <= std::min(size - 1, ci + reach); ++i)
                for (int j = std::max(0, cj - reach); j <= std::min(size - 1, cj + reach); ++j) {
                    double di = i - ci, dj = j - cj;
                    double rr = std::sqrt(di * di + dj * dj);
                    double th = std::atan2(di, dj);
                    double rbound =
                        r * (1.0 + a1 * std::sin(2.0 * th + p1) + a2 * std::sin(3.0 * th + p2));
                    if (rr <= rbound) inst.at(i, j) = 1.0;
                }
            return true;
        }
    }
    return false;
}

// true if inst overlaps the occupied mask, with a 2-px margin
bool overlaps(const Grid& inst, const Grid& occupied) {
    const int size = inst.height;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            if (inst.at(i, j) <= 0.5) continue;
            for (int di = -2; di <= 2; ++di)
                for (int dj = -2; dj <= 2; ++dj) {
                    int ni = i + di, nj = j + dj;
                    if (ni < 0 || ni >= size || nj < 0 || nj >= size) continue;
                    if (occupied.at(ni, nj) > 0.5) return true;
                }
        }
    return false;
}

}  // namespace

Scene gen_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Rng place_rng = rng.split(1);
    Rng noise_rng = rng.split(2);
    Rng shade_rng = rng.split(3);

    std::vector<ShapeKind> kinds;
    if (spec.rects) kinds.push_back(ShapeKind::Rects);
    if (spec.disks) kinds.push_back(ShapeKind::Disks);
    if (spec.blobs) kinds.push_back(ShapeKind::Blobs);

    const int size = spec.size;
    int want = place_rng.uniform_int(spec.n_instances_min, spec.n_instances_max);
    Scene scene;
    scene.gt = Grid(size, size);
    Grid inst;
    for (int k = 0; k < want; ++k) {
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            ShapeKind kind = kinds[place_rng.uniform_int(0, static_cast<int>(kinds.size()) - 1)];
            if (!rasterize(kind, place_rng, size, inst)) continue;
            if (!overlaps(inst, scene.gt)) ok = true;
        }
        if (!ok) {
            scene.placement_warning = true;
            break;
        }
        for (int i = 0; i < scene.gt.size(); ++i)
            if (inst.values[i] > 0.5) scene.gt.values[i] = 1.0;
        ++scene.placed;
    }

    double theta = shade_rng.uniform(0.0, 6.2831853071795864769);
    double cs = std::cos(theta), sn = std::sin(theta);
    scene.image = Grid(size, size);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            double base = scene.gt.at(i, j) > 0.5 ? spec.fg_intensity : spec.bg_intensity;
            double xn = size > 1 ? static_cast<double>(j) / (size - 1) - 0.5 : 0.0;
            double yn = size > 1 ? static_cast<double>(i) / (size - 1) - 0.5 : 0.0;
            double shade = spec.illumination_gradient > 0.0
                               ? spec.illumination_gradient * (cs * xn + sn * yn)
                               : 0.0;
            double noise = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise_rng.normal() : 0.0;
            scene.image.at(i, j) = std::clamp(base + shade + noise, 0.0, 1.0);
        }
    return scene;
}

}  // namespace lsseg
