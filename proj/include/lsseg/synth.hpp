#pragma once

#include <cstdint>
#include <string>

#include "lsseg/grid.hpp"

namespace lsseg {

enum class ShapeKind { Rects, Disks, Blobs };

struct SceneSpec {
    int size = 128;
    int n_instances_min = 1;
    int n_instances_max = 3;
    bool rects = true;
    bool disks = true;
    bool blobs = false;
    double fg_intensity = 0.9;
    double bg_intensity = 0.1;
    double noise_sigma = 0.05;
    double illumination_gradient = 0.0;
    uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
};

struct Scene {
    Grid image;
    Grid gt;
    int placed = 0;
    bool placement_warning = false;  // fewer instances than requested
};

/// Deterministic in the seed; instances are non-overlapping via rejection
/// sampling (<= 1000 attempts each).
Scene gen_scene(const SceneSpec& spec);

}  // namespace lsseg
