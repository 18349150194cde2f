#include "lsseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "lsseg/maps.hpp"

namespace lsseg {

double dice_score(const Grid& g, const Grid& y) {
    check_same_shape(g, y, "dice_score");
    double inter = 0.0, sg = 0.0, sy = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        inter += g.values[i] * y.values[i];
        sg += g.values[i] * g.values[i];
        sy += y.values[i] * y.values[i];
    }
    return 2.0 * inter / (sg + sy + 1e-7);
}

double iou(const Grid& g, const Grid& y) {
    check_same_shape(g, y, "iou");
    int inter = 0, uni = 0;
    for (int i = 0; i < g.size(); ++i) {
        bool a = g.values[i] > 0.5, b = y.values[i] > 0.5;
        inter += a && b;
        uni += a || b;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / uni;
}

Regions label_components(const Grid& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("label_components: connectivity must be 4 or 8");
    const int h = mask.height, w = mask.width;
    Regions r;
    r.labels.assign(static_cast<size_t>(h) * w, 0);
    std::vector<std::pair<int, int>> stack;
    const int di8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    const int dj8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    const int di4[4] = {-1, 0, 0, 1};
    const int dj4[4] = {0, -1, 1, 0};
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            size_t idx = static_cast<size_t>(i) * w + j;
            if (mask.values[idx] <= 0.5 || r.labels[idx] != 0) continue;
            int label = ++r.count;
            int area = 0;
            stack.push_back({i, j});
            r.labels[idx] = label;
            while (!stack.empty()) {
                auto [ci, cj] = stack.back();
                stack.pop_back();
                ++area;
                const int n = connectivity;
                for (int k = 0; k < n; ++k) {
                    int ni = ci + (n == 8 ? di8[k] : di4[k]);
                    int nj = cj + (n == 8 ? dj8[k] : dj4[k]);
                    if (ni < 0 || ni >= h || nj < 0 || nj >= w) continue;
                    size_t nidx = static_cast<size_t>(ni) * w + nj;
                    if (mask.values[nidx] > 0.5 && r.labels[nidx] == 0) {
                        r.labels[nidx] = label;
                        stack.push_back({ni, nj});
                    }
                }
            }
            r.areas.push_back(area);
        }
    return r;
}

double wcov(const Grid& gt, const Grid& pred, int connectivity) {
    check_same_shape(gt, pred, "wcov");
    Regions rg = label_components(gt, connectivity);
    Regions rp = label_components(pred, connectivity);
    if (rg.count == 0) return rp.count == 0 ? 1.0 : 0.0;
    // joint pixel counts between every gt/pred region pair
    std::vector<int> joint(static_cast<size_t>(rg.count) * rp.count, 0);
    for (size_t i = 0; i < rg.labels.size(); ++i) {
        int a = rg.labels[i], b = rp.labels[i];
        if (a > 0 && b > 0) ++joint[static_cast<size_t>(a - 1) * rp.count + (b - 1)];
    }
    double total = 0.0;
    long n_fg = 0;
    for (int a = 0; a < rg.count; ++a) {
        n_fg += rg.areas[a];
        double best = 0.0;
        for (int b = 0; b < rp.count; ++b) {
            int inter = joint[static_cast<size_t>(a) * rp.count + b];
            if (inter == 0) continue;
            int uni = rg.areas[a] + rp.areas[b] - inter;
            best = std::max(best, static_cast<double>(inter) / uni);
        }
        total += rg.areas[a] * best;
    }
    return total / static_cast<double>(n_fg);
}

Grid boundary_mask(const Grid& mask) {
    const int h = mask.height, w = mask.width;
    Grid b(h, w);
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            if (mask.at(i, j) <= 0.5) continue;
            bool edge = false;
            for (int k = 0; k < 4 && !edge; ++k) {
                int ni = i + di[k], nj = j + dj[k];
                edge = ni < 0 || ni >= h || nj < 0 || nj >= w || mask.at(ni, nj) <= 0.5;
            }
            if (edge) b.at(i, j) = 1.0;
        }
    return b;
}

double boundf(const Grid& gt, const Grid& pred) {
    check_same_shape(gt, pred, "boundf");
    Grid bg = boundary_mask(gt);
    Grid bp = boundary_mask(pred);
    long n_bg = std::lround(gsum(bg));
    long n_bp = std::lround(gsum(bp));
    if (n_bg == 0 && n_bp == 0) return 1.0;
    Grid dist_to_bg = edt(bg);
    Grid dist_to_bp = edt(bp);
    double acc = 0.0;
    for (int d = 1; d <= 5; ++d) {
        double precision = 0.0, recall = 0.0;
        if (n_bp > 0) {
            long hit = 0;
            for (int i = 0; i < bp.size(); ++i)
                if (bp.values[i] > 0.5 && dist_to_bg.values[i] <= d) ++hit;
            precision = static_cast<double>(hit) / n_bp;
        }
        if (n_bg > 0) {
            long hit = 0;
            for (int i = 0; i < bg.size(); ++i)
                if (bg.values[i] > 0.5 && dist_to_bp.values[i] <= d) ++hit;
            recall = static_cast<double>(hit) / n_bg;
        }
        double f = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        acc += f;
    }
    return acc / 5.0;
}

double hausdorff(const Grid& gt, const Grid& pred) {
    check_same_shape(gt, pred, "hausdorff");
    Grid bg = boundary_mask(gt);
    Grid bp = boundary_mask(pred);
    if (gsum(bg) < 0.5 || gsum(bp) < 0.5) return -1.0;
    Grid dist_to_bg = edt(bg);
    Grid dist_to_bp = edt(bp);
    double h1 = 0.0, h2 = 0.0;
    for (int i = 0; i < bg.size(); ++i) {
        if (bg.values[i] > 0.5) h1 = std::max(h1, dist_to_bp.values[i]);
        if (bp.values[i] > 0.5) h2 = std::max(h2, dist_to_bg.values[i]);
    }
    return std::max(h1, h2);
}

MetricsReport evaluate(const Grid& gt, const Grid& pred) {
    check_same_shape(gt, pred, "evaluate");
    MetricsReport r;
    r.dice = dice_score(gt, pred);
    r.iou = iou(gt, pred);
    r.wcov = wcov(gt, pred);
    r.boundf = boundf(gt, pred);
    r.hausdorff = hausdorff(gt, pred);
    r.pixel_count = gt.size();
    return r;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
    MetricsReport m;
    if (reports.empty()) return m;
    int n_hd = 0;
    for (const MetricsReport& r : reports) {
        m.dice += r.dice;
        m.iou += r.iou;
        m.wcov += r.wcov;
        m.boundf += r.boundf;
        m.pixel_count += r.pixel_count;
        if (r.hausdorff >= 0.0) {
            if (m.hausdorff < 0.0) m.hausdorff = 0.0;
            m.hausdorff += r.hausdorff;
            ++n_hd;
        }
    }
    double n = static_cast<double>(reports.size());
    m.dice /= n;
    m.iou /= n;
    m.wcov /= n;
    m.boundf /= n;
    if (n_hd > 0) m.hausdorff /= n_hd;
    return m;
}

std::string metrics_csv(const std::vector<std::string>& names,
                        const std::vector<MetricsReport>& reports) {
    if (names.size() != reports.size())
        throw std::invalid_argument("metrics_csv: names/reports size mismatch");
    std::string out = "file,dice,iou,wcov,boundf,hausdorff\n";
    char buf[256];
    auto row = [&](const std::string& name, const MetricsReport& r) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", name.c_str(), r.dice,
                      r.iou, r.wcov, r.boundf, r.hausdorff);
        out += buf;
    };
    for (size_t i = 0; i < names.size(); ++i) row(names[i], reports[i]);
    row("MEAN", mean_report(reports));
    return out;
}

}  // namespace lsseg
