#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "lsseg/grid.hpp"
#include "lsseg/io.hpp"
#include "lsseg/rng.hpp"

using namespace lsseg;

namespace {

Grid random_grid(int h, int w, Rng& r, double lo = -2.0, double hi = 2.0) {
    Grid g(h, w);
    for (double& v : g.values) v = r.uniform(lo, hi);
    return g;
}

}  // namespace

TEST_CASE("central_diff of a constant grid is zero") {
    Grid g(6, 7, 3.0);
    for (PadMode pad : {PadMode::Replicate, PadMode::Zero}) {
        Grid dx = central_diff(g, Axis::X, pad);
        if (pad == PadMode::Replicate)
            for (double v : dx.values) CHECK(v == 0.0);
        else  // zero pad sees an artificial step at the border
            for (int i = 0; i < 6; ++i)
                for (int j = 1; j < 6; ++j) CHECK(dx.at(i, j) == 0.0);
    }
}

TEST_CASE("central_diff of the column ramp: interior 1, replicate border 0.5") {
    Grid g(4, 6);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j) g.at(i, j) = j;
    Grid dx = central_diff(g, Axis::X, PadMode::Replicate);
    for (int i = 0; i < 4; ++i) {
        CHECK(dx.at(i, 0) == doctest::Approx(0.5));
        CHECK(dx.at(i, 5) == doctest::Approx(0.5));
        for (int j = 1; j < 5; ++j) CHECK(dx.at(i, j) == doctest::Approx(1.0));
    }
}

TEST_CASE("central_diff is exact on quadratics in the interior") {
    Grid g(3, 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 9; ++j) g.at(i, j) = double(j) * j;
    Grid dx = central_diff(g, Axis::X, PadMode::Replicate);
    for (int j = 1; j < 8; ++j) CHECK(dx.at(1, j) == doctest::Approx(2.0 * j));
}

TEST_CASE("second_diffs on plane, quadratic, and bilinear fields") {
    Grid plane(7, 7), quad(7, 7), bil(7, 7);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
            plane.at(i, j) = 2.0 * i - 3.0 * j + 1.0;
            quad.at(i, j) = double(j) * j;
            bil.at(i, j) = double(i) * j;
        }
    SecondDiffs p = second_diffs(plane, PadMode::Replicate);
    SecondDiffs q = second_diffs(quad, PadMode::Replicate);
    SecondDiffs b = second_diffs(bil, PadMode::Replicate);
    for (int i = 2; i < 5; ++i)
        for (int j = 2; j < 5; ++j) {
            CHECK(p.xx.at(i, j) == doctest::Approx(0.0));
            CHECK(p.yy.at(i, j) == doctest::Approx(0.0));
            CHECK(p.xy.at(i, j) == doctest::Approx(0.0));
            CHECK(q.xx.at(i, j) == doctest::Approx(2.0));
            CHECK(b.xy.at(i, j) == doctest::Approx(1.0));
        }
}

TEST_CASE("box_mean basics") {
    SUBCASE("constant grid is a fixpoint") {
        Grid g(5, 5, 0.7);
        Grid m = box_mean(g, 2, PadMode::Replicate);
        for (double v : m.values) CHECK(v == doctest::Approx(0.7));
    }
    SUBCASE("f=0 is the identity") {
        Rng r(1);
        Grid g = random_grid(4, 5, r);
        Grid m = box_mean(g, 0, PadMode::Replicate);
        for (int k = 0; k < g.size(); ++k) CHECK(m.values[k] == g.values[k]);
    }
    SUBCASE("unit impulse spreads to 1/9 under zero pad") {
        Grid g(7, 7, 0.0);
        g.at(3, 3) = 1.0;
        Grid m = box_mean(g, 1, PadMode::Zero);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) {
                double want = (std::abs(i - 3) <= 1 && std::abs(j - 3) <= 1) ? 1.0 / 9.0 : 0.0;
                CHECK(m.at(i, j) == doctest::Approx(want));
            }
    }
}

TEST_CASE("box_mean preserves min/max bounds (replicate)") {
    Rng r(7);
    for (int trial = 0; trial < 20; ++trial) {
        Grid g = random_grid(9, 11, r);
        double lo = gmin(g), hi = gmax(g);
        Grid m = box_mean(g, 1 + trial % 4, PadMode::Replicate);
        for (double v : m.values) {
            CHECK(v >= lo - 1e-12);
            CHECK(v <= hi + 1e-12);
        }
    }
}

TEST_CASE("box_mean with a grid-covering window equals the global mean at the center") {
    Rng r(3);
    Grid g = random_grid(9, 9, r);
    Grid m = box_mean(g, 4, PadMode::Zero);
    CHECK(m.at(4, 4) == doctest::Approx(gmean(g)).epsilon(1e-12));
}

TEST_CASE("stencils are linear maps") {
    Rng r(11);
    Grid g = random_grid(8, 8, r), h = random_grid(8, 8, r);
    double a = 1.7, b = -0.6;
    Grid mix = ew_add(scalar_mul(g, a), scalar_mul(h, b));
    for (PadMode pad : {PadMode::Replicate, PadMode::Zero}) {
        Grid lhs = central_diff(mix, Axis::Y, pad);
        Grid rhs = ew_add(scalar_mul(central_diff(g, Axis::Y, pad), a),
                          scalar_mul(central_diff(h, Axis::Y, pad), b));
        for (int k = 0; k < lhs.size(); ++k)
            CHECK(lhs.values[k] == doctest::Approx(rhs.values[k]).epsilon(1e-12));
        Grid lxx = diff_xx(mix, pad);
        Grid rxx = ew_add(scalar_mul(diff_xx(g, pad), a), scalar_mul(diff_xx(h, pad), b));
        for (int k = 0; k < lxx.size(); ++k)
            CHECK(lxx.values[k] == doctest::Approx(rxx.values[k]).epsilon(1e-12));
    }
}

TEST_CASE("sobel magnitude") {
    SUBCASE("constant grid gives zero") {
        Grid g(5, 5, 2.5);
        Grid s = sobel_magnitude(g, PadMode::Replicate);
        for (double v : s.values) CHECK(v == 0.0);
    }
    SUBCASE("vertical step responds only next to the step") {
        Grid g(5, 5, 0.0);
        for (int i = 0; i < 5; ++i)
            for (int j = 3; j < 5; ++j) g.at(i, j) = 1.0;
        Grid s = sobel_magnitude(g, PadMode::Replicate);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                if (j == 2 || j == 3)
                    CHECK(s.at(i, j) > 0.0);
                else
                    CHECK(s.at(i, j) == doctest::Approx(0.0));
            }
    }
    SUBCASE("90-degree rotation covariance") {
        Rng r(5);
        Grid g = random_grid(6, 6, r);
        Grid rot(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) rot.at(j, 5 - i) = g.at(i, j);
        Grid s = sobel_magnitude(g, PadMode::Replicate);
        Grid srot = sobel_magnitude(rot, PadMode::Replicate);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                CHECK(srot.at(j, 5 - i) == doctest::Approx(s.at(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("elementwise ops") {
    Rng r(9);
    Grid g = random_grid(4, 4, r);
    Grid zero(4, 4, 0.0), ones(4, 4, 1.0);
    Grid idadd = ew_add(g, zero);
    Grid idmul = ew_mul(g, ones);
    for (int k = 0; k < g.size(); ++k) {
        CHECK(idadd.values[k] == g.values[k]);
        CHECK(idmul.values[k] == g.values[k]);
    }
    Grid guarded = ew_div_guarded(ones, zero);
    for (double v : guarded.values) CHECK(v == doctest::Approx(1e8));
    CHECK_THROWS_AS(ew_add(g, Grid(3, 4)), DimensionError);
}

TEST_CASE("grids smaller than the stencil are rejected") {
    CHECK_THROWS_AS(central_diff(Grid(1, 1, 0.0), Axis::X, PadMode::Replicate), DimensionError);
    CHECK_THROWS_AS(second_diffs(Grid(2, 2, 0.0), PadMode::Replicate), DimensionError);
    CHECK_THROWS_AS(sobel_magnitude(Grid(2, 5, 0.0), PadMode::Replicate), DimensionError);
}

TEST_CASE("FGRD round trip and header layout") {
    Rng r(21);
    Grid g = random_grid(5, 3, r);
    std::string path = (std::filesystem::temp_directory_path() / "fields_rt.fgrd").string();
    write_fgrd(path, g);

    FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    unsigned char head[13];
    REQUIRE(std::fread(head, 1, 13, f) == 13);
    std::fclose(f);
    CHECK(head[0] == 'F');
    CHECK(head[1] == 'G');
    CHECK(head[2] == 'R');
    CHECK(head[3] == 'D');
    CHECK(head[4] == 0x01);
    CHECK(head[5] == 5);  // height LE
    CHECK(head[6] == 0);
    CHECK(head[9] == 3);  // width LE
    CHECK(head[10] == 0);

    Grid back = read_fgrd(path);
    REQUIRE(back.same_shape(g));
    for (int k = 0; k < g.size(); ++k)
        CHECK(back.values[k] == doctest::Approx(g.values[k]).epsilon(1e-6));
    std::filesystem::remove(path);
}

TEST_CASE("PGM round trip binarizes masks at >127") {
    Grid g(2, 3, 0.0);
    g.at(0, 0) = 1.0;
    g.at(0, 1) = 0.4;
    g.at(1, 2) = 0.6;
    std::string path = (std::filesystem::temp_directory_path() / "fields_rt.pgm").string();
    write_pgm(path, g);
    Grid mask = read_pgm_mask(path);
    CHECK(mask.at(0, 0) == 1.0);
    CHECK(mask.at(0, 1) == 0.0);  // 0.4 -> 102 <= 127
    CHECK(mask.at(1, 2) == 1.0);  // 0.6 -> 153 > 127
    CHECK(mask.at(1, 0) == 0.0);
    std::filesystem::remove(path);
}
