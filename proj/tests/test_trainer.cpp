#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "lsseg/gradcheck.hpp"
#include "lsseg/io.hpp"
#include "lsseg/metrics.hpp"
#include "lsseg/rng.hpp"
#include "lsseg/synth.hpp"
#include "lsseg/trainer.hpp"

using namespace lsseg;

namespace {

Scene easy_disk(int size, uint64_t seed) {
    SceneSpec spec;
    spec.size = size;
    spec.n_instances_min = spec.n_instances_max = 1;
    spec.rects = false;
    spec.disks = true;
    spec.blobs = false;
    spec.noise_sigma = 0.0;
    spec.seed = seed;
    return gen_scene(spec);
}

// configuration mirroring the desk-scale training setup: few ACM steps,
// small localized window, smoothed curvature guard
TrainConfig small_cfg(int acm_iters) {
    TrainConfig cfg;
    cfg.acm.iters = acm_iters;
    cfg.acm.window = 2;
    cfg.acm.eta = 1e-2;
    return cfg;
}

// Probe point with every hidden relu in its active region, so the
// finite-difference comparison measures the gradient code rather than a kink.
PredictorParams active_region_init(uint64_t seed) {
    PredictorParams p = PredictorParams::random_init(seed);
    for (int c = 0; c < PredictorParams::kHidden; ++c) {
        for (double& v : p.tensors[PredictorParams::kConv1K + c].values) v *= 0.2;
        p.tensors[PredictorParams::kConv1B + c].values[0] = 0.5;
    }
    return p;
}

bool same_tensors(const PredictorParams& a, const PredictorParams& b) {
    for (int i = 0; i < PredictorParams::kTensorCount; ++i)
        for (int k = 0; k < a.tensors[i].size(); ++k)
            if (a.tensors[i].values[k] != b.tensors[i].values[k]) return false;
    return true;
}

}  // namespace

TEST_CASE("zero-parameter predictor lands on the sigmoid midpoints") {
    PredictorParams p = PredictorParams::zeros();
    Grid image(12, 9, 0.3);
    PredictorOutput out = predictor_forward(image, p);
    CHECK(out.lambda1.height == 12);
    CHECK(out.lambda1.width == 9);
    CHECK(out.phi0.same_shape(image));
    CHECK(out.prob.same_shape(image));
    for (int k = 0; k < image.size(); ++k) {
        CHECK(out.lambda1.values[k] == doctest::Approx(p.lambda_scale / 2.0).epsilon(1e-12));
        CHECK(out.lambda2.values[k] == doctest::Approx(p.lambda_scale / 2.0).epsilon(1e-12));
        CHECK(out.phi0.values[k] == doctest::Approx(0.0));
        CHECK(out.prob.values[k] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("taped and eager predictor forward agree") {
    PredictorParams p = PredictorParams::random_init(4);
    Grid image = easy_disk(16, 2).image;
    PredictorOutput eager = predictor_forward(image, p);
    Tape t;
    std::vector<Var> vars = lift_params(t, p);
    PredictorOutputVars taped = predictor_forward(t, image, p, vars);
    const Grid& l1 = t.value(taped.lambda1).g;
    const Grid& phi0 = t.value(taped.phi0).g;
    for (int k = 0; k < image.size(); ++k) {
        CHECK(l1.values[k] == eager.lambda1.values[k]);
        CHECK(phi0.values[k] == eager.phi0.values[k]);
    }
}

TEST_CASE("learning-rate schedule pins") {
    CHECK(lr_schedule(0, 30, 0.05) == doctest::Approx(0.05));
    CHECK(lr_schedule(30, 30, 0.05) == 0.0);
    CHECK(lr_schedule(15, 30, 1.0) == doctest::Approx(std::pow(0.5, 0.9)).epsilon(1e-12));
    CHECK(std::pow(0.5, 0.9) == doctest::Approx(0.5359).epsilon(1e-3));
    CHECK_THROWS(lr_schedule(31, 30, 0.05));
}

TEST_CASE("train_step basics") {
    Scene s = easy_disk(24, 9);
    std::vector<TrainSample> batch{{s.image, s.gt}};
    TrainConfig cfg = small_cfg(3);

    SUBCASE("zero learning rate reports the loss but leaves parameters alone") {
        PredictorParams p = PredictorParams::random_init(1);
        PredictorParams before = p;
        double loss = train_step(batch, p, cfg, 0.0);
        CHECK(std::isfinite(loss));
        CHECK(loss > 0.0);
        CHECK(same_tensors(p, before));
    }
    SUBCASE("a small step decreases the same-batch loss") {
        PredictorParams p = PredictorParams::random_init(1);
        double before = train_step(batch, p, cfg, 1e-3);
        double after = train_step(batch, p, cfg, 0.0);
        CHECK(after < before);
    }
    SUBCASE("identical seeds give identical trajectories") {
        PredictorParams a = PredictorParams::random_init(6);
        PredictorParams b = PredictorParams::random_init(6);
        for (int step = 0; step < 3; ++step) {
            double la = train_step(batch, a, cfg, 1e-2);
            double lb = train_step(batch, b, cfg, 1e-2);
            CHECK(la == lb);
        }
        CHECK(same_tensors(a, b));
    }
    SUBCASE("momentum needs its state") {
        PredictorParams p = PredictorParams::random_init(1);
        TrainConfig mom = cfg;
        mom.optimizer = Optimizer::Momentum;
        CHECK_THROWS(train_step(batch, p, mom, 1e-3, nullptr));
        MomentumState state;
        CHECK_NOTHROW(train_step(batch, p, mom, 1e-3, &state));
        CHECK(state.velocity.size() == size_t(PredictorParams::kTensorCount));
    }
}

TEST_CASE("fit with zero epochs returns the seeded init and no history") {
    Scene s = easy_disk(16, 3);
    TrainConfig cfg = small_cfg(2);
    cfg.epochs = 0;
    cfg.seed = 77;
    FitResult r = fit(std::vector<TrainSample>{{s.image, s.gt}}, {}, cfg);
    CHECK(r.history.empty());
    PredictorParams want = PredictorParams::random_init(77);
    want.snap_to_f32();
    CHECK(same_tensors(r.params, want));
    CHECK_THROWS(fit(std::vector<TrainSample>{}, {}, cfg));
}

TEST_CASE("single-scene overfit drives the loss down by 10x") {
    Scene s = easy_disk(32, 21);
    std::vector<TrainSample> train{{s.image, s.gt}};
    TrainConfig cfg = small_cfg(10);
    cfg.epochs = 80;
    cfg.base_lr = 0.5;
    cfg.batch_size = 1;
    cfg.seed = 42;
    FitResult r = fit(train, {}, cfg);
    REQUIRE(r.history.size() == 80);
    double initial = r.history.front().train_loss;
    double final = r.history.back().train_loss;
    CHECK(std::isfinite(final));
    CHECK(final < 0.1 * initial);
}

TEST_CASE("model file round trip reproduces predictions bit for bit") {
    PredictorParams p = PredictorParams::random_init(13);
    std::string path = (std::filesystem::temp_directory_path() / "trainer_rt.modl").string();
    save_model(path, p);
    PredictorParams back = load_model(path);
    std::filesystem::remove(path);

    PredictorParams snapped = p;
    snapped.snap_to_f32();
    CHECK(same_tensors(back, snapped));
    CHECK(back.phi_scale == snapped.phi_scale);
    CHECK(back.lambda_scale == snapped.lambda_scale);

    Scene s = easy_disk(24, 8);
    TrainConfig cfg = small_cfg(5);
    Grid a = predict_mask(s.image, snapped, cfg);
    Grid b = predict_mask(s.image, back, cfg);
    for (int k = 0; k < a.size(); ++k) CHECK(a.values[k] == b.values[k]);
}

TEST_CASE("load_model rejects truncated and foreign files") {
    std::string path = (std::filesystem::temp_directory_path() / "trainer_bad.modl").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("not a model", f);
        std::fclose(f);
    }
    CHECK_THROWS(load_model(path));
    std::filesystem::remove(path);
    CHECK_THROWS(load_model(path));  // missing file
}

TEST_CASE("training config json round trip") {
    TrainConfig cfg = small_cfg(7);
    cfg.epochs = 12;
    cfg.base_lr = 0.25;
    cfg.batch_size = 4;
    cfg.seed = 31;
    cfg.optimizer = Optimizer::Momentum;
    cfg.momentum_beta = 0.8;
    cfg.holdout = 5;
    cfg.weights.w_edge = 0.3;
    std::string j = cfg.to_json();
    TrainConfig back = TrainConfig::from_json(j);
    CHECK(back.epochs == 12);
    CHECK(back.base_lr == 0.25);
    CHECK(back.batch_size == 4);
    CHECK(back.seed == 31);
    CHECK(back.optimizer == Optimizer::Momentum);
    CHECK(back.momentum_beta == 0.8);
    CHECK(back.holdout == 5);
    CHECK(back.weights.w_edge == 0.3);
    CHECK(back.acm.iters == 7);
    CHECK(j.find("\"epochs\"") != std::string::npos);
    CHECK(j.find("\"base_lr\"") != std::string::npos);
    CHECK(j.find("\"optimizer\"") != std::string::npos);
}

TEST_CASE("gradients through predictor and unrolled evolution match finite differences") {
    Scene s = easy_disk(16, 5);
    SUBCASE("three evolution steps") {
        TrainConfig cfg = small_cfg(3);
        PredictorParams params = active_region_init(5);
        auto prog = [&](Tape& t, const std::vector<Var>& v) {
            return sample_loss(t, {s.image, s.gt}, params, v, cfg);
        };
        Rng rng(19);
        GradCheckResult r = grad_check(prog, params.tensors, 1e-3, 64, rng);
        CHECK(r.max_rel_err < 1e-3);
    }
    SUBCASE("five evolution steps") {
        TrainConfig cfg = small_cfg(5);
        PredictorParams params = active_region_init(23);
        auto prog = [&](Tape& t, const std::vector<Var>& v) {
            return sample_loss(t, {s.image, s.gt}, params, v, cfg);
        };
        Rng rng(29);
        GradCheckResult r = grad_check(prog, params.tensors, 1e-3, 64, rng);
        CHECK(r.max_rel_err < 1e-3);
    }
    SUBCASE("constant-lambda mode") {
        TrainConfig cfg = small_cfg(3);
        cfg.acm.lambda_mode = LambdaMode::Constants;
        PredictorParams params = active_region_init(7);
        auto prog = [&](Tape& t, const std::vector<Var>& v) {
            return sample_loss(t, {s.image, s.gt}, params, v, cfg);
        };
        Rng rng(37);
        GradCheckResult r = grad_check(prog, params.tensors, 1e-3, 64, rng);
        CHECK(r.max_rel_err < 1e-3);
    }
}

TEST_CASE("dataset loader pairs images with their masks") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "trainer_ds";
    fs::create_directories(dir);
    Scene a = easy_disk(16, 1), b = easy_disk(16, 2);
    write_pgm((dir / "scene_0000.pgm").string(), a.image);
    write_pgm((dir / "scene_0000_gt.pgm").string(), a.gt);
    write_pgm((dir / "scene_0001.pgm").string(), b.image);
    write_pgm((dir / "scene_0001_gt.pgm").string(), b.gt);
    write_pgm((dir / "scene_0002.pgm").string(), b.image);  // no gt -> skipped

    std::vector<TrainSample> ds = load_dataset(dir.string());
    CHECK(ds.size() == 2);
    CHECK(ds[0].gt.same_shape(a.gt));
    CHECK(dice_score(ds[0].gt, a.gt) == doctest::Approx(1.0).epsilon(1e-6));

    fs::remove_all(dir);
    CHECK_THROWS(load_dataset(dir.string()));
}
