#include "lsseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <stdexcept>

#include "lsseg/io.hpp"
#include "lsseg/metrics.hpp"
#include "lsseg/rng.hpp"

namespace fs = std::filesystem;

namespace lsseg {

namespace {

std::string tensor_name(int idx) {
    const int h = PredictorParams::kHidden;
    if (idx < PredictorParams::kConv1B) return "conv1_k" + std::to_string(idx);
    if (idx < PredictorParams::kConv2K)
        return "conv1_b" + std::to_string(idx - PredictorParams::kConv1B);
    if (idx < PredictorParams::kConv2B) {
        int rel = idx - PredictorParams::kConv2K;
        return "conv2_k" + std::to_string(rel / h) + "_" + std::to_string(rel % h);
    }
    if (idx < PredictorParams::kLambdaRaw)
        return "conv2_b" + std::to_string(idx - PredictorParams::kConv2B);
    return "lambda_raw" + std::to_string(idx - PredictorParams::kLambdaRaw);
}

}  // namespace

PredictorParams PredictorParams::zeros() {
    PredictorParams p;
    p.tensors.reserve(kTensorCount);
    for (int i = 0; i < kConv1B; ++i) p.tensors.emplace_back(3, 3, 0.0);
    for (int i = kConv1B; i < kConv2K; ++i) p.tensors.emplace_back(1, 1, 0.0);
    for (int i = kConv2K; i < kConv2B; ++i) p.tensors.emplace_back(3, 3, 0.0);
    for (int i = kConv2B; i < kTensorCount; ++i) p.tensors.emplace_back(1, 1, 0.0);
    return p;
}

PredictorParams PredictorParams::random_init(uint64_t seed) {
    PredictorParams p = zeros();
    Rng rng(seed);
    const double std1 = std::sqrt(2.0 / 9.0);           // fan-in 1*3*3
    const double std2 = std::sqrt(2.0 / (9.0 * kHidden));  // fan-in 8*3*3
    for (int i = kConv1K; i < kConv1B; ++i)
        for (double& v : p.tensors[i].values) v = std1 * rng.normal();
    for (int i = kConv2K; i < kConv2B; ++i)
        for (double& v : p.tensors[i].values) v = std2 * rng.normal();
    // Start the lambda heads small: full-strength fit weights under the
    // (2f+1)^2 window sum make the first evolution steps violently large
    // before the predictor has learned anything.
    p.tensors[kConv2B + 0].values[0] = -2.0;
    p.tensors[kConv2B + 1].values[0] = -2.0;
    p.tensors[kLambdaRaw + 0].values[0] = -2.0;
    p.tensors[kLambdaRaw + 1].values[0] = -2.0;
    return p;
}

namespace {

// The volatile stop forces the narrowing: gcc 11 at -O3 otherwise folds the
// double->float->double round trip into a no-op.
double round_to_f32(double v) {
    volatile float f = static_cast<float>(v);
    return static_cast<double>(f);
}

}  // namespace

void PredictorParams::snap_to_f32() {
    for (Grid& g : tensors)
        for (double& v : g.values) v = round_to_f32(v);
    phi_scale = round_to_f32(phi_scale);
    lambda_scale = round_to_f32(lambda_scale);
}

std::vector<Var> lift_params(Tape& t, const PredictorParams& p) {
    if (static_cast<int>(p.tensors.size()) != PredictorParams::kTensorCount)
        throw std::invalid_argument("lift_params: bad tensor count");
    std::vector<Var> vars;
    vars.reserve(p.tensors.size());
    for (const Grid& g : p.tensors) vars.push_back(t.leaf(g));
    return vars;
}

PredictorOutputVars predictor_forward(Tape& t, const Grid& image, const PredictorParams& p,
                                      const std::vector<Var>& vars) {
    if (static_cast<int>(vars.size()) != PredictorParams::kTensorCount)
        throw std::invalid_argument("predictor_forward: bad var count");
    Var img = t.constant(image);

    std::vector<Var> hidden;
    hidden.reserve(PredictorParams::kHidden);
    for (int c = 0; c < PredictorParams::kHidden; ++c) {
        Var conv = t.conv3x3(img, vars[PredictorParams::kConv1K + c], PadMode::Zero);
        Var bias = t.to_scalar(vars[PredictorParams::kConv1B + c]);
        hidden.push_back(t.map_relu(t.add(conv, bias)));
    }

    std::vector<Var> raw;
    raw.reserve(PredictorParams::kOut);
    for (int o = 0; o < PredictorParams::kOut; ++o) {
        Var acc = t.conv3x3(hidden[0],
                            vars[PredictorParams::kConv2K + o * PredictorParams::kHidden],
                            PadMode::Zero);
        for (int ic = 1; ic < PredictorParams::kHidden; ++ic)
            acc = t.add(acc, t.conv3x3(hidden[ic],
                                       vars[PredictorParams::kConv2K +
                                            o * PredictorParams::kHidden + ic],
                                       PadMode::Zero));
        raw.push_back(t.add(acc, t.to_scalar(vars[PredictorParams::kConv2B + o])));
    }

    PredictorOutputVars out;
    out.lambda1 = t.cmul(t.map_sigmoid(raw[0]), p.lambda_scale);
    out.lambda2 = t.cmul(t.map_sigmoid(raw[1]), p.lambda_scale);
    out.phi0 = t.cmul(t.cadd(t.map_sigmoid(raw[2]), -0.5), p.phi_scale);
    out.prob = t.map_sigmoid(raw[3]);
    return out;
}

PredictorOutput predictor_forward(const Grid& image, const PredictorParams& p) {
    Tape t;
    std::vector<Var> vars = lift_params(t, p);
    PredictorOutputVars v = predictor_forward(t, image, p, vars);
    return {t.value(v.lambda1).g, t.value(v.lambda2).g, t.value(v.phi0).g, t.value(v.prob).g};
}

double lr_schedule(int e, int n_e, double alpha0) {
    if (n_e < 1) throw std::invalid_argument("lr_schedule: N_e must be >= 1");
    if (e < 0 || e > n_e) throw std::invalid_argument("lr_schedule: e out of [0, N_e]");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("lr_schedule: alpha0 must be > 0");
    return alpha0 * std::pow(1.0 - static_cast<double>(e) / n_e, 0.9);
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["epochs"] = epochs;
    j["base_lr"] = base_lr;
    j["acm"] = nlohmann::json::parse(acm.to_json());
    j["weights"] = {{"w_main_dice", weights.w_main_dice},
                    {"w_shape_dice", weights.w_shape_dice},
                    {"w_edge", weights.w_edge},
                    {"edge_dice", weights.edge_dice},
                    {"edge_bce", weights.edge_bce},
                    {"consistency_tau", weights.consistency_tau}};
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["optimizer"] = optimizer == Optimizer::PlainSGD ? "plain_sgd" : "momentum";
    j["momentum_beta"] = momentum_beta;
    j["holdout"] = holdout;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    static const std::set<std::string> known = {"epochs",     "base_lr",   "acm",
                                               "weights",    "batch_size", "seed",
                                               "optimizer",  "momentum_beta", "holdout"};
    for (auto& [key, _] : j.items())
        if (!known.count(key))
            throw std::invalid_argument("TrainConfig: unknown key \"" + key + "\"");
    TrainConfig c;
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("base_lr")) c.base_lr = j["base_lr"].get<double>();
    if (j.contains("acm")) c.acm = AcmParams::from_json(j["acm"].dump());
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        if (w.contains("w_main_dice")) c.weights.w_main_dice = w["w_main_dice"].get<double>();
        if (w.contains("w_shape_dice")) c.weights.w_shape_dice = w["w_shape_dice"].get<double>();
        if (w.contains("w_edge")) c.weights.w_edge = w["w_edge"].get<double>();
        if (w.contains("edge_dice")) c.weights.edge_dice = w["edge_dice"].get<double>();
        if (w.contains("edge_bce")) c.weights.edge_bce = w["edge_bce"].get<double>();
        if (w.contains("consistency_tau"))
            c.weights.consistency_tau = w["consistency_tau"].get<double>();
    }
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("optimizer")) {
        std::string o = j["optimizer"].get<std::string>();
        if (o == "plain_sgd")
            c.optimizer = Optimizer::PlainSGD;
        else if (o == "momentum")
            c.optimizer = Optimizer::Momentum;
        else
            throw std::invalid_argument("TrainConfig: bad optimizer \"" + o + "\"");
    }
    if (j.contains("momentum_beta")) c.momentum_beta = j["momentum_beta"].get<double>();
    if (j.contains("holdout")) c.holdout = j["holdout"].get<int>();
    if (c.epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (!(c.base_lr > 0.0)) throw std::invalid_argument("TrainConfig: base_lr must be > 0");
    if (c.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (c.holdout < 0) throw std::invalid_argument("TrainConfig: holdout must be >= 0");
    return c;
}

Var sample_loss(Tape& t, const TrainSample& sample, const PredictorParams& params,
                const std::vector<Var>& vars, const TrainConfig& cfg) {
    if (!sample.image.same_shape(sample.gt))
        throw DimensionError("sample_loss: image/gt shape mismatch");
    PredictorOutputVars pred = predictor_forward(t, sample.image, params, vars);
    Var l1 = pred.lambda1;
    Var l2 = pred.lambda2;
    if (cfg.acm.lambda_mode == LambdaMode::Constants) {
        l1 = t.cmul(t.map_sigmoid(t.to_scalar(vars[PredictorParams::kLambdaRaw])), params.lambda_scale);
        l2 = t.cmul(t.map_sigmoid(t.to_scalar(vars[PredictorParams::kLambdaRaw + 1])),
                    params.lambda_scale);
    }
    Var phi_n = evolve_on_tape(t, sample.image, pred.phi0, l1, l2, cfg.acm);
    return dtac_total_loss(t, phi_n, pred.prob, sample.gt, cfg.acm.eps);
}

double train_step(const std::vector<TrainSample>& batch, PredictorParams& params,
                  const TrainConfig& cfg, double lr, MomentumState* momentum) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

    std::vector<Grid> grad_sum;
    for (const Grid& g : params.tensors) grad_sum.emplace_back(g.height, g.width, 0.0);
    double loss_sum = 0.0;

    for (const TrainSample& s : batch) {
        Tape t;
        std::vector<Var> vars = lift_params(t, params);
        Var loss = sample_loss(t, s, params, vars, cfg);
        double lv = t.value(loss).s;
        if (!std::isfinite(lv))
            throw std::runtime_error("train_step: non-finite loss (" + std::to_string(lv) + ")");
        loss_sum += lv;
        t.backward(loss);
        for (size_t i = 0; i < vars.size(); ++i) {
            Val g = t.grad(vars[i]);
            if (g.scalar) {
                grad_sum[i].values[0] += g.s;
            } else {
                for (long k = 0; k < g.g.size(); ++k) grad_sum[i].values[k] += g.g.values[k];
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (size_t i = 0; i < grad_sum.size(); ++i) {
        for (long k = 0; k < grad_sum[i].size(); ++k) {
            double g = grad_sum[i].values[k] * inv_n;
            if (!std::isfinite(g)) throw std::runtime_error("train_step: non-finite gradient");
            if (cfg.optimizer == Optimizer::Momentum) {
                if (momentum == nullptr)
                    throw std::invalid_argument("train_step: momentum optimizer needs state");
                if (momentum->velocity.empty())
                    for (const Grid& gt : params.tensors)
                        momentum->velocity.emplace_back(gt.height, gt.width, 0.0);
                double& v = momentum->velocity[i].values[k];
                v = cfg.momentum_beta * v + g;
                g = v;
            }
            params.tensors[i].values[k] -= lr * g;
        }
    }
    return loss_sum * inv_n;
}

Grid predict_mask(const Grid& image, const PredictorParams& params, const TrainConfig& cfg) {
    PredictorOutput pred = predictor_forward(image, params);
    Val l1, l2;
    if (cfg.acm.lambda_mode == LambdaMode::Constants) {
        l1 = Val(params.lambda_scale *
                 fn_sigmoid(params.tensors[PredictorParams::kLambdaRaw].values[0]));
        l2 = Val(params.lambda_scale *
                 fn_sigmoid(params.tensors[PredictorParams::kLambdaRaw + 1].values[0]));
    } else {
        l1 = Val(pred.lambda1);
        l2 = Val(pred.lambda2);
    }
    EvolveResult r = evolve(image, pred.phi0, l1, l2, cfg.acm);
    return mask_from_phi(r.phi);
}

FitResult fit(const std::vector<TrainSample>& train, const std::vector<TrainSample>& holdout,
              const TrainConfig& cfg) {
    if (train.empty()) throw std::invalid_argument("fit: empty training set");

    FitResult result;
    result.params = PredictorParams::random_init(cfg.seed);
    if (cfg.epochs == 0) {
        result.params.snap_to_f32();
        return result;
    }

    Rng shuffle_rng = Rng(cfg.seed).split(7);
    MomentumState momentum;
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (int e = 0; e < cfg.epochs; ++e) {
        // Fisher-Yates with the dedicated shuffle stream
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(0, static_cast<int>(i) - 1)]);

        double lr = lr_schedule(e, cfg.epochs, cfg.base_lr);
        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<TrainSample> batch;
            for (size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
                batch.push_back(train[order[k]]);
            epoch_loss += train_step(batch, result.params, cfg, lr,
                                     cfg.optimizer == Optimizer::Momentum ? &momentum : nullptr);
            ++batches;
        }

        EpochRecord rec;
        rec.epoch = e;
        rec.train_loss = epoch_loss / std::max(batches, 1);
        if (!holdout.empty()) {
            double dice_sum = 0.0;
            for (const TrainSample& s : holdout)
                dice_sum += dice_score(predict_mask(s.image, result.params, cfg), s.gt);
            rec.holdout_dice = dice_sum / static_cast<double>(holdout.size());
        }
        result.history.push_back(rec);
    }

    result.params.snap_to_f32();
    return result;
}

std::vector<TrainSample> load_dataset(const std::string& dir) {
    std::vector<std::string> bases;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        std::string name = entry.path().filename().string();
        if (name.size() > 4 && name.ends_with(".pgm") && !name.ends_with("_gt.pgm"))
            bases.push_back(name.substr(0, name.size() - 4));
    }
    if (ec) throw IoError("load_dataset: cannot read directory " + dir);
    std::sort(bases.begin(), bases.end());

    std::vector<TrainSample> samples;
    for (const std::string& base : bases) {
        fs::path img = fs::path(dir) / (base + ".pgm");
        fs::path gt = fs::path(dir) / (base + "_gt.pgm");
        if (!fs::exists(gt)) continue;
        samples.push_back({read_pgm(img.string()), read_pgm_mask(gt.string())});
    }
    if (samples.empty()) throw IoError("load_dataset: no image/gt pairs in " + dir);
    return samples;
}

FitResult fit(const std::string& dataset_dir, const TrainConfig& cfg,
              const std::string& out_path) {
    std::vector<TrainSample> all = load_dataset(dataset_dir);
    if (cfg.holdout >= static_cast<int>(all.size()))
        throw std::invalid_argument("fit: holdout >= dataset size");
    std::vector<TrainSample> holdout(all.end() - cfg.holdout, all.end());
    all.resize(all.size() - cfg.holdout);
    FitResult r = fit(all, holdout, cfg);
    if (!out_path.empty()) save_model(out_path, r.params);
    return r;
}

namespace {

void put_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void put_f32le(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(os, bits);
}

float get_f32le(std::istream& is) {
    uint32_t bits = get_u32le(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_fgrd_block(std::ostream& os, const Grid& g) {
    os.write("FGRD", 4);
    os.put(0x01);
    put_u32le(os, static_cast<uint32_t>(g.height));
    put_u32le(os, static_cast<uint32_t>(g.width));
    for (double v : g.values) put_f32le(os, static_cast<float>(v));
}

Grid read_fgrd_block(std::istream& is, const std::string& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FGRD", 4) != 0)
        throw IoError("load_model: bad tensor block magic in " + path);
    if (is.get() != 0x01) throw IoError("load_model: unsupported tensor version in " + path);
    uint32_t h = get_u32le(is);
    uint32_t w = get_u32le(is);
    if (!is || h == 0 || w == 0 || h > 1u << 20 || w > 1u << 20)
        throw IoError("load_model: bad tensor dimensions in " + path);
    Grid g(static_cast<int>(h), static_cast<int>(w), 0.0);
    for (double& v : g.values) v = static_cast<double>(get_f32le(is));
    if (!is) throw IoError("load_model: truncated tensor data in " + path);
    return g;
}

}  // namespace

void save_model(const std::string& path, const PredictorParams& params) {
    if (static_cast<int>(params.tensors.size()) != PredictorParams::kTensorCount)
        throw std::invalid_argument("save_model: bad tensor count");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_model: cannot open " + path);
    os.write("MODL", 4);
    os.put(0x01);
    auto put_named = [&](const std::string& name, const Grid& g) {
        if (name.size() > 255) throw std::invalid_argument("save_model: name too long");
        os.put(static_cast<char>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_fgrd_block(os, g);
    };
    for (int i = 0; i < PredictorParams::kTensorCount; ++i)
        put_named(tensor_name(i), params.tensors[i]);
    put_named("phi_scale", Grid(1, 1, params.phi_scale));
    put_named("lambda_scale", Grid(1, 1, params.lambda_scale));
    if (!os) throw IoError("save_model: write failed for " + path);
}

PredictorParams load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_model: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MODL", 4) != 0)
        throw IoError("load_model: bad magic in " + path);
    if (is.get() != 0x01) throw IoError("load_model: unsupported version in " + path);

    PredictorParams p = PredictorParams::zeros();
    std::vector<bool> seen(PredictorParams::kTensorCount, false);
    while (true) {
        int len = is.get();
        if (len == std::istream::traits_type::eof()) break;
        std::string name(static_cast<size_t>(len), '\0');
        is.read(name.data(), len);
        if (!is) throw IoError("load_model: truncated tensor name in " + path);
        Grid g = read_fgrd_block(is, path);
        if (name == "phi_scale") {
            p.phi_scale = g.values[0];
            continue;
        }
        if (name == "lambda_scale") {
            p.lambda_scale = g.values[0];
            continue;
        }
        bool matched = false;
        for (int i = 0; i < PredictorParams::kTensorCount; ++i) {
            if (tensor_name(i) == name) {
                if (!g.same_shape(p.tensors[i]))
                    throw IoError("load_model: wrong shape for tensor " + name);
                p.tensors[i] = std::move(g);
                seen[i] = true;
                matched = true;
                break;
            }
        }
        if (!matched) throw IoError("load_model: unknown tensor \"" + name + "\" in " + path);
    }
    for (int i = 0; i < PredictorParams::kTensorCount; ++i)
        if (!seen[i]) throw IoError("load_model: missing tensor " + tensor_name(i) + " in " + path);
    return p;
}

}  // namespace lsseg
