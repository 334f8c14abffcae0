#include "xmas/reg_net.hpp"

#include <cmath>
#include <sstream>

#include "xmas/field_ops.hpp"

namespace xmas {

RegModel build_regnet(const RegNetConfig& cfg) {
    RegModel model;
    model.net.build(cfg);
    model.adam.lr = cfg.learning_rate;
    model.adam.attach(model.net.params());
    model.iteration = 0;
    return model;
}

static Tensor<float> pair_input(const ScalarVolume& image_a, const ScalarVolume& image_t) {
    require_same_grid(image_a.grid, image_t.grid, "predict_ddfs");
    Tensor<float> in(2, image_a.grid.shape);
    const std::size_t nvox = image_a.grid.voxel_count();
    for (std::size_t i = 0; i < nvox; ++i) {
        in.v[i] = static_cast<float>(image_a.values[i]);
        in.v[nvox + i] = static_cast<float>(image_t.values[i]);
    }
    return in;
}

std::pair<DisplacementField, DisplacementField>
predict_ddfs(const RegModel& model, const ScalarVolume& image_a, const ScalarVolume& image_t) {
    require_same_grid(image_a.grid, model.cfg().input_grid, "predict_ddfs");
    auto [u, v] = model.net.forward(pair_input(image_a, image_t), false);
    return {field_from_tensor(u, image_a.grid), field_from_tensor(v, image_a.grid)};
}

WarpedAtlas register_atlas(const RegModel& model, const ScalarVolume& atlas_image,
                           const LabelVolume& atlas_label, const ScalarVolume& target_image) {
    auto [u, v] = predict_ddfs(model, atlas_image, target_image);
    WarpedAtlas out;
    out.image = warp_scalar(atlas_image, u);
    out.label = warp_labels(atlas_label, u);
    out.u = std::move(u);
    out.v = std::move(v);
    return out;
}

std::vector<LossBreakdown> train_reg(RegModel& model, const std::vector<RegPair>& pairs,
                                     int iterations, const LossConfig& loss_cfg) {
    std::vector<LossBreakdown> history;
    if (iterations <= 0) return history;
    if (pairs.empty()) throw ConfigError("train_reg: no training pairs");

    // One-hot tensors are fixed per pair; build them once.
    struct Prepared {
        Tensor<float> input, oh_a, oh_t;
        std::vector<int> fg;
    };
    std::vector<Prepared> prep;
    prep.reserve(pairs.size());
    for (const auto& p : pairs) {
        require_same_grid(p.image_a.grid, model.cfg().input_grid, "train_reg");
        require_same_grid(p.image_t.grid, model.cfg().input_grid, "train_reg");
        Prepared pr;
        pr.input = pair_input(p.image_a, p.image_t);
        pr.oh_a = tensor_from_onehot<float>(one_hot(p.label_a));
        pr.oh_t = tensor_from_onehot<float>(one_hot(p.label_t));
        pr.fg = foreground_channels(p.label_a.label_set);
        prep.push_back(std::move(pr));
    }

    const auto blocks = model.net.params();
    history.reserve(iterations);
    for (int it = 0; it < iterations; ++it) {
        const Prepared& pr = prep[static_cast<std::size_t>(model.iteration) % prep.size()];
        model.net.zero_grad();
        auto [u, v] = model.net.forward(pr.input, true);
        Tensor<float> gu(3, u.dims), gv(3, v.dims);
        const LossBreakdown lb = loss_kernels::total_loss_tensor<float>(
            pr.oh_a, pr.oh_t, u, v, loss_cfg, pr.fg, &gu, &gv);
        if (!std::isfinite(lb.total)) {
            std::ostringstream dump;
            dump << "train_reg: non-finite loss at iteration " << model.iteration
                 << " (dice_f=" << lb.dice_forward << " dice_b=" << lb.dice_backward
                 << " smooth_u=" << lb.smooth_u << " smooth_v=" << lb.smooth_v
                 << " inv_a=" << lb.inv_a << " inv_t=" << lb.inv_t << ")";
            throw NumericError(dump.str());
        }
        model.net.backward(gu, gv);
        model.adam.step(blocks);
        ++model.iteration;
        history.push_back(lb);
    }
    return history;
}

static std::string grid_to_string(const SpatialGrid& g) {
    std::ostringstream os;
    os << g.shape[0] << " " << g.shape[1] << " " << g.shape[2] << " " << g.spacing[0] << " "
       << g.spacing[1] << " " << g.spacing[2];
    return os.str();
}

static SpatialGrid grid_from_string(const std::string& s) {
    std::istringstream is(s);
    SpatialGrid g;
    is >> g.shape[0] >> g.shape[1] >> g.shape[2] >> g.spacing[0] >> g.spacing[1] >> g.spacing[2];
    if (!is) throw MalformedHeaderError("checkpoint: bad grid entry");
    return g;
}

Checkpoint regnet_to_checkpoint(const RegModel& model) {
    Checkpoint ck;
    ck.format = kRegCheckpointFormat;
    const auto& cfg = model.cfg();
    ck.meta["levels"] = std::to_string(cfg.levels);
    ck.meta["base_channels"] = std::to_string(cfg.base_channels);
    ck.meta["grid"] = grid_to_string(cfg.input_grid);
    ck.meta["final_layer_zero_init"] = cfg.final_layer_zero_init ? "1" : "0";
    {
        std::ostringstream os;
        os << cfg.learning_rate;
        ck.meta["learning_rate"] = os.str();
    }
    ck.meta["iterations"] = std::to_string(cfg.iterations);
    ck.meta["seed"] = std::to_string(cfg.seed);
    ck.meta["iteration"] = std::to_string(model.iteration);
    ck.meta["adam_t"] = std::to_string(model.adam.t);

    auto blocks = const_cast<RegModel&>(model).net.params();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        ck.blocks.emplace_back(blocks[k].name, *blocks[k].w);
        ck.blocks.emplace_back("adam.m." + blocks[k].name, model.adam.m[k]);
        ck.blocks.emplace_back("adam.v." + blocks[k].name, model.adam.v[k]);
    }
    return ck;
}

RegModel regnet_from_checkpoint(const Checkpoint& ck) {
    RegNetConfig cfg;
    cfg.levels = std::stoi(ck.meta_or("levels", "3"));
    cfg.base_channels = std::stoi(ck.meta_or("base_channels", "8"));
    cfg.input_grid = grid_from_string(ck.meta_or("grid", "32 32 32 1 1 1"));
    cfg.final_layer_zero_init = ck.meta_or("final_layer_zero_init", "1") == "1";
    cfg.learning_rate = std::stod(ck.meta_or("learning_rate", "1e-3"));
    cfg.iterations = std::stoi(ck.meta_or("iterations", "0"));
    cfg.seed = std::stoull(ck.meta_or("seed", "0"));

    RegModel model = build_regnet(cfg);
    model.iteration = std::stoll(ck.meta_or("iteration", "0"));
    model.adam.t = std::stoll(ck.meta_or("adam_t", "0"));
    auto blocks = model.net.params();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto* w = ck.find(blocks[k].name);
        const auto* m = ck.find("adam.m." + blocks[k].name);
        const auto* v = ck.find("adam.v." + blocks[k].name);
        if (!w || !m || !v)
            throw MalformedHeaderError("checkpoint: missing block " + blocks[k].name);
        if (w->size() != blocks[k].w->size())
            throw MalformedHeaderError("checkpoint: size mismatch for " + blocks[k].name);
        *blocks[k].w = *w;
        model.adam.m[k] = *m;
        model.adam.v[k] = *v;
    }
    return model;
}

} // namespace xmas
