#include <chrono>
#include <cstdio>
#include "xmas/reg_net.hpp"
#include "xmas/rng.hpp"
using namespace xmas;
using Clock = std::chrono::steady_clock;

template <typename F> double ms(F&& f, int reps) {
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) f();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

int main() {
    RegNetConfig cfg;
    cfg.input_grid = SpatialGrid(32, 32, 32);
    cfg.seed = 7;
    RegModel model = build_regnet(cfg);
    Rng rng(1);
    Tensor<float> input(2, {32,32,32});
    for (auto& x : input.v) x = (float)rng.normal();
    Tensor<float> oh_a(3, {32,32,32}), oh_t(3, {32,32,32});
    for (std::size_t i = 0; i < oh_a.plane(); ++i) {
        oh_a.v[(rng.below(3)) * oh_a.plane() + i] = 1.f;
        oh_t.v[(rng.below(3)) * oh_t.plane() + i] = 1.f;
    }
    std::vector<int> fg{1, 2};
    LossConfig lc;

    auto [u, v] = model.net.forward(input, false);
    printf("fwd(nokeep): %.1f ms\n", ms([&]{ auto r = model.net.forward(input, false); }, 10));
    printf("fwd(keep)+bwd: %.1f ms\n", ms([&]{
        model.net.zero_grad();
        auto [uu, vv] = model.net.forward(input, true);
        Tensor<float> gu(3, uu.dims), gv(3, vv.dims);
        gu.v[0] = 1; gv.v[0] = 1;
        model.net.backward(gu, gv);
    }, 10));
    printf("loss only: %.1f ms\n", ms([&]{
        Tensor<float> gu(3, u.dims), gv(3, v.dims);
        loss_kernels::total_loss_tensor<float>(oh_a, oh_t, u, v, lc, fg, &gu, &gv);
    }, 10));
    return 0;
}
