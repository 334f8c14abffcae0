// Quick FD probe of layer and whole-net gradients in double precision.
#include <cstdio>
#include <cmath>
#include "xmas/reg_net.hpp"
#include "xmas/rng.hpp"
using namespace xmas;

template <typename Fwd>
double fd_check(std::vector<double>& params, std::vector<double>& grads, Fwd&& loss_fn, int nprobe, Rng& rng) {
    double worst = 0.0;
    for (int k = 0; k < nprobe; ++k) {
        std::size_t i = rng.below(params.size());
        const double h = 1e-5;
        const double orig = params[i];
        params[i] = orig + h; const double lp = loss_fn();
        params[i] = orig - h; const double lm = loss_fn();
        params[i] = orig;
        const double fd = (lp - lm) / (2 * h);
        const double an = grads[i];
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
        if (rel > worst) worst = rel;
    }
    return worst;
}

int main() {
    Rng rng(42);
    // conv3 stride1 + stride2 gradcheck via scalar loss sum(out*mask)
    for (int stride : {1, 2}) {
        nn::Conv3d<double> c(3, 4, 3, stride);
        c.init_he(rng);
        Tensor<double> x(3, {6, 5, 7});
        for (auto& v : x.v) v = rng.normal();
        Tensor<double> mask(4, c.out_dims(x.dims));
        for (auto& v : mask.v) v = rng.normal();
        auto loss = [&]() {
            auto out = c.forward(x, false);
            double s = 0;
            for (std::size_t i = 0; i < out.v.size(); ++i) s += out.v[i] * mask.v[i];
            return s;
        };
        c.zero_grad();
        auto out = c.forward(x, true);
        auto gin = c.backward(mask);
        // check weight grads
        double worst_w = fd_check(c.w, c.gw, loss, 40, rng);
        double worst_b = fd_check(c.b, c.gb, loss, 4, rng);
        double worst_x = fd_check(x.v, gin.v, loss, 40, rng);
        printf("conv stride %d: w %.2e b %.2e x %.2e\n", stride, worst_w, worst_b, worst_x);
    }
    // upsample gradcheck
    {
        nn::Upsample2x<double> up;
        Tensor<double> x(2, {4, 3, 5});
        for (auto& v : x.v) v = rng.normal();
        Tensor<double> mask(2, nn::Upsample2x<double>::out_dims(x.dims));
        for (auto& v : mask.v) v = rng.normal();
        auto loss = [&]() {
            auto out = up.forward(x, false);
            double s = 0;
            for (std::size_t i = 0; i < out.v.size(); ++i) s += out.v[i] * mask.v[i];
            return s;
        };
        up.forward(x, true);
        auto gin = up.backward(mask);
        printf("upsample: x %.2e\n", fd_check(x.v, gin.v, loss, 40, rng));
    }
    // whole reg net, loss = total_loss vs labels, grads wrt ~30 params
    {
        RegNetConfig cfg;
        cfg.input_grid = SpatialGrid(8, 8, 8);
        cfg.seed = 5;
        RegNetT<double> net;
        net.build(cfg);
        // give heads nonzero weights so fields are off-lattice
        Rng r2(9);
        for (auto& v : net.head_u.w) v = 0.05 * r2.normal();
        for (auto& v : net.head_v.w) v = 0.05 * r2.normal();

        Tensor<double> input(2, {8, 8, 8});
        for (auto& v : input.v) v = r2.normal();
        Tensor<double> oh_a(3, {8, 8, 8}), oh_t(3, {8, 8, 8});
        for (std::size_t i = 0; i < oh_a.plane(); ++i) {
            oh_a.v[r2.below(3) * oh_a.plane() + i] = 1.0;
            oh_t.v[r2.below(3) * oh_t.plane() + i] = 1.0;
        }
        std::vector<int> fg{1, 2};
        LossConfig lc;
        auto loss = [&]() {
            auto [u, v] = net.forward(input, false);
            return loss_kernels::total_loss_tensor<double>(oh_a, oh_t, u, v, lc, fg, nullptr,
                                                           nullptr).total;
        };
        net.zero_grad();
        auto [u, v] = net.forward(input, true);
        Tensor<double> gu(3, u.dims), gv(3, v.dims);
        loss_kernels::total_loss_tensor<double>(oh_a, oh_t, u, v, lc, fg, &gu, &gv);
        net.backward(gu, gv);
        auto blocks = net.params();
        double worst = 0;
        for (auto& blk : blocks) {
            double w = fd_check(*blk.w, *blk.g, loss, 3, rng);
            if (w > worst) worst = w;
        }
        printf("whole net params: %.2e\n", worst);
        // DDF-level loss gradients
        Tensor<double> du(3, {8,8,8}), dv(3, {8,8,8});
        for (auto& x : du.v) x = 0.2 + 0.25 * rng.uniform();
        for (auto& x : dv.v) x = -(0.2 + 0.25 * rng.uniform());
        Tensor<double> gdu(3, du.dims), gdv(3, dv.dims);
        loss_kernels::total_loss_tensor<double>(oh_a, oh_t, du, dv, lc, fg, &gdu, &gdv);
        auto loss2 = [&]() {
            return loss_kernels::total_loss_tensor<double>(oh_a, oh_t, du, dv, lc, fg, nullptr, nullptr).total;
        };
        printf("loss wrt U: %.2e  wrt V: %.2e\n", fd_check(du.v, gdu.v, loss2, 50, rng),
               fd_check(dv.v, gdv.v, loss2, 50, rng));
    }
    return 0;
}
