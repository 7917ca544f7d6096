// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "backdrop/diffusion/composite.hpp"
#include "backdrop/diffusion/sampler.hpp"

using namespace backdrop;
using namespace backdrop::diffusion;

namespace {

/// Independent long-double cumulative-product oracle for schedules.
std::vector<double> cumprod_oracle(const std::vector<double>& betas) {
    std::vector<double> out;
    long double acc = 1.0L;
    for (double b : betas) {
        acc *= static_cast<long double>(1.0 - b);
        out.push_back(static_cast<double>(acc));
    }
    return out;
}

/// Backend that always predicts the same noise tensor, ignoring all
/// conditioning. Under it the DDIM chain keeps one x0 invariant.
struct ConstantEpsBackend : DenoiserBackend<float> {
    Tensorf eps;

    explicit ConstantEpsBackend(Tensorf e) : eps(std::move(e)) {}

    nn::Var<float> predict(nn::Binder<float>&, nn::Var<float> z, int, const nn::Var<float>*, nn::Var<float>,
                           nn::Var<float>) const override {
        return z.tape->constant(eps);
    }
};

struct NonFiniteBackend : DenoiserBackend<float> {
    nn::Var<float> predict(nn::Binder<float>&, nn::Var<float> z, int, const nn::Var<float>*, nn::Var<float>,
                           nn::Var<float>) const override {
        Tensorf bad(z.tape->value(z).shape());
        bad[0] = std::numeric_limits<float>::quiet_NaN();
        return z.tape->constant(bad);
    }
};

InpaintConditioning<float> tiny_conditioning(int ch = 2, int side = 4) {
    Rng rng(99);
    InpaintConditioning<float> cond;
    cond.image_latent = Tensorf::randn({1, ch, side, side}, rng);
    cond.mask_latent = Tensorf::full({1, 1, side, side}, 1.0f);
    cond.text_embedding = Tensorf::randn({1, 3, 4}, rng);
    cond.has_text = true;
    return cond;
}

}  // namespace

TEST_CASE("linear schedule matches closed forms") {
    SUBCASE("constant beta 0.5 gives powers of one half") {
        const auto s = make_linear_schedule(4, 0.5, 0.5);
        const std::vector<double> expected{0.5, 0.25, 0.125, 0.0625};
        REQUIRE(s.alpha_bars.size() == 4);
        for (size_t i = 0; i < 4; ++i) CHECK(s.alpha_bars[i] == doctest::Approx(expected[i]).epsilon(1e-15));
        CHECK(s.alpha_bar(0) == 1.0);
    }
    SUBCASE("single step") {
        const auto s = make_linear_schedule(1, 0.1, 0.1);
        REQUIRE(s.alpha_bars.size() == 1);
        CHECK(s.alpha_bars[0] == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("production schedule decays below 1e-4 and is strictly decreasing") {
        const auto s = make_linear_schedule(1000, 1e-4, 0.02);
        CHECK(s.alpha_bars.back() < 1e-4);
        const auto oracle = cumprod_oracle(s.betas);
        for (size_t i = 0; i < s.alpha_bars.size(); ++i) {
            CHECK(std::fabs(s.alpha_bars[i] - oracle[i]) / oracle[i] < 1e-12);
            if (i > 0) CHECK(s.alpha_bars[i] < s.alpha_bars[i - 1]);
        }
    }
    SUBCASE("random schedules agree with the cumprod oracle") {
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            const int t = rng.uniform_int(1, 300);
            const double lo = 1e-5 + rng.uniform() * 0.4;
            const double hi = lo + rng.uniform() * (0.95 - lo);
            const auto s = make_linear_schedule(t, lo, hi);
            const auto oracle = cumprod_oracle(s.betas);
            for (size_t i = 0; i < s.alpha_bars.size(); ++i) {
                CHECK(std::fabs(s.alpha_bars[i] - oracle[i]) / oracle[i] < 1e-12);
                CHECK(s.betas[i] > 0.0);
                CHECK(s.betas[i] < 1.0);
                CHECK(s.alphas[i] > 0.0);
                CHECK(s.alphas[i] < 1.0);
                if (i > 0) CHECK(s.alpha_bars[i] < s.alpha_bars[i - 1]);
            }
        }
    }
    SUBCASE("rejects invalid parameters") {
        CHECK_THROWS_AS(make_linear_schedule(0, 0.1, 0.2), ValidationError);
        CHECK_THROWS_AS(make_linear_schedule(10, 0.0, 0.2), ValidationError);
        CHECK_THROWS_AS(make_linear_schedule(10, 0.1, 1.0), ValidationError);
        CHECK_THROWS_AS(make_linear_schedule(10, 0.3, 0.2), ValidationError);
    }
}

TEST_CASE("forward_noise closed forms") {
    const auto s = make_linear_schedule(1, 0.75, 0.75);  // alpha_bar_1 = 0.25
    SUBCASE("zero noise keeps the scaled signal") {
        Tensorf x0({4}, {1.f, 2.f, -1.f, 0.5f});
        Tensorf eps({4});
        const auto out = forward_noise(x0, 1, eps, s);
        for (size_t i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(0.5f * x0[i]).epsilon(1e-6));
    }
    SUBCASE("zero signal keeps the scaled noise") {
        Tensorf x0({3});
        Tensorf eps({3}, {1.f, -2.f, 3.f});
        const auto out = forward_noise(x0, 1, eps, s);
        for (size_t i = 0; i < 3; ++i)
            CHECK(out[i] == doctest::Approx(std::sqrt(0.75) * eps[i]).epsilon(1e-6));
    }
    SUBCASE("scalar case") {
        Tensorf x0({1}, {1.f});
        Tensorf eps({1}, {1.f});
        const auto out = forward_noise(x0, 1, eps, s);
        CHECK(out[0] == doctest::Approx(0.5 + std::sqrt(0.75)).epsilon(1e-6));
        CHECK(out[0] == doctest::Approx(1.3660254).epsilon(1e-6));
    }
    SUBCASE("shape mismatch rejected") {
        CHECK_THROWS_AS(forward_noise(Tensorf({2}), 1, Tensorf({3}), s), ValidationError);
        CHECK_THROWS_AS(forward_noise(Tensorf({2}), 2, Tensorf({2}), s), ValidationError);
    }
}

TEST_CASE("cfg_combine identities and arithmetic") {
    Rng rng(17);
    SUBCASE("lambda reductions are exact") {
        for (int trial = 0; trial < 100; ++trial) {
            const Tensorf u = Tensorf::randn({2, 3, 4}, rng);
            const Tensorf c = Tensorf::randn({2, 3, 4}, rng);
            const auto at0 = cfg_combine(u, c, 0.0f);
            const auto at1 = cfg_combine(u, c, 1.0f);
            CHECK(std::memcmp(at0.data(), u.data(), u.size() * sizeof(float)) == 0);
            CHECK(std::memcmp(at1.data(), c.data(), c.size() * sizeof(float)) == 0);
        }
    }
    SUBCASE("equal branches are a fixed point for any lambda") {
        for (int trial = 0; trial < 100; ++trial) {
            const Tensorf a = Tensorf::randn({3, 5}, rng);
            const float lambda = static_cast<float>(rng.uniform() * 20.0 - 5.0);
            const auto out = cfg_combine(a, a, lambda);
            CHECK(std::memcmp(out.data(), a.data(), a.size() * sizeof(float)) == 0);
        }
    }
    SUBCASE("stock guidance-scale scalar") {
        Tensorf u({1}, {0.2f});
        Tensorf c({1}, {0.4f});
        CHECK(cfg_combine(u, c, 7.5f)[0] == doctest::Approx(1.7).epsilon(1e-6));
    }
    SUBCASE("linear in both arguments") {
        const float lambda = 3.25f;
        const Tensorf a1 = Tensorf::randn({4, 4}, rng), a2 = Tensorf::randn({4, 4}, rng);
        const Tensorf b1 = Tensorf::randn({4, 4}, rng), b2 = Tensorf::randn({4, 4}, rng);
        const float al = 0.6f, be = -1.2f;
        Tensorf am({4, 4}), bm({4, 4});
        for (size_t i = 0; i < am.size(); ++i) {
            am[i] = al * a1[i] + be * a2[i];
            bm[i] = al * b1[i] + be * b2[i];
        }
        const auto mixed = cfg_combine(am, bm, lambda);
        const auto c1 = cfg_combine(a1, b1, lambda);
        const auto c2 = cfg_combine(a2, b2, lambda);
        for (size_t i = 0; i < mixed.size(); ++i)
            CHECK(mixed[i] == doctest::Approx(al * c1[i] + be * c2[i]).epsilon(1e-4));
    }
    SUBCASE("shape mismatch rejected") {
        CHECK_THROWS_AS(cfg_combine(Tensorf({2}), Tensorf({3}), 1.0f), ValidationError);
    }
}

TEST_CASE("ddim_step formula") {
    // Schedule with alpha_bar(1) = 0.64, alpha_bar(2) = 0.25.
    NoiseSchedule s;
    s.betas = {0.36, 0.609375};
    s.alphas = {0.64, 0.390625};
    s.alpha_bars = {0.64, 0.25};
    SUBCASE("consistent epsilon reproduces the planted x0 direction") {
        Rng rng(3);
        const Tensorf x0 = Tensorf::randn({2, 2}, rng);
        const Tensorf eps = Tensorf::randn({2, 2}, rng);
        Tensorf z({2, 2});
        for (size_t i = 0; i < z.size(); ++i)
            z[i] = static_cast<float>(std::sqrt(0.25) * x0[i] + std::sqrt(0.75) * eps[i]);
        const auto out = ddim_step(z, eps, 2, 1, s);
        for (size_t i = 0; i < out.size(); ++i)
            CHECK(out[i] ==
                  doctest::Approx(std::sqrt(0.64) * x0[i] + std::sqrt(0.36) * eps[i]).epsilon(1e-5));
    }
    SUBCASE("t_prev = 0 returns the x0 prediction") {
        Rng rng(4);
        const Tensorf z = Tensorf::randn({3}, rng);
        const Tensorf eps = Tensorf::randn({3}, rng);
        const auto out = ddim_step(z, eps, 2, 0, s);
        for (size_t i = 0; i < out.size(); ++i) {
            const double x0p = (z[i] - std::sqrt(0.75) * eps[i]) / std::sqrt(0.25);
            CHECK(out[i] == doctest::Approx(x0p).epsilon(1e-5));
        }
    }
    SUBCASE("hand-evaluated scalar") {
        Tensorf z({1}, {1.0f});
        Tensorf eps({1}, {0.5f});
        const auto out = ddim_step(z, eps, 2, 1, s);
        const double x0p = (1.0 - 0.5 * std::sqrt(0.75)) / 0.5;
        CHECK(out[0] == doctest::Approx(0.8 * x0p + 0.6 * 0.5).epsilon(1e-6));
        CHECK(out[0] == doctest::Approx(1.2071797).epsilon(1e-6));
    }
    SUBCASE("ordering and shape validation") {
        CHECK_THROWS_AS(ddim_step(Tensorf({1}), Tensorf({1}), 1, 1, s), ValidationError);
        CHECK_THROWS_AS(ddim_step(Tensorf({1}), Tensorf({1}), 1, 2, s), ValidationError);
        CHECK_THROWS_AS(ddim_step(Tensorf({1}), Tensorf({2}), 2, 1, s), ValidationError);
    }
    SUBCASE("tape route agrees with the plain route") {
        Rng rng(6);
        const Tensorf z = Tensorf::randn({2, 3}, rng);
        const Tensorf eps = Tensorf::randn({2, 3}, rng);
        const auto plain = ddim_step(z, eps, 2, 1, s);
        nn::Tape<float> tape;
        const auto var = ddim_step(tape.constant(z), tape.constant(eps), 2, 1, s);
        const Tensorf& v = tape.value(var);
        for (size_t i = 0; i < v.size(); ++i) CHECK(v[i] == doctest::Approx(plain[i]).epsilon(1e-6));
    }
}

TEST_CASE("ddim grid construction") {
    const auto g = DdimGrid::even(1000, 20);
    REQUIRE(g.length() == 20);
    CHECK(g.steps.front() == 50);
    CHECK(g.steps.back() == 1000);
    for (size_t i = 1; i < g.steps.size(); ++i) CHECK(g.steps[i] > g.steps[i - 1]);
    CHECK(DdimGrid::even(1000, 1).steps == std::vector<int>{1000});
    CHECK_THROWS_AS(DdimGrid::even(10, 11), ValidationError);
    CHECK_THROWS_AS(DdimGrid::even(10, 0), ValidationError);
}

TEST_CASE("sampling determinism and the consistent-eps oracle") {
    const auto schedule = make_linear_schedule(1000, 1e-4, 0.02);
    auto cond = tiny_conditioning();
    Rng erng(123);
    const Tensorf planted_eps = Tensorf::randn(cond.image_latent.shape(), erng);
    const ConstantEpsBackend oracle(planted_eps);
    GuidanceConfig guide{7.5f, 1.0f};

    SUBCASE("byte-identical trajectories for identical inputs") {
        const auto a = sample(oracle, cond, DdimGrid::even(1000, 20), guide, schedule, 42);
        const auto b = sample(oracle, cond, DdimGrid::even(1000, 20), guide, schedule, 42);
        REQUIRE(a.trajectory.size() == b.trajectory.size());
        for (size_t i = 0; i < a.trajectory.size(); ++i) {
            CHECK(a.trajectory[i].timestep_index == b.trajectory[i].timestep_index);
            CHECK(std::memcmp(a.trajectory[i].values.data(), b.trajectory[i].values.data(),
                              a.trajectory[i].values.size() * sizeof(float)) == 0);
        }
        const auto c = sample(oracle, cond, DdimGrid::even(1000, 20), guide, schedule, 43);
        CHECK(std::memcmp(a.final_latent.data(), c.final_latent.data(),
                          a.final_latent.size() * sizeof(float)) != 0);
    }

    SUBCASE("oracle reconstruction for every grid length") {
        for (int len : {1, 5, 10, 20}) {
            const auto grid = DdimGrid::even(1000, len);
            const auto res = sample(oracle, cond, grid, guide, schedule, 42);
            // The start latent plus the constant eps pin down the implied x0.
            const Tensorf& z_start = res.trajectory.front().values;
            const double abar = schedule.alpha_bar(grid.steps.back());
            double err2 = 0.0, ref2 = 0.0;
            for (size_t i = 0; i < z_start.size(); ++i) {
                const double x0 =
                    (z_start[i] - std::sqrt(1.0 - abar) * planted_eps[i]) / std::sqrt(abar);
                const double d = res.final_latent[i] - x0;
                err2 += d * d;
                ref2 += x0 * x0;
            }
            CHECK(std::sqrt(err2 / ref2) <= 1e-6);
            CHECK(res.trajectory.size() == static_cast<size_t>(len) + 1);
            CHECK(res.trajectory.back().timestep_index == 0);
        }
    }

    SUBCASE("strength traverses the advertised number of transitions") {
        GuidanceConfig half{7.5f, 0.5f};
        const auto res = sample(oracle, cond, DdimGrid::even(1000, 20), half, schedule, 7);
        CHECK(res.trajectory.size() == 11);  // ceil(0.5*20) transitions + start
        CHECK(res.trajectory.front().timestep_index == 10);
    }

    SUBCASE("non-finite denoiser output raises with the timestep") {
        const NonFiniteBackend bad;
        try {
            sample(bad, cond, DdimGrid::even(1000, 20), guide, schedule, 42);
            FAIL("expected NumericalError");
        } catch (const NumericalError& e) {
            CHECK(e.where() == 1000);  // first transition starts at the top timestep
        }
    }

    SUBCASE("guidance config validation") {
        CHECK_THROWS_AS(sample(oracle, cond, DdimGrid::even(1000, 20), GuidanceConfig{-1.0f, 1.0f},
                               schedule, 1),
                        ValidationError);
        CHECK_THROWS_AS(sample(oracle, cond, DdimGrid::even(1000, 20), GuidanceConfig{1.0f, 0.0f},
                               schedule, 1),
                        ValidationError);
    }
}

TEST_CASE("composite selects per pixel") {
    Rng rng(31);
    const Image original = Tensorf::randn({3, 4, 4}, rng);
    const Image generated = Tensorf::randn({3, 4, 4}, rng);
    cond::ObjectMask ones;
    ones.values = Tensor<uint8_t>::full({4, 4}, 1);
    cond::ObjectMask zeros;
    zeros.values = Tensor<uint8_t>::zeros({4, 4});
    SUBCASE("all-ones mask returns the original exactly") {
        const auto out = composite(original, generated, ones);
        CHECK(std::memcmp(out.data(), original.data(), out.size() * sizeof(float)) == 0);
    }
    SUBCASE("all-zeros mask returns the generated exactly") {
        const auto out = composite(original, generated, zeros);
        CHECK(std::memcmp(out.data(), generated.data(), out.size() * sizeof(float)) == 0);
    }
    SUBCASE("mixed mask selects per pixel") {
        cond::ObjectMask mixed;
        mixed.values = Tensor<uint8_t>::zeros({4, 4});
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) mixed.values[static_cast<size_t>(y) * 4 + x] = (x + y) % 2;
        const auto out = composite(original, generated, mixed);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x) {
                    const float expect =
                        mixed.values[static_cast<size_t>(y) * 4 + x] ? original.at(c, y, x) : generated.at(c, y, x);
                    CHECK(out.at(c, y, x) == expect);
                }
    }
    SUBCASE("shape validation") {
        CHECK_THROWS_AS(composite(original, Tensorf::zeros({3, 4, 5}), ones), ValidationError);
        cond::ObjectMask small;
        small.values = Tensor<uint8_t>::full({2, 2}, 1);
        CHECK_THROWS_AS(composite(original, generated, small), ValidationError);
    }
}
