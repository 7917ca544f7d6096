// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include "backdrop/diffusion/schedule.hpp"

namespace backdrop::diffusion {

NoiseSchedule make_linear_schedule(int t_train, double beta_min, double beta_max) {
    if (t_train < 1) throw ValidationError("t_train must be >= 1");
    if (!(beta_min > 0.0 && beta_min < 1.0) || !(beta_max > 0.0 && beta_max < 1.0))
        throw ValidationError("betas must lie in (0,1)");
    if (beta_min > beta_max) throw ValidationError("beta_min must not exceed beta_max");

    NoiseSchedule s;
    s.betas.resize(static_cast<size_t>(t_train));
    s.alphas.resize(static_cast<size_t>(t_train));
    s.alpha_bars.resize(static_cast<size_t>(t_train));
    double accum = 1.0;
    for (int i = 0; i < t_train; ++i) {
        const double frac = t_train == 1 ? 0.0 : static_cast<double>(i) / (t_train - 1);
        const double beta = beta_min + frac * (beta_max - beta_min);
        s.betas[static_cast<size_t>(i)] = beta;
        s.alphas[static_cast<size_t>(i)] = 1.0 - beta;
        accum *= 1.0 - beta;
        s.alpha_bars[static_cast<size_t>(i)] = accum;
    }
    return s;
}

DdimGrid DdimGrid::even(int t_train, int t_sample) {
    if (t_sample < 1 || t_sample > t_train) throw ValidationError("grid length must be in [1, t_train]");
    DdimGrid g;
    g.steps.resize(static_cast<size_t>(t_sample));
    for (int i = 1; i <= t_sample; ++i) {
        g.steps[static_cast<size_t>(i - 1)] =
            static_cast<int>(static_cast<long>(i) * t_train / t_sample);
    }
    for (size_t i = 0; i < g.steps.size(); ++i) {
        if (g.steps[i] < 1 || (i > 0 && g.steps[i] <= g.steps[i - 1]))
            throw ValidationError("grid steps must be strictly increasing within [1, t_train]");
    }
    return g;
}

}  // namespace backdrop::diffusion
