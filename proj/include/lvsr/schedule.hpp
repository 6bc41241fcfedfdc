// Forward-noising schedule and the coefficients for walking it backwards.
// Linear beta ramp; cumulative products are precomputed once.
#pragma once

#include <cmath>
#include <vector>

#include "lvsr/tensor.hpp"

namespace lvsr {

struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;       // [T]
    std::vector<double> alpha;      // [T], 1 - beta
    std::vector<double> alpha_bar;  // [T], running product of alpha

    static NoiseSchedule linear(int T, double beta_start = 1e-4, double beta_end = 0.02) {
        check(T >= 1, "schedule: T must be positive");
        check(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end, "schedule: bad beta range");
        NoiseSchedule s;
        s.T = T;
        s.beta.resize(static_cast<size_t>(T));
        s.alpha.resize(static_cast<size_t>(T));
        s.alpha_bar.resize(static_cast<size_t>(T));
        double run = 1.0;
        for (int t = 0; t < T; ++t) {
            double frac = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
            s.beta[static_cast<size_t>(t)] = beta_start + (beta_end - beta_start) * frac;
            s.alpha[static_cast<size_t>(t)] = 1.0 - s.beta[static_cast<size_t>(t)];
            run *= s.alpha[static_cast<size_t>(t)];
            s.alpha_bar[static_cast<size_t>(t)] = run;
        }
        return s;
    }

    double ab(int t) const {
        check(t >= 0 && t < T, "schedule: timestep out of range");
        return alpha_bar[static_cast<size_t>(t)];
    }

    // z_t = sqrt(ab_t) * z0 + sqrt(1 - ab_t) * eps
    Tensor q_sample(const Tensor& z0, const Tensor& eps, int t) const {
        check(z0.same_shape(eps), "q_sample: shape mismatch");
        double a = std::sqrt(ab(t));
        double b = std::sqrt(1.0 - ab(t));
        Tensor out = z0;
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * out.data[i] + b * eps.data[i];
        return out;
    }

    // z0_hat = (z_t - sqrt(1 - ab_t) * eps_hat) / sqrt(ab_t)
    Tensor predict_z0(const Tensor& zt, const Tensor& eps_hat, int t) const {
        check(zt.same_shape(eps_hat), "predict_z0: shape mismatch");
        double a = std::sqrt(ab(t));
        double b = std::sqrt(1.0 - ab(t));
        Tensor out = zt;
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = (out.data[i] - b * eps_hat.data[i]) / a;
        return out;
    }

    // posterior q(z_prev | z_t, z0) under the effective step t -> t_prev,
    // where t_prev == -1 denotes the clean endpoint (ab_prev = 1, sigma = 0)
    struct ReverseCoeffs {
        double c_z0 = 0.0;
        double c_zt = 0.0;
        double sigma = 0.0;
    };

    ReverseCoeffs reverse_coeffs(int t, int t_prev) const {
        check(t_prev < t, "reverse_coeffs: t_prev must precede t");
        double ab_t = ab(t);
        double ab_prev = t_prev < 0 ? 1.0 : ab(t_prev);
        double alpha_eff = ab_t / ab_prev;
        double beta_eff = 1.0 - alpha_eff;
        ReverseCoeffs rc;
        rc.c_z0 = std::sqrt(ab_prev) * beta_eff / (1.0 - ab_t);
        rc.c_zt = std::sqrt(alpha_eff) * (1.0 - ab_prev) / (1.0 - ab_t);
        double var = beta_eff * (1.0 - ab_prev) / (1.0 - ab_t);
        rc.sigma = var > 0.0 ? std::sqrt(var) : 0.0;
        return rc;
    }
};

// decreasing timestep ladder for a shortened reverse pass: t_k = k*T/steps
// for k = steps-1 .. 0, so the ladder always ends at t = 0
inline std::vector<int> subsample_timesteps(int T, int steps) {
    check(steps >= 1 && steps <= T, "subsample_timesteps: need 1 <= steps <= T");
    std::vector<int> out;
    out.reserve(static_cast<size_t>(steps));
    for (int k = steps - 1; k >= 0; --k)
        out.push_back(static_cast<int>((static_cast<int64_t>(k) * T) / steps));
    return out;
}

}  // namespace lvsr
