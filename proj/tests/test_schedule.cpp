// Noise-schedule laws: closed-form examples, recursion, round trips, and the
// subsampled reverse trajectory.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "lvsr/schedule.hpp"
#include "lvsr/tensor.hpp"

using namespace lvsr;

TEST_CASE("linear schedule hits its endpoints", "[schedule]") {
    NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    REQUIRE(s.T == 1000);
    CHECK(s.beta.front() == Catch::Approx(1e-4).epsilon(1e-12));
    CHECK(s.beta.back() == Catch::Approx(0.02).epsilon(1e-12));
    for (double b : s.beta) {
        CHECK(b > 0.0);
        CHECK(b < 1.0);
    }
}

TEST_CASE("alpha_bar closed forms", "[schedule]") {
    NoiseSchedule two = NoiseSchedule::linear(2, 0.1, 0.1);
    REQUIRE(two.alpha_bar.size() == 2);
    CHECK(two.alpha_bar[0] == Catch::Approx(0.9).epsilon(1e-12));
    CHECK(two.alpha_bar[1] == Catch::Approx(0.81).epsilon(1e-12));

    NoiseSchedule one = NoiseSchedule::linear(1, 0.5, 0.5);
    REQUIRE(one.alpha_bar.size() == 1);
    CHECK(one.alpha_bar[0] == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("alpha_bar follows the running product and decreases", "[schedule]") {
    NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    double run = 1.0;
    for (int t = 0; t < s.T; ++t) {
        run *= 1.0 - s.beta[static_cast<size_t>(t)];
        CHECK(std::abs(s.alpha_bar[static_cast<size_t>(t)] - run) <= 1e-12 * run);
        if (t > 0) CHECK(s.alpha_bar[static_cast<size_t>(t)] < s.alpha_bar[static_cast<size_t>(t - 1)]);
        CHECK(s.ab(t) > 0.0);
        CHECK(s.ab(t) < 1.0);
    }
}

TEST_CASE("forward noising closed form", "[schedule]") {
    // alpha_bar(1) = 0.81 exactly, so a unit input with zero noise lands on 0.9
    NoiseSchedule s = NoiseSchedule::linear(2, 0.1, 0.1);
    Tensor z0 = Tensor::full({2, 2}, 1.0);
    Tensor eps = Tensor::zeros({2, 2});
    Tensor zt = s.q_sample(z0, eps, 1);
    for (double v : zt.data) CHECK(v == Catch::Approx(0.9).epsilon(1e-12));

    // with zero signal the output is the scaled noise
    Tensor zn = s.q_sample(eps, z0, 1);
    for (double v : zn.data) CHECK(v == Catch::Approx(std::sqrt(1.0 - 0.81)).epsilon(1e-12));
}

TEST_CASE("noising then inversion recovers the input", "[schedule]") {
    NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    Tensor z0 = testutil::rand_tensor({3, 4, 4}, 77);
    Tensor eps = testutil::rand_tensor({3, 4, 4}, 78);
    for (int t : {0, 1, 500, 999}) {
        Tensor zt = s.q_sample(z0, eps, t);
        Tensor rec = s.predict_z0(zt, eps, t);
        CHECK(max_abs_diff(rec, z0) < 1e-6);
    }
}

TEST_CASE("noised variance matches the mixing law", "[schedule]") {
    NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    const int n = 10000;
    Rng rng(424242);
    for (int t : {100, 900}) {
        double ab = s.ab(t);
        const double sigma0 = 1.3;  // signal drawn with this spread
        double sum = 0.0, sumsq = 0.0;
        Tensor z0({1}), eps({1});
        for (int i = 0; i < n; ++i) {
            z0.at(0) = rng.normal() * sigma0;
            eps.at(0) = rng.normal();
            double v = s.q_sample(z0, eps, t).at(0);
            sum += v;
            sumsq += v * v;
        }
        double mean = sum / n;
        double var = sumsq / n - mean * mean;
        double expected = ab * sigma0 * sigma0 + (1.0 - ab);
        CHECK(std::abs(var - expected) <= 0.05 * expected);
    }
}

TEST_CASE("reverse step recovers the clean latent from exact noise", "[schedule]") {
    NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    Tensor z0 = testutil::rand_tensor({2, 3, 3}, 91);
    Tensor eps = testutil::rand_tensor({2, 3, 3}, 92);
    int t = 700, t_prev = 350;
    Tensor zt = s.q_sample(z0, eps, t);
    NoiseSchedule::ReverseCoeffs rc = s.reverse_coeffs(t, t_prev);
    Tensor stepped(zt.shape);
    for (size_t i = 0; i < zt.data.size(); ++i) {
        double z0_hat = s.predict_z0(zt, eps, t).data[i];
        stepped.data[i] = rc.c_z0 * z0_hat + rc.c_zt * zt.data[i];
    }
    // the deterministic part must equal the posterior mean built from the
    // true z0, computed here from the textbook formula
    double ab_t = s.ab(t), ab_prev = s.ab(t_prev);
    double beta_t = 1.0 - (ab_t / ab_prev);
    for (size_t i = 0; i < zt.data.size(); ++i) {
        double mean = std::sqrt(ab_prev) * beta_t / (1.0 - ab_t) * z0.data[i] +
                      std::sqrt(1.0 - beta_t) * (1.0 - ab_prev) / (1.0 - ab_t) * zt.data[i];
        CHECK(std::abs(stepped.data[i] - mean) < 1e-5);
    }
}

TEST_CASE("final reverse step is deterministic and exact", "[schedule]") {
    // t_prev = -1 treats the target as fully denoised: coefficient on the
    // predicted z0 is 1, the rest vanishes
    NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    NoiseSchedule::ReverseCoeffs rc = s.reverse_coeffs(0, -1);
    CHECK(rc.c_z0 == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(rc.c_zt == Catch::Approx(0.0).margin(1e-12));
    CHECK(rc.sigma == 0.0);

    NoiseSchedule one = NoiseSchedule::linear(1, 0.5, 0.5);
    Tensor z0 = testutil::rand_tensor({5}, 93);
    Tensor eps = testutil::rand_tensor({5}, 94);
    Tensor z1 = one.q_sample(z0, eps, 0);
    Tensor rec = one.predict_z0(z1, eps, 0);
    NoiseSchedule::ReverseCoeffs last = one.reverse_coeffs(0, -1);
    for (size_t i = 0; i < z0.data.size(); ++i)
        CHECK(std::abs(last.c_z0 * rec.data[i] + last.c_zt * z1.data[i] - z0.data[i]) < 1e-9);
}

TEST_CASE("zero noise estimate at the origin stays at the origin", "[schedule]") {
    NoiseSchedule s = NoiseSchedule::linear(1000, 1e-4, 0.02);
    Tensor z = Tensor::zeros({4});
    Tensor eps_hat = Tensor::zeros({4});
    Tensor z0 = s.predict_z0(z, eps_hat, 500);
    NoiseSchedule::ReverseCoeffs rc = s.reverse_coeffs(500, 250);
    for (size_t i = 0; i < z.data.size(); ++i) CHECK(rc.c_z0 * z0.data[i] + rc.c_zt * z.data[i] == 0.0);
}

TEST_CASE("subsampled timestep ladder", "[schedule]") {
    std::vector<int> ts = subsample_timesteps(1000, 50);
    REQUIRE(ts.size() == 50);
    CHECK(ts.front() == 980);
    CHECK(ts.back() == 0);
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
        CHECK(ts[i] - ts[i + 1] == 20);
        CHECK(ts[i] > ts[i + 1]);
    }
    for (int t : ts) {
        CHECK(t >= 0);
        CHECK(t < 1000);
    }

    std::vector<int> full = subsample_timesteps(10, 10);
    REQUIRE(full.size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(full[static_cast<size_t>(i)] == 9 - i);

    std::vector<int> single = subsample_timesteps(10, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == 0);

    CHECK_THROWS_AS(subsample_timesteps(10, 11), Error);
    CHECK_THROWS_AS(subsample_timesteps(10, 0), Error);
}

TEST_CASE("schedule construction rejects bad ranges", "[schedule]") {
    CHECK_THROWS_AS(NoiseSchedule::linear(0, 1e-4, 0.02), Error);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.0, 0.02), Error);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 1e-4, 1.0), Error);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.02, 1e-4), Error);
}
