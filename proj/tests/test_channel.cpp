#include <cmath>
#include <random>

#include "doctest.h"
#include "flcc/channel.hpp"
#include "flcc/rng.hpp"

using namespace flcc;

namespace {

ChannelConfig base_cfg(double threshold_linear, double noise = 0.0) {
    ChannelConfig c;
    c.alpha = 4.0;
    c.noise_power = noise;
    c.sinr_threshold = threshold_linear;
    c.active_probability = 1.0;
    return c;
}

// Formula value for the acceptance grid point alpha=4, d=1, N0=0:
// exp(-lambda_a * pi * T^(1/2) * Gamma(1.5)*Gamma(0.5)), Gamma product = pi/2.
double reference_ps(double lambda_a, double t_linear) {
    return std::exp(-lambda_a * M_PI * std::sqrt(t_linear) * (M_PI / 2.0));
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("received power arithmetic") {
    CHECK(received_power(1.0, 1.0, 1.0, 4.0) == doctest::Approx(1.0));
    CHECK(received_power(2.0, 0.5, 2.0, 4.0) == doctest::Approx(0.0625));
    CHECK(received_power(5.0, 0.0, 3.0, 4.0) == 0.0);  // deep fade
    CHECK_THROWS_AS(received_power(1.0, 1.0, 0.0, 4.0), InvalidParameter);
    CHECK_THROWS_AS(received_power(1.0, 1.0, -1.0, 4.0), InvalidParameter);
}

TEST_CASE("sinr with no interference and no noise is infinite") {
    auto s = compute_sinr({1.0, 1.0, true}, 1.0, {}, base_cfg(1.0, 0.0));
    CHECK(std::isinf(s.sinr));
    CHECK(s.sinr >= 1e12);  // success for any finite threshold
}

TEST_CASE("sinr hand arithmetic") {
    // target P=1,h=1,d=1; one active interferer P=1,h=1,d=2; alpha=4, N0=0.
    auto s = compute_sinr({1.0, 1.0, true}, 1.0, {{{1.0, 2.0, true}, 1.0}}, base_cfg(1.0, 0.0));
    CHECK(s.sinr == doctest::Approx(16.0));
    // inactive interferer contributes nothing; N0 = 0.1 caps the ratio at 10.
    auto s2 =
        compute_sinr({1.0, 1.0, true}, 1.0, {{{1.0, 2.0, false}, 1.0}}, base_cfg(1.0, 0.1));
    CHECK(s2.sinr == doctest::Approx(10.0));
}

TEST_CASE("sinr is scale covariant") {
    std::mt19937_64 eng(4);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int i = 0; i < 200; ++i) {
        ChannelConfig cfg = base_cfg(1.0, u(eng));
        LinkDraw target{u(eng), u(eng), true};
        std::vector<std::pair<LinkDraw, double>> interferers = {
            {{u(eng), u(eng), true}, u(eng)}, {{u(eng), u(eng), i % 2 == 0}, u(eng)}};
        double c = u(eng) * 10.0;
        auto s1 = compute_sinr(target, 2.0, interferers, cfg);
        ChannelConfig scaled = cfg;
        scaled.noise_power *= c;
        auto scaled_interferers = interferers;
        for (auto& [link, power] : scaled_interferers) power *= c;
        auto s2 = compute_sinr(target, 2.0 * c, scaled_interferers, scaled);
        CHECK(s1.sinr == doctest::Approx(s2.sinr).epsilon(1e-12));
    }
}

TEST_CASE("analytic success probability approaches one as T vanishes") {
    CHECK(analytic_success_probability(0.01, base_cfg(1e-14), 1.0, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("analytic success probability at the reference point") {
    // alpha=4, d=1, T=1, N0=0, lambda_a=0.01: exp(-0.01*pi*(pi/2)) = 0.9518499...
    double ps = analytic_success_probability(0.01, base_cfg(1.0), 1.0, 1.0);
    CHECK(ps == doctest::Approx(0.951849807369).epsilon(1e-9));
    CHECK(ps == doctest::Approx(reference_ps(0.01, 1.0)).epsilon(1e-12));
}

TEST_CASE("analytic success probability rejects alpha <= 2") {
    ChannelConfig cfg = base_cfg(1.0);
    cfg.alpha = 2.0;
    CHECK_THROWS_AS(analytic_success_probability(0.01, cfg, 1.0, 1.0), InvalidParameter);
}

TEST_CASE("analytic curve is monotone decreasing in T, lambda, d and N0") {
    double prev = 1.0;
    for (double t_db = -10.0; t_db <= 20.0; t_db += 2.0) {
        double ps = analytic_success_probability(0.01, base_cfg(db_to_linear(t_db)), 1.0, 1.0);
        CHECK(ps < prev);
        prev = ps;
    }
    CHECK(analytic_success_probability(0.02, base_cfg(1.0), 1.0, 1.0) <
          analytic_success_probability(0.01, base_cfg(1.0), 1.0, 1.0));
    CHECK(analytic_success_probability(0.01, base_cfg(1.0), 2.0, 1.0) <
          analytic_success_probability(0.01, base_cfg(1.0), 1.0, 1.0));
    CHECK(analytic_success_probability(0.01, base_cfg(1.0, 0.5), 1.0, 1.0) <
          analytic_success_probability(0.01, base_cfg(1.0, 0.0), 1.0, 1.0));
}

TEST_CASE("monte carlo with no interferers and no noise always succeeds") {
    auto mc = monte_carlo_success_probability(0.0, base_cfg(1.0, 0.0), 1.0, 1.0, 500, 1);
    CHECK(mc.estimate == 1.0);
    CHECK(mc.std_error == 0.0);
}

TEST_CASE("monte carlo agrees with the analytic oracle at the reference point") {
    auto mc = monte_carlo_success_probability(0.01, base_cfg(1.0), 1.0, 1.0, 40000, 7);
    double expected = reference_ps(0.01, 1.0);
    CHECK(std::abs(mc.estimate - expected) <= 2.0 * mc.std_error + 1e-12);
}

TEST_CASE("huge threshold with noise drives success to zero") {
    auto mc = monte_carlo_success_probability(0.0, base_cfg(1e6, 0.01), 1.0, 1.0, 2000, 3);
    CHECK(mc.estimate < 0.01);
}

TEST_CASE("fading draws have unit mean") {
    std::mt19937_64 eng(8);
    std::exponential_distribution<double> fading(1.0);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += fading(eng);
    CHECK(std::abs(sum / n - 1.0) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("analytic and monte carlo agree across the acceptance grid") {
    // Reduced-trial version of the acceptance sweep; the acceptance suite
    // repeats this at 1e5 trials.
    for (double t_db : {-5.0, 0.0, 5.0, 10.0}) {
        for (double lambda : {1e-3, 1e-2}) {
            ChannelConfig cfg = base_cfg(db_to_linear(t_db));
            double analytic = analytic_success_probability(lambda, cfg, 1.0, 1.0);
            auto mc = monte_carlo_success_probability(lambda, cfg, 1.0, 1.0, 20000, 11);
            CHECK(std::abs(analytic - mc.estimate) <=
                  std::max(0.02, 3.0 * mc.std_error));
        }
    }
}

TEST_CASE("monte carlo thinning matches the analytic active intensity") {
    ChannelConfig cfg = base_cfg(db_to_linear(3.0));
    cfg.active_probability = 0.4;
    double analytic = analytic_success_probability(0.01 * 0.4, cfg, 1.0, 1.0);
    auto mc = monte_carlo_success_probability(0.01, cfg, 1.0, 1.0, 30000, 13);
    CHECK(std::abs(analytic - mc.estimate) <= std::max(0.02, 3.0 * mc.std_error));
}

TEST_CASE("monte carlo determinism") {
    auto a = monte_carlo_success_probability(0.01, base_cfg(1.0), 1.0, 1.0, 5000, 5);
    auto b = monte_carlo_success_probability(0.01, base_cfg(1.0), 1.0, 1.0, 5000, 5);
    CHECK(a.estimate == b.estimate);
}

TEST_CASE("capacity endpoints and arithmetic") {
    CHECK(csma_capacity(0.0, 0.7) == 0.0);
    CHECK(csma_capacity(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(csma_capacity(3.0, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("capacity is monotone in the success probability") {
    for (double t : {0.5, 1.0, 10.0})
        CHECK(csma_capacity(t, 0.8) >= csma_capacity(t, 0.5));
}

TEST_CASE("capacity sweep has an interior maximum") {
    // Grid search over T in [-10, 30] dB at lambda_a = 0.01.
    double best = -1.0;
    int best_idx = -1;
    int count = 0;
    for (double t_db = -10.0; t_db <= 30.0 + 1e-9; t_db += 1.0, ++count) {
        double t = db_to_linear(t_db);
        double ps = analytic_success_probability(0.01, base_cfg(t), 1.0, 1.0);
        double cap = csma_capacity(t, ps);
        if (cap > best) {
            best = cap;
            best_idx = count;
        }
    }
    CHECK(best_idx > 0);
    CHECK(best_idx < count - 1);
}

}  // TEST_SUITE
