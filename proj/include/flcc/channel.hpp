#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "flcc/errors.hpp"

namespace flcc {

/// Physical-layer knobs. sinr_threshold is linear (the CLI converts from dB).
struct ChannelConfig {
    double alpha = 4.0;              // path-loss exponent, >= 2
    double noise_power = 1e-9;       // watts
    double sinr_threshold = 1.0;     // linear ratio
    double active_probability = 1.0; // P(node has an update to send this round)
    double min_distance = 1.0;       // near-field clamp for geometry-derived links

    void validate() const {
        if (alpha < 2.0) throw InvalidParameter("channel: alpha must be >= 2");
        if (noise_power < 0.0) throw InvalidParameter("channel: noise_power must be >= 0");
        if (sinr_threshold <= 0.0) throw InvalidParameter("channel: sinr_threshold must be > 0");
        if (active_probability < 0.0 || active_probability > 1.0)
            throw InvalidParameter("channel: active_probability must be in [0,1]");
        if (min_distance < 0.0) throw InvalidParameter("channel: min_distance must be >= 0");
    }
};

/// One link realization: unit-mean exponential power fading over a distance.
struct LinkDraw {
    double fading = 1.0;
    double distance = 1.0;
    bool active = true;
};

struct SinrSample {
    double signal = 0.0;
    double interference = 0.0;
    double sinr = 0.0;  // +inf when interference + noise == 0
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// P * h * d^(-alpha). Throws on non-positive distance.
double received_power(double tx_power, double fading, double distance, double alpha);

/// SINR at a receiver given the desired link and the co-channel interferers.
/// Interferers with active == false contribute nothing.
SinrSample compute_sinr(const LinkDraw& target, double target_tx_power,
                        const std::vector<std::pair<LinkDraw, double>>& interferers,
                        const ChannelConfig& cfg);

/// Closed-form success probability for a Rayleigh link of length d inside a
/// plane PPP of active interferers with equal transmit powers:
///   exp(-T d^a N0 / P) * exp(-lambda_a pi d^2 T^(2/a) G(1+2/a) G(1-2/a)).
/// Validated against the Monte Carlo estimator below; requires alpha > 2.
double analytic_success_probability(double active_intensity, const ChannelConfig& cfg,
                                    double link_distance, double tx_power);

struct McResult {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Empirical P(SINR >= T): interferers drawn as a PPP of intensity lambda on a
/// disk of radius 10*max(d, lambda^-1/2) around the receiver, thinned by the
/// active probability, with i.i.d. unit-mean exponential fading. Trials are
/// seeded in fixed-size blocks so the estimate is independent of execution
/// order, and the draws do not depend on T (the same seed gives a monotone
/// curve across thresholds).
McResult monte_carlo_success_probability(double lambda, const ChannelConfig& cfg,
                                         double link_distance, double tx_power, int trials,
                                         std::uint64_t rng_seed);

/// log2(1 + T) * P(SINR >= T), bits/s/Hz.
double csma_capacity(double sinr_threshold, double success_probability);

}  // namespace flcc
