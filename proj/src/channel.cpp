#include "flcc/channel.hpp"

#include <cmath>
#include <future>
#include <random>
#include <thread>

#include "flcc/rng.hpp"

namespace flcc {

double received_power(double tx_power, double fading, double distance, double alpha) {
    if (distance <= 0.0)
        throw InvalidParameter("received_power: distance must be > 0");
    return tx_power * fading * std::pow(distance, -alpha);
}

SinrSample compute_sinr(const LinkDraw& target, double target_tx_power,
                        const std::vector<std::pair<LinkDraw, double>>& interferers,
                        const ChannelConfig& cfg) {
    SinrSample s;
    s.signal = received_power(target_tx_power, target.fading, target.distance, cfg.alpha);
    for (const auto& [link, power] : interferers) {
        if (!link.active) continue;
        s.interference += received_power(power, link.fading, link.distance, cfg.alpha);
    }
    double denom = s.interference + cfg.noise_power;
    s.sinr = denom > 0.0 ? s.signal / denom : std::numeric_limits<double>::infinity();
    return s;
}

double analytic_success_probability(double active_intensity, const ChannelConfig& cfg,
                                    double link_distance, double tx_power) {
    if (cfg.alpha <= 2.0)
        throw InvalidParameter(
            "analytic_success_probability: alpha must be > 2 (interference integral diverges)");
    if (active_intensity < 0.0)
        throw InvalidParameter("analytic_success_probability: active_intensity must be >= 0");
    if (link_distance <= 0.0 || tx_power <= 0.0)
        throw InvalidParameter("analytic_success_probability: distance and power must be > 0");
    const double T = cfg.sinr_threshold;
    const double a = cfg.alpha;
    double noise_term =
        std::exp(-T * std::pow(link_distance, a) * cfg.noise_power / tx_power);
    double gamma_factor = std::tgamma(1.0 + 2.0 / a) * std::tgamma(1.0 - 2.0 / a);
    double interference_term = std::exp(-active_intensity * M_PI * link_distance *
                                        link_distance * std::pow(T, 2.0 / a) * gamma_factor);
    return noise_term * interference_term;
}

McResult monte_carlo_success_probability(double lambda, const ChannelConfig& cfg,
                                         double link_distance, double tx_power, int trials,
                                         std::uint64_t rng_seed) {
    if (trials < 1)
        throw InvalidParameter("monte_carlo_success_probability: trials must be >= 1");
    if (lambda < 0.0)
        throw InvalidParameter("monte_carlo_success_probability: lambda must be >= 0");
    if (link_distance <= 0.0)
        throw InvalidParameter("monte_carlo_success_probability: link_distance must be > 0");

    double radius = 10.0 * link_distance;
    if (lambda > 0.0) radius = std::max(radius, 10.0 / std::sqrt(lambda));
    const double mean_count = lambda * M_PI * radius * radius;
    const double T = cfg.sinr_threshold;

    // Per-block sub-streams keep the estimate independent of execution order,
    // so blocks can run on any number of workers and merge deterministically.
    constexpr int kBlock = 4096;
    auto run_block = [&](int start) {
        auto eng = make_engine(rng_seed, {kStreamMonteCarlo,
                                          static_cast<std::uint64_t>(start / kBlock)});
        std::exponential_distribution<double> fading(1.0);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        int block_end = std::min(trials, start + kBlock);
        long hits = 0;
        for (int t = start; t < block_end; ++t) {
            double signal =
                tx_power * fading(eng) * std::pow(link_distance, -cfg.alpha);
            double interference = 0.0;
            if (mean_count > 0.0) {
                std::poisson_distribution<int> count(mean_count);
                int n = count(eng);
                for (int i = 0; i < n; ++i) {
                    double u = uni(eng);
                    double r = radius * std::sqrt(u);
                    double h = fading(eng);
                    bool active = cfg.active_probability >= 1.0 ||
                                  uni(eng) < cfg.active_probability;
                    if (!active) continue;
                    interference += tx_power * h * std::pow(r, -cfg.alpha);
                }
            }
            double denom = interference + cfg.noise_power;
            double sinr =
                denom > 0.0 ? signal / denom : std::numeric_limits<double>::infinity();
            if (sinr >= T) ++hits;
        }
        return hits;
    };

    long successes = 0;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    if (trials <= kBlock || workers == 1) {
        for (int start = 0; start < trials; start += kBlock) successes += run_block(start);
    } else {
        std::vector<std::future<long>> pending;
        auto drain = [&]() {
            for (auto& f : pending) successes += f.get();
            pending.clear();
        };
        for (int start = 0; start < trials; start += kBlock) {
            pending.push_back(std::async(std::launch::async, run_block, start));
            if (pending.size() >= workers) drain();
        }
        drain();
    }
    McResult res;
    res.estimate = static_cast<double>(successes) / trials;
    res.std_error = std::sqrt(res.estimate * (1.0 - res.estimate) / trials);
    return res;
}

double csma_capacity(double sinr_threshold, double success_probability) {
    if (sinr_threshold < 0.0)
        throw InvalidParameter("csma_capacity: threshold must be >= 0");
    if (success_probability < 0.0 || success_probability > 1.0)
        throw InvalidParameter("csma_capacity: success_probability must be in [0,1]");
    return std::log2(1.0 + sinr_threshold) * success_probability;
}

}  // namespace flcc
