#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "flcc/channel.hpp"
#include "flcc/geometry.hpp"

namespace flcc {

enum class MacMode { Flcc, Baseline };

struct MacConfig {
    int contention_window = 16;  // initial backoff window, slots
    int max_retries = 4;         // collision retries before giving up
    double active_probability = 1.0;
    MacMode mode = MacMode::Flcc;

    void validate() const {
        if (contention_window < 1) throw InvalidParameter("mac: contention_window must be >= 1");
        if (max_retries < 0) throw InvalidParameter("mac: max_retries must be >= 0");
        if (active_probability < 0.0 || active_probability > 1.0)
            throw InvalidParameter("mac: active_probability must be in [0,1]");
    }
};

/// Per-round, per-node MAC result. success implies won_contention implies
/// attempted; success holds exactly when the node transmitted and SINR >= T.
struct TransmissionOutcome {
    int node_id = -1;
    int cell_id = -1;
    int channel = -1;  // channel used if the node transmitted, else -1
    bool attempted = false;
    bool won_contention = false;
    std::optional<double> sinr;
    bool success = false;
    int retries_used = 0;
};

struct ContentionResult {
    std::optional<int> winner;
    std::set<int> colliders;       // nodes that tied at the minimum at least once
    std::map<int, int> retries;    // retries consumed per node
};

/// Slotted contention with binary exponential backoff (window doubles on a
/// collision, capped at 1024). Nodes tying at the minimum slot collide and
/// redraw; a node that exhausts max_retries drops out of the round.
ContentionResult contend(const std::vector<int>& cell_nodes, const MacConfig& cfg,
                         std::mt19937_64& rng);

/// A node that acquired a channel this round.
struct Transmitter {
    int node_id = 0;
    int cell_id = 0;
    int channel = 0;
    int retries_used = 0;
};

/// Fading provider for a (transmitting node, receiving cell) pair.
using FadingFn = std::function<double(int tx_node, int rx_cell)>;

/// SINR resolution for a set of simultaneous transmitters: each transmitter is
/// received at its own cell server; co-channel transmitters in other cells
/// interfere. Distances are clamped below by cfg.min_distance. Deterministic
/// given the fading provider; simulate_round wraps it with random draws.
std::vector<TransmissionOutcome> resolve_transmissions(
    const std::vector<Transmitter>& transmitters, const std::vector<NodeSite>& nodes,
    const CellPlan& plan, const ChannelConfig& cfg, const FadingFn& fading);

/// One MAC round.
/// Flcc: active nodes contend per cell; the winner transmits on the cell's
/// planned channel; co-channel winners of other cells are its interferers.
/// Baseline: active nodes each pick one of num_channels channels uniformly at
/// random; two or more pickers of one channel inside one cell collide
/// outright, and every surviving same-channel transmitter interferes at every
/// other one's server.
std::vector<TransmissionOutcome> simulate_round(const std::vector<NodeSite>& nodes,
                                                const CellPlan& plan, const ChannelConfig& ch_cfg,
                                                const MacConfig& mac_cfg, std::mt19937_64& rng);

/// Node ids with success == true; its cardinality is the round's A.
std::set<int> successful_set(const std::vector<TransmissionOutcome>& outcomes);

/// successes / transmissions for one round (1 if nothing was transmitted).
double round_success_rate(const std::vector<TransmissionOutcome>& outcomes);

void append_mac_trace_csv(std::ostream& out, int round,
                          const std::vector<TransmissionOutcome>& outcomes);
void write_mac_trace_header(std::ostream& out);

}  // namespace flcc
