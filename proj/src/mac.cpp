#include "flcc/mac.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "flcc/csv.hpp"

namespace flcc {

namespace {

constexpr int kWindowCap = 1024;

double clamped_distance(double dx, double dy, double min_distance) {
    return std::max(std::hypot(dx, dy), min_distance);
}

}  // namespace

ContentionResult contend(const std::vector<int>& cell_nodes, const MacConfig& cfg,
                         std::mt19937_64& rng) {
    cfg.validate();
    ContentionResult result;
    struct Contender {
        int id;
        int window;
        int retries;
    };
    std::vector<Contender> active;
    for (int id : cell_nodes) active.push_back({id, cfg.contention_window, 0});
    std::sort(active.begin(), active.end(),
              [](const Contender& a, const Contender& b) { return a.id < b.id; });
    for (const Contender& c : active) result.retries[c.id] = 0;

    while (!active.empty()) {
        if (active.size() == 1) {
            result.winner = active.front().id;
            return result;
        }
        std::vector<int> slots(active.size());
        int min_slot = kWindowCap + 1;
        for (std::size_t i = 0; i < active.size(); ++i) {
            std::uniform_int_distribution<int> slot(0, active[i].window - 1);
            slots[i] = slot(rng);
            min_slot = std::min(min_slot, slots[i]);
        }
        std::vector<std::size_t> at_min;
        for (std::size_t i = 0; i < active.size(); ++i)
            if (slots[i] == min_slot) at_min.push_back(i);
        if (at_min.size() == 1) {
            result.winner = active[at_min.front()].id;
            return result;
        }
        // Collision: the tied nodes consume a retry and double their windows.
        std::vector<Contender> next;
        std::set<std::size_t> tied(at_min.begin(), at_min.end());
        for (std::size_t i = 0; i < active.size(); ++i) {
            Contender c = active[i];
            if (tied.count(i)) {
                result.colliders.insert(c.id);
                ++c.retries;
                result.retries[c.id] = c.retries;
                c.window = std::min(c.window * 2, kWindowCap);
                if (c.retries > cfg.max_retries) continue;  // gives up this round
            }
            next.push_back(c);
        }
        active = std::move(next);
    }
    return result;  // everyone exhausted their retries
}

std::vector<TransmissionOutcome> resolve_transmissions(
    const std::vector<Transmitter>& transmitters, const std::vector<NodeSite>& nodes,
    const CellPlan& plan, const ChannelConfig& cfg, const FadingFn& fading) {
    std::map<int, const NodeSite*> by_id;
    for (const NodeSite& n : nodes) by_id[n.id] = &n;

    std::vector<Transmitter> txs = transmitters;
    std::sort(txs.begin(), txs.end(),
              [](const Transmitter& a, const Transmitter& b) { return a.node_id < b.node_id; });

    std::vector<TransmissionOutcome> out;
    for (const Transmitter& victim : txs) {
        const NodeSite& vn = *by_id.at(victim.node_id);
        const Cell& server = plan.cell_by_id(victim.cell_id);
        LinkDraw target;
        target.fading = fading(victim.node_id, victim.cell_id);
        target.distance =
            clamped_distance(vn.x - server.cx, vn.y - server.cy, cfg.min_distance);
        std::vector<std::pair<LinkDraw, double>> interferers;
        for (const Transmitter& other : txs) {
            if (other.node_id == victim.node_id) continue;
            if (other.channel != victim.channel) continue;
            if (other.cell_id == victim.cell_id) continue;  // serialized by carrier sense
            const NodeSite& on = *by_id.at(other.node_id);
            LinkDraw link;
            link.fading = fading(other.node_id, victim.cell_id);
            link.distance =
                clamped_distance(on.x - server.cx, on.y - server.cy, cfg.min_distance);
            interferers.emplace_back(link, on.tx_power);
        }
        SinrSample s = compute_sinr(target, vn.tx_power, interferers, cfg);
        TransmissionOutcome o;
        o.node_id = victim.node_id;
        o.cell_id = victim.cell_id;
        o.channel = victim.channel;
        o.attempted = true;
        o.won_contention = true;
        o.sinr = s.sinr;
        o.success = s.sinr >= cfg.sinr_threshold;
        o.retries_used = victim.retries_used;
        out.push_back(o);
    }
    return out;
}

std::vector<TransmissionOutcome> simulate_round(const std::vector<NodeSite>& nodes,
                                                const CellPlan& plan, const ChannelConfig& ch_cfg,
                                                const MacConfig& mac_cfg, std::mt19937_64& rng) {
    mac_cfg.validate();
    std::vector<const NodeSite*> ordered;
    for (const NodeSite& n : nodes) ordered.push_back(&n);
    std::sort(ordered.begin(), ordered.end(),
              [](const NodeSite* a, const NodeSite* b) { return a->id < b->id; });

    // Activity draws first, in node order, so layouts paired across modes see
    // identical activity patterns for the same seed.
    std::map<int, bool> active;
    std::bernoulli_distribution is_active(mac_cfg.active_probability);
    for (const NodeSite* n : ordered)
        active[n->id] = mac_cfg.active_probability >= 1.0 ? true : is_active(rng);

    std::vector<Transmitter> transmitters;
    std::map<int, TransmissionOutcome> outcomes;
    for (const NodeSite* n : ordered) {
        TransmissionOutcome o;
        o.node_id = n->id;
        o.cell_id = n->cell_id;
        o.attempted = active[n->id];
        outcomes[n->id] = o;
    }

    if (mac_cfg.mode == MacMode::Flcc) {
        // Per-cell CSMA contention on the cell's planned channel.
        std::map<int, std::vector<int>> cell_actives;
        for (const NodeSite* n : ordered)
            if (active[n->id]) cell_actives[n->cell_id].push_back(n->id);
        for (auto& [cell_id, ids] : cell_actives) {
            ContentionResult c = contend(ids, mac_cfg, rng);
            int channel = plan.cell_by_id(cell_id).channel;
            for (int id : ids) outcomes[id].channel = channel;  // contended on it
            for (const auto& [id, retries] : c.retries) outcomes[id].retries_used = retries;
            if (c.winner)
                transmitters.push_back({*c.winner, cell_id, channel, c.retries.at(*c.winner)});
        }
    } else {
        // Baseline: every active node picks a channel uniformly at random and
        // transmits; same-channel pickers within one carrier-sense domain
        // (their cell) collide outright.
        int channels = std::max(plan.num_channels, 1);
        std::uniform_int_distribution<int> pick(0, channels - 1);
        std::map<std::pair<int, int>, std::vector<int>> groups;  // (cell, channel) -> nodes
        for (const NodeSite* n : ordered) {
            if (!active[n->id]) continue;
            int ch = pick(rng);
            outcomes[n->id].channel = ch;
            groups[{n->cell_id, ch}].push_back(n->id);
        }
        for (const auto& [key, ids] : groups) {
            if (ids.size() != 1) continue;  // outright collision, nobody transmits
            transmitters.push_back({ids.front(), key.first, key.second, 0});
        }
    }

    // Block fading: one draw per (transmitter, receiving cell) pair per round,
    // in a fixed order independent of container iteration.
    std::sort(transmitters.begin(), transmitters.end(),
              [](const Transmitter& a, const Transmitter& b) { return a.node_id < b.node_id; });
    std::exponential_distribution<double> exp1(1.0);
    std::map<std::pair<int, int>, double> fading;
    for (const Transmitter& victim : transmitters) {
        fading[{victim.node_id, victim.cell_id}] = exp1(rng);
        for (const Transmitter& other : transmitters) {
            if (other.node_id == victim.node_id || other.channel != victim.channel ||
                other.cell_id == victim.cell_id)
                continue;
            fading[{other.node_id, victim.cell_id}] = exp1(rng);
        }
    }
    auto fading_fn = [&fading](int tx, int rx_cell) { return fading.at({tx, rx_cell}); };
    for (const TransmissionOutcome& t :
         resolve_transmissions(transmitters, nodes, plan, ch_cfg, fading_fn)) {
        TransmissionOutcome& o = outcomes[t.node_id];
        int retries = o.retries_used;
        o = t;
        o.retries_used = std::max(retries, t.retries_used);
    }

    std::vector<TransmissionOutcome> result;
    for (const NodeSite* n : ordered) result.push_back(outcomes[n->id]);
    return result;
}

std::set<int> successful_set(const std::vector<TransmissionOutcome>& outcomes) {
    std::set<int> s;
    for (const TransmissionOutcome& o : outcomes)
        if (o.success) s.insert(o.node_id);
    return s;
}

double round_success_rate(const std::vector<TransmissionOutcome>& outcomes) {
    int transmissions = 0;
    int successes = 0;
    for (const TransmissionOutcome& o : outcomes) {
        if (o.won_contention) ++transmissions;
        if (o.success) ++successes;
    }
    return transmissions == 0 ? 1.0 : static_cast<double>(successes) / transmissions;
}

void write_mac_trace_header(std::ostream& out) {
    out << "round,node_id,cell_id,channel,attempted,won,sinr_db,success\n";
}

void append_mac_trace_csv(std::ostream& out, int round,
                          const std::vector<TransmissionOutcome>& outcomes) {
    for (const TransmissionOutcome& o : outcomes) {
        out << round << ',' << o.node_id << ',' << o.cell_id << ',' << o.channel << ','
            << (o.attempted ? 1 : 0) << ',' << (o.won_contention ? 1 : 0) << ',';
        if (o.sinr) out << fmt_double(linear_to_db(*o.sinr));
        out << ',' << (o.success ? 1 : 0) << '\n';
    }
}

}  // namespace flcc
