#include "flcc/federate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>

#include "flcc/csv.hpp"
#include "flcc/rng.hpp"

namespace flcc {

namespace {

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 1.0;  // nothing to oppose
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> mean_gradient(const std::vector<LocalUpdate>& updates) {
    std::vector<double> mean(updates.front().gradient.size(), 0.0);
    for (const LocalUpdate& u : updates) {
        if (u.gradient.size() != mean.size())
            throw InvalidParameter("mean_gradient: gradient length mismatch");
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += u.gradient[i];
    }
    for (double& x : mean) x /= updates.size();
    return mean;
}

}  // namespace

std::vector<double> normalize_trust(const std::vector<double>& scores) {
    std::vector<double> w(scores.size(), 0.0);
    if (scores.empty()) return w;
    double total = 0.0;
    for (double q : scores) {
        if (q < 0.0) throw InvalidParameter("normalize_trust: scores must be >= 0");
        total += q;
    }
    if (total <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / scores.size());
        return w;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) w[i] = scores[i] / total;
    return w;
}

ModelParams aggregate(const std::vector<LocalUpdate>& updates,
                      const std::vector<double>& weights) {
    if (updates.empty()) throw InvalidParameter("aggregate: no participants");
    if (updates.size() != weights.size())
        throw InvalidParameter("aggregate: weights/updates size mismatch");
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-6)
        throw InvalidParameter("aggregate: weights must sum to 1");
    const ModelArch& arch = updates.front().params.arch;
    ModelParams out;
    out.arch = arch;
    out.values.assign(updates.front().params.values.size(), 0.0);
    for (std::size_t u = 0; u < updates.size(); ++u) {
        if (!(updates[u].params.arch == arch))
            throw InvalidParameter("aggregate: mismatched architectures");
        const std::vector<double>& v = updates[u].params.values;
        if (v.size() != out.values.size())
            throw InvalidParameter("aggregate: parameter length mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) out.values[i] += weights[u] * v[i];
    }
    return out;
}

void update_trust(TrustState& trust, const std::vector<LocalUpdate>& updates,
                  const std::vector<double>& aggregate_gradient,
                  const LabeledDataset& validation_set, const FederationConfig& cfg) {
    if (updates.empty()) return;
    std::vector<double> losses;
    losses.reserve(updates.size());
    for (const LocalUpdate& u : updates)
        losses.push_back(evaluate(u.params, validation_set).loss);
    std::vector<double> sorted = losses;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[(sorted.size() - 1) / 2];

    for (std::size_t i = 0; i < updates.size(); ++i) {
        int id = updates[i].node_id;
        if (trust.blacklisted.count(id)) continue;  // pinned
        bool aligned = cosine(updates[i].gradient, aggregate_gradient) >= 0.0;
        bool validates = losses[i] <= 1.10 * median + 1e-12;
        double reward = (aligned && validates) ? 1.0 : 0.0;
        double& q = trust.q[id];
        q = q + cfg.trust_learning_rate * (reward - q);
        if (q < cfg.blacklist_threshold) trust.blacklisted.insert(id);
    }
}

bool check_convergence(const std::vector<LocalUpdate>& updates, double epsilon) {
    if (updates.empty()) return false;  // no evidence
    return l2_norm(mean_gradient(updates)) <= epsilon;
}

ModelParams cloud_blend(const ModelParams& cell_model, const ModelParams& cloud_model,
                        double blend) {
    if (!(cell_model.arch == cloud_model.arch) ||
        cell_model.values.size() != cloud_model.values.size())
        throw InvalidParameter("cloud_blend: mismatched architectures");
    if (blend < 0.0 || blend > 1.0) throw InvalidParameter("cloud_blend: blend must be in [0,1]");
    ModelParams out = cell_model;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = blend * cell_model.values[i] + (1.0 - blend) * cloud_model.values[i];
    return out;
}

FederationResult run_federation(const std::vector<NodeSite>& nodes, const CellPlan& plan,
                                const ChannelConfig& ch_cfg, const MacConfig& mac_cfg,
                                const FederationConfig& fed_cfg, const ModelArch& arch,
                                const SgdConfig& sgd_cfg,
                                const std::map<int, LabeledDataset>& node_data,
                                const LabeledDataset& test_set, const AttackSpec& attack,
                                std::uint64_t rng_seed) {
    fed_cfg.validate();
    ch_cfg.validate();
    mac_cfg.validate();
    arch.validate();
    std::vector<const NodeSite*> ordered;
    for (const NodeSite& n : nodes) ordered.push_back(&n);
    std::sort(ordered.begin(), ordered.end(),
              [](const NodeSite* a, const NodeSite* b) { return a->id < b->id; });
    for (const NodeSite* n : ordered)
        if (!node_data.count(n->id))
            throw InvalidParameter("run_federation: node " + std::to_string(n->id) +
                                   " has no local dataset");

    const bool two_level = fed_cfg.hierarchy == Hierarchy::CellPlusCloud;
    ModelParams global = init_model(arch, splitmix64(splitmix64(rng_seed) ^ kStreamInit));
    std::map<int, ModelParams> cell_models;
    if (two_level)
        for (const Cell& c : plan.cells) cell_models[c.id] = global;
    ModelParams cloud = global;

    TrustState trust;
    for (const NodeSite* n : ordered) trust.q[n->id] = fed_cfg.trust_initial;

    LabeledDataset eval_set =
        fed_cfg.eval_samples > 0 ? test_set.head(fed_cfg.eval_samples) : test_set;
    LabeledDataset validation_set =
        fed_cfg.validation_samples > 0 ? test_set.head(fed_cfg.validation_samples) : test_set;

    FederationResult result;
    result.final_model = global;

    for (int round = 1; round <= fed_cfg.max_rounds; ++round) {
        // Local training on every node; contention losers and SINR failures
        // train too and discard the unsent update next round. Nodes train in
        // parallel: each owns an RNG sub-stream keyed by (seed, node, round),
        // and results merge in node order, so the fan-out cannot change them.
        auto train_node = [&](const NodeSite* n) {
            const ModelParams& start = two_level ? cell_models.at(n->cell_id) : global;
            auto eng = make_engine(rng_seed, {kStreamTrain, std::uint64_t(n->id),
                                              std::uint64_t(round)});
            LocalUpdate upd = local_train(start, node_data.at(n->id), sgd_cfg, eng);
            upd.node_id = n->id;
            if (n->role == NodeRole::Untrusted && attack.kind != AttackKind::LabelFlip) {
                auto atk_eng = make_engine(rng_seed, {kStreamAttack, std::uint64_t(n->id),
                                                      std::uint64_t(round)});
                apply_attack(upd.params.values, upd.gradient, start.values, attack, atk_eng);
            }
            return upd;
        };
        std::map<int, LocalUpdate> updates;
        {
            std::vector<std::future<LocalUpdate>> futures;
            futures.reserve(ordered.size());
            for (const NodeSite* n : ordered)
                futures.push_back(std::async(std::launch::async, train_node, n));
            for (std::size_t i = 0; i < ordered.size(); ++i)
                updates.emplace(ordered[i]->id, futures[i].get());
        }

        auto mac_eng = make_engine(rng_seed, {kStreamMac, std::uint64_t(round)});
        auto outcomes = simulate_round(nodes, plan, ch_cfg, mac_cfg, mac_eng);
        result.mac_rounds.push_back(outcomes);
        std::set<int> succ = successful_set(outcomes);

        std::vector<int> participants;
        for (int id : succ)
            if (!trust.blacklisted.count(id)) participants.push_back(id);

        RoundRecord rec;
        rec.round = round;
        rec.participants = static_cast<int>(participants.size());
        rec.mac_success_rate = round_success_rate(outcomes);

        std::map<int, double> round_weights;
        bool stop = false;
        if (!participants.empty()) {
            std::vector<LocalUpdate> part_updates;
            for (int id : participants) part_updates.push_back(updates.at(id));
            rec.grad_norm = l2_norm(mean_gradient(part_updates));
            if (rec.grad_norm <= fed_cfg.epsilon) {
                rec.converged = true;
                stop = true;
            } else if (!two_level) {
                std::vector<double> scores;
                for (int id : participants)
                    scores.push_back(fed_cfg.trust_enabled ? trust.effective(id) : 1.0);
                std::vector<double> weights = normalize_trust(scores);
                for (std::size_t i = 0; i < participants.size(); ++i)
                    round_weights[participants[i]] = weights[i];
                global = aggregate(part_updates, weights);
                if (fed_cfg.trust_enabled) {
                    std::vector<double> agg_grad(part_updates.front().gradient.size(), 0.0);
                    for (std::size_t i = 0; i < part_updates.size(); ++i)
                        for (std::size_t j = 0; j < agg_grad.size(); ++j)
                            agg_grad[j] += weights[i] * part_updates[i].gradient[j];
                    update_trust(trust, part_updates, agg_grad, validation_set, fed_cfg);
                }
            } else {
                // Two-level averaging: trust-weighted FedAvg per cell server,
                // then the cloud model is the plain mean of the cell results.
                std::map<int, std::vector<LocalUpdate>> by_cell;
                for (int id : participants) {
                    const LocalUpdate& u = updates.at(id);
                    int cell = -1;
                    for (const NodeSite* n : ordered)
                        if (n->id == id) cell = n->cell_id;
                    by_cell[cell].push_back(u);
                }
                std::map<int, ModelParams> cell_agg;
                for (auto& [cell, ups] : by_cell) {
                    std::vector<double> scores;
                    for (const LocalUpdate& u : ups)
                        scores.push_back(fed_cfg.trust_enabled ? trust.effective(u.node_id)
                                                               : 1.0);
                    std::vector<double> weights = normalize_trust(scores);
                    for (std::size_t i = 0; i < ups.size(); ++i)
                        round_weights[ups[i].node_id] = weights[i];
                    cell_agg[cell] = aggregate(ups, weights);
                    if (fed_cfg.trust_enabled) {
                        std::vector<double> agg_grad(ups.front().gradient.size(), 0.0);
                        for (std::size_t i = 0; i < ups.size(); ++i)
                            for (std::size_t j = 0; j < agg_grad.size(); ++j)
                                agg_grad[j] += weights[i] * ups[i].gradient[j];
                        update_trust(trust, ups, agg_grad, validation_set, fed_cfg);
                    }
                }
                ModelParams cloud_new;
                cloud_new.arch = arch;
                cloud_new.values.assign(cloud.values.size(), 0.0);
                for (const auto& [cell, model] : cell_agg)
                    for (std::size_t i = 0; i < model.values.size(); ++i)
                        cloud_new.values[i] += model.values[i] / cell_agg.size();
                cloud = cloud_new;
                for (const Cell& c : plan.cells) {
                    const ModelParams& base =
                        cell_agg.count(c.id) ? cell_agg.at(c.id) : cell_models.at(c.id);
                    cell_models[c.id] = cloud_blend(base, cloud, fed_cfg.cloud_blend);
                }
            }
        }

        const ModelParams& eval_model = two_level ? cloud : global;
        EvalMetrics m = evaluate(eval_model, eval_set);
        rec.accuracy = m.accuracy;
        rec.loss = m.loss;
        for (const NodeSite* n : ordered) {
            TrustSnapshotEntry e;
            e.node_id = n->id;
            e.q = trust.q.at(n->id);
            e.p = round_weights.count(n->id) ? round_weights.at(n->id) : 0.0;
            e.blacklisted = trust.blacklisted.count(n->id) > 0;
            rec.trust.push_back(e);
        }
        result.records.push_back(std::move(rec));
        result.final_model = eval_model;
        if (stop) break;
    }
    result.final_model = two_level ? cloud : global;
    return result;
}

void write_rounds_csv(const std::string& path, const std::vector<RoundRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "round,A,mac_success_rate,accuracy,loss,grad_norm,converged\n";
    for (const RoundRecord& r : records) {
        out << r.round << ',' << r.participants << ',' << fmt_double(r.mac_success_rate) << ','
            << fmt_double(r.accuracy) << ',' << fmt_double(r.loss) << ','
            << fmt_double(r.grad_norm) << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

void write_trust_csv(const std::string& path, const std::vector<RoundRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "round,node_id,q,p,blacklisted\n";
    for (const RoundRecord& r : records)
        for (const TrustSnapshotEntry& e : r.trust)
            out << r.round << ',' << e.node_id << ',' << fmt_double(e.q) << ','
                << fmt_double(e.p) << ',' << (e.blacklisted ? 1 : 0) << '\n';
}

}  // namespace flcc
