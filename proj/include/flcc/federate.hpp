#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flcc/data.hpp"
#include "flcc/learn.hpp"
#include "flcc/mac.hpp"

namespace flcc {

enum class Hierarchy { SingleServer, CellPlusCloud };

struct FederationConfig {
    int max_rounds = 300;             // R
    double epsilon = 1e-6;            // convergence threshold on the mean-gradient norm
    double trust_learning_rate = 0.2; // beta
    double trust_initial = 0.5;
    double blacklist_threshold = 0.05;
    Hierarchy hierarchy = Hierarchy::SingleServer;
    double cloud_blend = 0.5;
    bool trust_enabled = true;  // baseline runs use uniform weights, no updates
    int eval_samples = 0;       // 0 = whole test set
    int validation_samples = 500;

    void validate() const {
        if (max_rounds < 0) throw InvalidParameter("fed: max_rounds must be >= 0");
        if (epsilon < 0.0) throw InvalidParameter("fed: epsilon must be >= 0");
        if (trust_learning_rate <= 0.0 || trust_learning_rate > 1.0)
            throw InvalidParameter("fed: trust_learning_rate must be in (0,1]");
        if (trust_initial < 0.0 || trust_initial > 1.0)
            throw InvalidParameter("fed: trust_initial must be in [0,1]");
        if (blacklist_threshold < 0.0)
            throw InvalidParameter("fed: blacklist_threshold must be >= 0");
        if (cloud_blend < 0.0 || cloud_blend > 1.0)
            throw InvalidParameter("fed: cloud_blend must be in [0,1]");
        if (eval_samples < 0 || validation_samples < 0)
            throw InvalidParameter("fed: sample counts must be >= 0");
    }
};

/// Raw trust scores plus the permanent blacklist. A blacklisted device keeps
/// its last score but weighs zero forever.
struct TrustState {
    std::map<int, double> q;
    std::set<int> blacklisted;

    double effective(int id) const {
        if (blacklisted.count(id)) return 0.0;
        auto it = q.find(id);
        return it == q.end() ? 0.0 : it->second;
    }
};

struct TrustSnapshotEntry {
    int node_id = 0;
    double q = 0.0;
    double p = 0.0;
    bool blacklisted = false;
};

struct RoundRecord {
    int round = 0;
    int participants = 0;  // A
    double mac_success_rate = 0.0;
    double accuracy = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;
    bool converged = false;
    std::vector<TrustSnapshotEntry> trust;
};

/// p_i = q_i / sum(q); uniform when every score is zero; empty in = empty out.
std::vector<double> normalize_trust(const std::vector<double>& scores);

/// Trust-weighted FedAvg: elementwise sum of p_i * W_i.
ModelParams aggregate(const std::vector<LocalUpdate>& updates,
                      const std::vector<double>& weights);

/// Reward/penalty trust update. A participant is rewarded when its reported
/// gradient does not oppose the trust-weighted mean gradient (cosine >= 0)
/// and its model does not worsen held-out validation loss by more than 10%
/// against the median participant. Scores track rewards exponentially,
/// q += beta * (r - q); devices falling below the blacklist threshold are
/// blacklisted permanently. Non-participants keep their scores.
void update_trust(TrustState& trust, const std::vector<LocalUpdate>& updates,
                  const std::vector<double>& aggregate_gradient,
                  const LabeledDataset& validation_set, const FederationConfig& cfg);

/// Gradient convergence: L2 norm of the elementwise mean of the
/// participants' gradients <= epsilon. No participants = not converged.
bool check_convergence(const std::vector<LocalUpdate>& updates, double epsilon);

/// blend * cell_model + (1 - blend) * cloud_model.
ModelParams cloud_blend(const ModelParams& cell_model, const ModelParams& cloud_model,
                        double blend);

struct FederationResult {
    std::vector<RoundRecord> records;
    ModelParams final_model;
    std::vector<std::vector<TransmissionOutcome>> mac_rounds;
};

/// The full training loop. Per round: broadcast, local training on every node
/// (contention losers train and discard), MAC round selects the successful
/// set, update-level attacks fire, convergence test, trust-weighted
/// aggregation (plus the cell/cloud blend in two-level mode), trust update,
/// evaluation on the held-out test set.
FederationResult run_federation(const std::vector<NodeSite>& nodes, const CellPlan& plan,
                                const ChannelConfig& ch_cfg, const MacConfig& mac_cfg,
                                const FederationConfig& fed_cfg, const ModelArch& arch,
                                const SgdConfig& sgd_cfg,
                                const std::map<int, LabeledDataset>& node_data,
                                const LabeledDataset& test_set, const AttackSpec& attack,
                                std::uint64_t rng_seed);

void write_rounds_csv(const std::string& path, const std::vector<RoundRecord>& records);
void write_trust_csv(const std::string& path, const std::vector<RoundRecord>& records);

}  // namespace flcc
