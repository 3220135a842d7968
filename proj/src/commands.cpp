#include "flcc/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "flcc/csv.hpp"
#include "flcc/rng.hpp"
#include "flcc/svg.hpp"

namespace flcc {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory: " + dir);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << text;
}

std::vector<double> db_grid(const ExperimentConfig& cfg) {
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        double t = cfg.t_db_min + i * cfg.t_db_step;
        if (t > cfg.t_db_max + 1e-9) break;
        grid.push_back(t);
    }
    return grid;
}

struct Layout {
    std::vector<NodeSite> nodes;
    CellPlan plan;
};

Layout build_layout(const ExperimentConfig& cfg) {
    Layout out;
    if (cfg.layout == "flower7") {
        FlowerLayout fl = make_flower_plan(cfg.cell_radius);
        out.plan = assign_frequencies(fl.plan, cfg.num_channels);
        int count = cfg.fixed_nodes;
        if (count == 0) {
            auto eng = make_engine(cfg.seed, {kStreamLayout, 0xc0});
            std::poisson_distribution<int> draw(cfg.lambda * fl.region.area());
            count = cfg.lambda > 0 ? draw(eng) : 0;
        }
        int untrusted = static_cast<int>(std::llround(cfg.untrusted_fraction * count));
        out.nodes = sample_fixed_in_plan(count, untrusted, fl.region, out.plan, cfg.seed,
                                         cfg.tx_power);
    } else {
        out.plan = assign_frequencies(build_hex_tessellation(cfg.region(), cfg.cell_radius),
                                      cfg.num_channels);
        if (cfg.fixed_nodes > 0) {
            int untrusted =
                static_cast<int>(std::llround(cfg.untrusted_fraction * cfg.fixed_nodes));
            out.nodes = sample_fixed_count(cfg.fixed_nodes, untrusted, cfg.region(), cfg.seed,
                                           cfg.tx_power);
        } else {
            out.nodes = sample_ppp(cfg.lambda, cfg.region(), cfg.untrusted_fraction, cfg.seed,
                                   cfg.tx_power);
        }
    }
    out.nodes = assign_cells(std::move(out.nodes), out.plan);
    return out;
}

}  // namespace

RunArtifacts cmd_net_analyze(const ExperimentConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    RunArtifacts art;
    art.out_dir = out_dir;

    std::vector<double> grid = db_grid(cfg);
    std::string csv_path = join(out_dir, "ps_curves.csv");
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("cannot write " + csv_path);
    csv << "T_dB,lambda,analytic_ps,mc_ps,mc_stderr,capacity\n";

    std::vector<ChartPanel> panels(1);
    panels[0].title = "Successful transmission probability vs SINR threshold";
    panels[0].x_label = "T (dB)";
    panels[0].y_label = "P(SINR >= T)";

    for (std::size_t li = 0; li < cfg.lambdas.size(); ++li) {
        double lambda = cfg.lambdas[li];
        // One seed per intensity: thresholds share the same draws, so the
        // simulated curve is monotone like the analytic one.
        std::uint64_t mc_seed = splitmix64(splitmix64(cfg.seed) ^ (0x5eedULL + li));
        Series analytic{"analytic lambda=" + fmt_double(lambda), {}, {}};
        Series simulated{"simulated lambda=" + fmt_double(lambda), {}, {}};
        for (double t_db : grid) {
            ChannelConfig ch = cfg.channel_config();
            ch.sinr_threshold = db_to_linear(t_db);
            double active_intensity = lambda * cfg.active_probability;
            double ps =
                analytic_success_probability(active_intensity, ch, cfg.link_distance,
                                             cfg.tx_power);
            McResult mc = monte_carlo_success_probability(lambda, ch, cfg.link_distance,
                                                          cfg.tx_power, cfg.trials, mc_seed);
            double capacity = csma_capacity(ch.sinr_threshold, ps);
            csv << fmt_double(t_db) << ',' << fmt_double(lambda) << ',' << fmt_double(ps) << ','
                << fmt_double(mc.estimate) << ',' << fmt_double(mc.std_error) << ','
                << fmt_double(capacity) << '\n';
            analytic.x.push_back(t_db);
            analytic.y.push_back(ps);
            simulated.x.push_back(t_db);
            simulated.y.push_back(mc.estimate);
        }
        panels[0].series.push_back(analytic);
        panels[0].series.push_back(simulated);
    }
    csv.close();
    std::string svg_path = join(out_dir, "ps_curves.svg");
    write_chart_svg(svg_path, panels);
    std::string cfg_path = join(out_dir, "resolved.cfg");
    write_text(cfg_path, serialize_config(cfg));
    art.files = {csv_path, svg_path, cfg_path};
    return art;
}

RunArtifacts cmd_fl_run(const ExperimentConfig& cfg, MacMode mode, const std::string& out_dir) {
    ensure_dir(out_dir);
    RunArtifacts art;
    art.out_dir = out_dir;

    LabeledDataset train = load_idx(cfg.train_images, cfg.train_labels);
    LabeledDataset test = load_idx(cfg.test_images, cfg.test_labels);

    Layout layout = build_layout(cfg);

    std::vector<int> node_ids;
    for (const NodeSite& n : layout.nodes) node_ids.push_back(n.id);
    auto part_eng = make_engine(cfg.seed, {kStreamPartition});
    Partition part = partition(train, node_ids, cfg.partition_spec(), part_eng);

    AttackSpec attack = cfg.attack_spec();
    std::map<int, LabeledDataset> node_data = part.datasets;
    for (const NodeSite& n : layout.nodes) {
        if (n.role != NodeRole::Untrusted) continue;
        auto eng = make_engine(cfg.seed, {kStreamAttack, std::uint64_t(n.id)});
        node_data[n.id] = apply_attack(node_data[n.id], attack, eng);
    }

    bool trust_enabled = mode == MacMode::Flcc;
    FederationResult result = run_federation(
        layout.nodes, layout.plan, cfg.channel_config(), cfg.mac_config(mode),
        cfg.federation_config(trust_enabled), cfg.model_arch(), cfg.sgd_config(), node_data,
        test, attack, cfg.seed);

    std::string nodes_path = join(out_dir, "nodes.csv");
    write_nodes_csv(nodes_path, layout.nodes);
    std::string cells_path = join(out_dir, "cells.csv");
    write_cells_csv(cells_path, layout.plan);
    std::string part_path = join(out_dir, "partition.csv");
    write_partition_csv(part_path, part);
    std::string rounds_path = join(out_dir, "rounds.csv");
    write_rounds_csv(rounds_path, result.records);
    std::string trust_path = join(out_dir, "trust.csv");
    write_trust_csv(trust_path, result.records);

    std::string trace_path = join(out_dir, "mac_trace.csv");
    {
        std::ofstream trace(trace_path);
        if (!trace) throw DataError("cannot write " + trace_path);
        write_mac_trace_header(trace);
        for (std::size_t r = 0; r < result.mac_rounds.size(); ++r)
            append_mac_trace_csv(trace, static_cast<int>(r + 1), result.mac_rounds[r]);
    }

    std::string model_path = join(out_dir, "model.flcc");
    save_checkpoint(result.final_model, model_path);

    ChartPanel acc_panel{"Accuracy", "round", "accuracy", {}};
    ChartPanel loss_panel{"Loss", "round", "cross-entropy", {}};
    Series acc{"accuracy", {}, {}}, loss{"loss", {}, {}};
    for (const RoundRecord& r : result.records) {
        acc.x.push_back(r.round);
        acc.y.push_back(r.accuracy);
        loss.x.push_back(r.round);
        loss.y.push_back(r.loss);
    }
    acc_panel.series.push_back(acc);
    loss_panel.series.push_back(loss);
    std::string svg_path = join(out_dir, "curves.svg");
    write_chart_svg(svg_path, {acc_panel, loss_panel});

    std::string cfg_path = join(out_dir, "resolved.cfg");
    write_text(cfg_path, serialize_config(cfg));
    art.files = {nodes_path, cells_path, part_path,  rounds_path, trust_path,
                 trace_path, model_path, svg_path,   cfg_path};
    return art;
}

RunArtifacts cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.size() < 2)
        throw InvalidParameter("compare: need at least two run directories");
    ensure_dir(out_dir);
    RunArtifacts art;
    art.out_dir = out_dir;

    std::string merged_path = join(out_dir, "merged.csv");
    std::ofstream merged(merged_path);
    if (!merged) throw DataError("cannot write " + merged_path);
    merged << "run,round,accuracy,loss\n";

    ChartPanel acc_panel{"Accuracy", "round", "accuracy", {}};
    ChartPanel loss_panel{"Loss", "round", "cross-entropy", {}};

    for (const std::string& dir : run_dirs) {
        std::string rounds_path = join(dir, "rounds.csv");
        if (!fs::exists(rounds_path))
            throw DataError("compare: no rounds.csv in run directory " + dir);
        auto rows = read_csv(rounds_path);
        if (rows.empty() || rows[0].size() < 7 || rows[0][0] != "round")
            throw DataError("compare: malformed rounds.csv in " + dir);
        Series acc{dir, {}, {}}, loss{dir, {}, {}};
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() < 7) throw DataError("compare: malformed row in " + rounds_path);
            merged << dir << ',' << rows[i][0] << ',' << rows[i][3] << ',' << rows[i][4]
                   << '\n';
            acc.x.push_back(std::stod(rows[i][0]));
            acc.y.push_back(std::stod(rows[i][3]));
            loss.x.push_back(std::stod(rows[i][0]));
            loss.y.push_back(std::stod(rows[i][4]));
        }
        acc_panel.series.push_back(acc);
        loss_panel.series.push_back(loss);
    }
    merged.close();
    std::string svg_path = join(out_dir, "compare.svg");
    write_chart_svg(svg_path, {acc_panel, loss_panel});
    art.files = {merged_path, svg_path};
    return art;
}

}  // namespace flcc
