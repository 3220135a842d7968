#include "flcc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "flcc/csv.hpp"

namespace flcc {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not a number: " + v);
    return out;
}

long parse_int(const std::string& v) {
    std::size_t pos = 0;
    long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("not an integer: " + v);
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument("expected true or false, got: " + v);
}

std::vector<double> parse_double_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

std::string serialize_double_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(v[i]);
    }
    return out;
}

struct KeyDef {
    const char* name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define DOUBLE_KEY(key, field)                                               \
    {key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_double(v); }, \
     [](const ExperimentConfig& c) { return fmt_double(c.field); }}
#define INT_KEY(key, field)                                                  \
    {key, [](ExperimentConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(v)); }, \
     [](const ExperimentConfig& c) { return std::to_string(c.field); }}
#define BOOL_KEY(key, field)                                                 \
    {key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
     [](const ExperimentConfig& c) { return c.field ? "true" : "false"; }}
#define STRING_KEY(key, field)                                               \
    {key, [](ExperimentConfig& c, const std::string& v) { c.field = v; },    \
     [](const ExperimentConfig& c) { return c.field; }}

const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = {
        {"seed",
         [](ExperimentConfig& c, const std::string& v) {
             if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
                 throw std::invalid_argument("expected an unsigned integer, got: " + v);
             c.seed = static_cast<std::uint64_t>(std::stoull(v));
         },
         [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        DOUBLE_KEY("geometry.lambda", lambda),
        DOUBLE_KEY("geometry.region_width", region_width),
        DOUBLE_KEY("geometry.region_height", region_height),
        DOUBLE_KEY("geometry.cell_radius", cell_radius),
        INT_KEY("geometry.num_channels", num_channels),
        DOUBLE_KEY("geometry.untrusted_fraction", untrusted_fraction),
        STRING_KEY("geometry.layout", layout),
        INT_KEY("geometry.fixed_nodes", fixed_nodes),
        DOUBLE_KEY("geometry.tx_power", tx_power),
        DOUBLE_KEY("channel.alpha", alpha),
        DOUBLE_KEY("channel.noise_power", noise_power),
        DOUBLE_KEY("channel.sinr_threshold_db", sinr_threshold_db),
        DOUBLE_KEY("channel.active_probability", active_probability),
        DOUBLE_KEY("channel.min_distance", min_distance),
        INT_KEY("mac.contention_window", contention_window),
        INT_KEY("mac.max_retries", max_retries),
        DOUBLE_KEY("net.t_db_min", t_db_min),
        DOUBLE_KEY("net.t_db_max", t_db_max),
        DOUBLE_KEY("net.t_db_step", t_db_step),
        {"net.lambdas",
         [](ExperimentConfig& c, const std::string& v) { c.lambdas = parse_double_list(v); },
         [](const ExperimentConfig& c) { return serialize_double_list(c.lambdas); }},
        INT_KEY("net.trials", trials),
        DOUBLE_KEY("net.link_distance", link_distance),
        STRING_KEY("learn.arch", arch),
        INT_KEY("learn.hidden", hidden),
        DOUBLE_KEY("learn.learning_rate", learning_rate),
        INT_KEY("learn.batch_size", batch_size),
        INT_KEY("fed.rounds", rounds),
        DOUBLE_KEY("fed.epsilon", epsilon),
        DOUBLE_KEY("fed.trust_learning_rate", trust_learning_rate),
        DOUBLE_KEY("fed.trust_initial", trust_initial),
        DOUBLE_KEY("fed.blacklist_threshold", blacklist_threshold),
        STRING_KEY("fed.hierarchy", hierarchy),
        DOUBLE_KEY("fed.cloud_blend", cloud_blend),
        INT_KEY("fed.eval_samples", eval_samples),
        INT_KEY("fed.validation_samples", validation_samples),
        STRING_KEY("data.train_images", train_images),
        STRING_KEY("data.train_labels", train_labels),
        STRING_KEY("data.test_images", test_images),
        STRING_KEY("data.test_labels", test_labels),
        INT_KEY("data.min_samples", min_samples),
        INT_KEY("data.max_samples", max_samples),
        BOOL_KEY("data.overlap", overlap),
        STRING_KEY("attack.kind", attack_kind),
        DOUBLE_KEY("attack.magnitude", attack_magnitude),
    };
    return table;
}

#undef DOUBLE_KEY
#undef INT_KEY
#undef BOOL_KEY
#undef STRING_KEY

struct Check {
    const char* key;
    std::function<bool(const ExperimentConfig&)> ok;
    const char* message;
};

const std::vector<Check>& checks() {
    static const std::vector<Check> table = {
        {"geometry.lambda", [](const ExperimentConfig& c) { return c.lambda >= 0; },
         "must be >= 0"},
        {"geometry.region_width", [](const ExperimentConfig& c) { return c.region_width > 0; },
         "must be > 0"},
        {"geometry.region_height", [](const ExperimentConfig& c) { return c.region_height > 0; },
         "must be > 0"},
        {"geometry.cell_radius", [](const ExperimentConfig& c) { return c.cell_radius > 0; },
         "must be > 0"},
        {"geometry.num_channels", [](const ExperimentConfig& c) { return c.num_channels >= 1; },
         "must be >= 1"},
        {"geometry.untrusted_fraction",
         [](const ExperimentConfig& c) {
             return c.untrusted_fraction >= 0 && c.untrusted_fraction <= 1;
         },
         "must be in [0,1]"},
        {"geometry.layout",
         [](const ExperimentConfig& c) { return c.layout == "rect" || c.layout == "flower7"; },
         "must be rect or flower7"},
        {"geometry.fixed_nodes", [](const ExperimentConfig& c) { return c.fixed_nodes >= 0; },
         "must be >= 0"},
        {"geometry.tx_power", [](const ExperimentConfig& c) { return c.tx_power > 0; },
         "must be > 0"},
        {"channel.alpha", [](const ExperimentConfig& c) { return c.alpha >= 2; },
         "must be >= 2"},
        {"channel.noise_power", [](const ExperimentConfig& c) { return c.noise_power >= 0; },
         "must be >= 0"},
        {"channel.active_probability",
         [](const ExperimentConfig& c) {
             return c.active_probability >= 0 && c.active_probability <= 1;
         },
         "must be in [0,1]"},
        {"channel.min_distance", [](const ExperimentConfig& c) { return c.min_distance >= 0; },
         "must be >= 0"},
        {"mac.contention_window",
         [](const ExperimentConfig& c) { return c.contention_window >= 1; }, "must be >= 1"},
        {"mac.max_retries", [](const ExperimentConfig& c) { return c.max_retries >= 0; },
         "must be >= 0"},
        {"net.t_db_step", [](const ExperimentConfig& c) { return c.t_db_step > 0; },
         "must be > 0"},
        {"net.t_db_max", [](const ExperimentConfig& c) { return c.t_db_max >= c.t_db_min; },
         "must be >= net.t_db_min"},
        {"net.lambdas",
         [](const ExperimentConfig& c) {
             return std::all_of(c.lambdas.begin(), c.lambdas.end(),
                                [](double l) { return l >= 0; });
         },
         "entries must be >= 0"},
        {"net.trials", [](const ExperimentConfig& c) { return c.trials >= 1; }, "must be >= 1"},
        {"net.link_distance", [](const ExperimentConfig& c) { return c.link_distance > 0; },
         "must be > 0"},
        {"learn.arch",
         [](const ExperimentConfig& c) { return c.arch == "conv" || c.arch == "dense"; },
         "must be conv or dense"},
        {"learn.hidden", [](const ExperimentConfig& c) { return c.hidden >= 0; },
         "must be >= 0"},
        {"learn.learning_rate", [](const ExperimentConfig& c) { return c.learning_rate > 0; },
         "must be > 0"},
        {"learn.batch_size", [](const ExperimentConfig& c) { return c.batch_size >= 1; },
         "must be >= 1"},
        {"fed.rounds", [](const ExperimentConfig& c) { return c.rounds >= 0; },
         "must be >= 0"},
        {"fed.epsilon", [](const ExperimentConfig& c) { return c.epsilon >= 0; },
         "must be >= 0"},
        {"fed.trust_learning_rate",
         [](const ExperimentConfig& c) {
             return c.trust_learning_rate > 0 && c.trust_learning_rate <= 1;
         },
         "must be in (0,1]"},
        {"fed.trust_initial",
         [](const ExperimentConfig& c) { return c.trust_initial >= 0 && c.trust_initial <= 1; },
         "must be in [0,1]"},
        {"fed.blacklist_threshold",
         [](const ExperimentConfig& c) { return c.blacklist_threshold >= 0; }, "must be >= 0"},
        {"fed.hierarchy",
         [](const ExperimentConfig& c) {
             return c.hierarchy == "single" || c.hierarchy == "cell_cloud";
         },
         "must be single or cell_cloud"},
        {"fed.cloud_blend",
         [](const ExperimentConfig& c) { return c.cloud_blend >= 0 && c.cloud_blend <= 1; },
         "must be in [0,1]"},
        {"fed.eval_samples", [](const ExperimentConfig& c) { return c.eval_samples >= 0; },
         "must be >= 0"},
        {"fed.validation_samples",
         [](const ExperimentConfig& c) { return c.validation_samples >= 0; }, "must be >= 0"},
        {"data.min_samples", [](const ExperimentConfig& c) { return c.min_samples >= 1; },
         "must be >= 1"},
        {"data.max_samples",
         [](const ExperimentConfig& c) { return c.max_samples >= c.min_samples; },
         "must be >= data.min_samples"},
        {"attack.kind",
         [](const ExperimentConfig& c) {
             return c.attack_kind == "label_flip" || c.attack_kind == "sign_flip" ||
                    c.attack_kind == "scaled_noise";
         },
         "must be label_flip, sign_flip or scaled_noise"},
        {"attack.magnitude", [](const ExperimentConfig& c) { return c.attack_magnitude >= 0; },
         "must be >= 0"},
    };
    return table;
}

void validate(const ExperimentConfig& cfg, const std::map<std::string, int>& key_lines) {
    for (const Check& check : checks()) {
        if (check.ok(cfg)) continue;
        auto it = key_lines.find(check.key);
        std::string where = it == key_lines.end()
                                ? std::string("default value")
                                : "line " + std::to_string(it->second);
        throw ConfigError(std::string("config: ") + check.key + " (" + where + "): " +
                          check.message);
    }
}

}  // namespace

ChannelConfig ExperimentConfig::channel_config() const {
    ChannelConfig c;
    c.alpha = alpha;
    c.noise_power = noise_power;
    c.sinr_threshold = db_to_linear(sinr_threshold_db);
    c.active_probability = active_probability;
    c.min_distance = min_distance;
    return c;
}

MacConfig ExperimentConfig::mac_config(MacMode mode) const {
    MacConfig m;
    m.contention_window = contention_window;
    m.max_retries = max_retries;
    m.active_probability = active_probability;
    m.mode = mode;
    return m;
}

FederationConfig ExperimentConfig::federation_config(bool trust_enabled) const {
    FederationConfig f;
    f.max_rounds = rounds;
    f.epsilon = epsilon;
    f.trust_learning_rate = trust_learning_rate;
    f.trust_initial = trust_initial;
    f.blacklist_threshold = blacklist_threshold;
    f.hierarchy = hierarchy == "cell_cloud" ? Hierarchy::CellPlusCloud : Hierarchy::SingleServer;
    f.cloud_blend = cloud_blend;
    f.trust_enabled = trust_enabled;
    f.eval_samples = eval_samples;
    f.validation_samples = validation_samples;
    return f;
}

ModelArch ExperimentConfig::model_arch() const {
    ModelArch a;
    a.kind = arch == "conv" ? ArchKind::Conv : ArchKind::Dense;
    a.hidden = hidden;
    return a;
}

AttackSpec ExperimentConfig::attack_spec() const {
    AttackSpec a;
    if (attack_kind == "label_flip")
        a.kind = AttackKind::LabelFlip;
    else if (attack_kind == "sign_flip")
        a.kind = AttackKind::SignFlipGradient;
    else
        a.kind = AttackKind::ScaledNoise;
    a.magnitude = attack_magnitude;
    return a;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, int> key_lines;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) +
                              ": expected `key = value`");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        const auto& table = key_table();
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const KeyDef& k) { return key == k.name; });
        if (it == table.end())
            throw ConfigError("config: line " + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        try {
            it->set(cfg, value);
        } catch (const std::exception& e) {
            throw ConfigError("config: line " + std::to_string(line_no) + ": key '" + key +
                              "': " + e.what());
        }
        key_lines[key] = line_no;
    }
    validate(cfg, key_lines);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const KeyDef& k : key_table()) {
        out += k.name;
        out += " = ";
        out += k.get(cfg);
        out += '\n';
    }
    return out;
}

}  // namespace flcc
