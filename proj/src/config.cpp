#include "contea/config.hpp"

#include <fstream>

#include "contea/error.hpp"

namespace contea {

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::full: return "full";
        case Mode::no_ta: return "no_ta";
        case Mode::no_ta_no_asa: return "no_ta_no_asa";
        case Mode::retrain: return "retrain";
    }
    return "full";
}

Mode parse_mode(const std::string& name) {
    if (name == "full") return Mode::full;
    if (name == "no_ta") return Mode::no_ta;
    if (name == "no_ta_no_asa") return Mode::no_ta_no_asa;
    if (name == "retrain") return Mode::retrain;
    throw Error("config error: unrecognized mode '" + name + "'");
}

void RunConfig::validate() const {
    if (dim < 2) throw Error("config error: dim must be >= 2");
    if (proxy_count < 1) throw Error("config error: proxy_count must be >= 1");
    if (alpha < 0 || beta < 0) throw Error("config error: alpha and beta must be non-negative");
    if (m < 0) throw Error("config error: m must be >= 0");
    if (gamma <= 0) throw Error("config error: gamma must be positive");
    if (csls_k < 1) throw Error("config error: csls_k must be >= 1");
    if (batch_size < 1) throw Error("config error: batch_size must be >= 1");
    if (lr <= 0) throw Error("config error: lr must be positive");
    if (epochs < 0 || finetune_epochs < 0) throw Error("config error: epochs must be >= 0");
    if (patience < 0) throw Error("config error: patience must be >= 0");
    if (eval_every < 1) throw Error("config error: eval_every must be >= 1");
}

namespace {

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config error: value '" + value + "' for key '" + key + "' is not an integer");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error("config error: value '" + value + "' for key '" + key + "' is not a number");
    }
}

} // namespace

void apply_override(RunConfig& config, const std::string& key_value) {
    std::size_t eq = key_value.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error("config error: expected key=value, got '" + key_value + "'");
    }
    std::string key = key_value.substr(0, eq);
    std::string value = key_value.substr(eq + 1);

    if (key == "dim") config.dim = static_cast<int>(parse_int(key, value));
    else if (key == "alpha") config.alpha = parse_real(key, value);
    else if (key == "beta") config.beta = parse_real(key, value);
    else if (key == "m") config.m = static_cast<int>(parse_int(key, value));
    else if (key == "gamma") config.gamma = parse_real(key, value);
    else if (key == "lambda") config.lambda = parse_real(key, value);
    else if (key == "proxy_count") config.proxy_count = static_cast<int>(parse_int(key, value));
    else if (key == "csls_k") config.csls_k = static_cast<int>(parse_int(key, value));
    else if (key == "batch_size") config.batch_size = static_cast<int>(parse_int(key, value));
    else if (key == "lr") config.lr = parse_real(key, value);
    else if (key == "epochs") config.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "finetune_epochs") config.finetune_epochs = static_cast<int>(parse_int(key, value));
    else if (key == "patience") config.patience = static_cast<int>(parse_int(key, value));
    else if (key == "eval_every") config.eval_every = static_cast<int>(parse_int(key, value));
    else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "mode") config.mode = parse_mode(value);
    else throw Error("config error: unknown key '" + key + "'");
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error("config error: cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        std::size_t last = line.find_last_not_of(" \t\r");
        std::string trimmed = line.substr(first, last - first + 1);
        try {
            apply_override(base, trimmed);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (" + path.filename().string() + " line " +
                        std::to_string(line_no) + ")");
        }
    }
    return base;
}

} // namespace contea
