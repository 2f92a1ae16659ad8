#include "lsi/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace lsi {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

const std::vector<std::pair<std::string, std::string>>& RunConfig::registry() {
    static const std::vector<std::pair<std::string, std::string>> kRegistry = {
        {"data.dir", "data/faces"},
        {"data.size", "32"},
        {"data.channels", "1"},
        {"data.seed", "1"},
        {"data.count", "1200"},
        {"data.min_images", "500"},
        {"data.image", ""},
        {"decoder.levels", "4"},
        {"decoder.c_lat", "64"},
        {"decoder.const_channels", "48"},
        {"decoder.level_channels", "48,36,24,16"},
        {"decoder.inv_channels", "20,28,40,56"},
        {"pretrain.epochs", "40"},
        {"pretrain.batch", "32"},
        {"pretrain.lr", "0.001"},
        {"pretrain.seed", "1"},
        {"pretrain.patience", "5"},
        {"pretrain.min_improve", "0.01"},
        {"encoder.hidden", "128"},
        {"encoder.expansion", "4"},
        {"encoder.split", "1,1,2"},
        {"encoder.depths", "2,3,4"},
        {"encoder.input_scale", "0"},
        {"train.d", "16"},
        {"train.seed", "7"},
        {"train.batch", "32"},
        {"train.epochs_phase1", "30"},
        {"train.epochs_phase2", "10"},
        {"train.lr_mask", "0.0001"},
        {"train.lr_encoder", "0.0001"},
        {"train.patience", "5"},
        {"train.min_improve", "0.01"},
        {"train.lambda_lat", "1"},
        {"train.lambda_id", "0.5"},
        {"train.lambda_pips", "0.8"},
        {"train.lambda_l2", "1"},
        {"train.lambda_energy", "3"},
        {"train.energy_normalized", "false"},
        {"train.decoder_ckpt", ""},
        {"fsi.budget", "48"},
        {"fsi.count", "16"},
        {"sensor.gain", "1"},
        {"sensor.bias", "0"},
        {"sensor.read_sigma", "0"},
        {"sensor.shot_scale", "0"},
        {"sensor.sat_strength", "0"},
        {"sensor.adc_bits", "12"},
        {"sensor.adc_lo", "0"},
        {"sensor.adc_hi", "2048"},
        {"sensor.seed", "9"},
        {"calibrate.system_ckpt", ""},
        {"calibrate.seed", "5"},
        {"finetune.system_ckpt", ""},
        {"finetune.pairs", "200"},
        {"finetune.lr", "0.00001"},
        {"finetune.epochs", "20"},
        {"finetune.batch", "32"},
        {"finetune.seed", "11"},
        {"eval.system_ckpt", ""},
        {"eval.split", "test"},
    };
    return kRegistry;
}

RunConfig::RunConfig() {
    for (const auto& [key, value] : registry()) values_[key] = value;
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    cfg.apply_file(path);
    return cfg;
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
}

void RunConfig::apply_override(const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like section.key=value");
    set(trim(key_equals_value.substr(0, eq)), trim(key_equals_value.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& raw = get(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' has non-numeric value '" + raw + "'");
    }
}

int RunConfig::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw ConfigError("config key '" + key + "' must be an integer");
    return i;
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
    const std::string& raw = get(key);
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' must be an unsigned integer seed");
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    std::string v = get(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "' must be boolean");
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    for (const auto& [key, def] : registry()) out << key << " = " << values_.at(key) << '\n';
    return out.str();
}

void RunConfig::write(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write config to " + path);
    out << serialize();
}

} // namespace lsi
