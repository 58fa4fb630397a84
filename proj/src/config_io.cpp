#include "hetsim/config_io.hpp"

#include "hetsim/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hetsim {

using nlohmann::json;

json to_json(const ModelConfig& cfg)
{
    json j;
    j["schema"] = config_schema;
    j["M"] = cfg.servers;
    j["lambda"] = cfg.lambda;
    j["mu"] = std::vector<double>(cfg.mu.data(), cfg.mu.data() + cfg.mu.size());
    j["g"] = std::vector<double>(cfg.g.data(), cfg.g.data() + cfg.g.size());
    j["d"] = cfg.choices;
    if (const auto* w = std::get_if<Weighted<double>>(&cfg.selection)) {
        j["selection"] = {{"kind", "weighted"}, {"betas", {w->beta1, w->beta2, w->beta3}}};
    } else {
        j["selection"] = {{"kind", "tandem"}};
    }
    return j;
}

namespace {

const json& require(const json& j, const char* field)
{
    if (!j.contains(field)) {
        throw ConfigError(std::string(field) + ": missing");
    }
    return j.at(field);
}

double number(const json& j, const std::string& field)
{
    if (!j.is_number()) {
        throw ConfigError(field + ": expected a number");
    }
    return j.get<double>();
}

int integer(const json& j, const std::string& field)
{
    if (!j.is_number_integer()) {
        throw ConfigError(field + ": expected an integer");
    }
    return j.get<int>();
}

Eigen::VectorXd vector_field(const json& j, const char* field, int expected)
{
    const json& arr = require(j, field);
    if (!arr.is_array()) {
        throw ConfigError(std::string(field) + ": expected an array");
    }
    Eigen::VectorXd v(expected);
    for (int i = 0; i < expected; ++i) {
        const std::string name = std::string(field) + "[" + std::to_string(i) + "]";
        if (static_cast<std::size_t>(i) >= arr.size()) {
            throw ConfigError(name + ": missing entry (expected " + std::to_string(expected) + " values)");
        }
        v[i] = number(arr[static_cast<std::size_t>(i)], name);
    }
    if (arr.size() > static_cast<std::size_t>(expected)) {
        throw ConfigError(std::string(field) + "[" + std::to_string(expected) + "]: unexpected extra entry (M = " +
                          std::to_string(expected) + ")");
    }
    return v;
}

}  // namespace

ModelConfig config_from_json(const json& j)
{
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    ModelConfig cfg;
    cfg.servers = integer(require(j, "M"), "M");
    if (cfg.servers < 1) {
        throw ConfigError("M: must be at least 1");
    }
    cfg.lambda = number(require(j, "lambda"), "lambda");
    cfg.mu = vector_field(j, "mu", cfg.servers);
    cfg.g = vector_field(j, "g", cfg.servers);
    cfg.choices = integer(require(j, "d"), "d");
    if (j.contains("selection")) {
        const json& sel = j.at("selection");
        const std::string kind = sel.is_object() && sel.contains("kind") && sel.at("kind").is_string()
                                     ? sel.at("kind").get<std::string>()
                                     : std::string();
        if (kind == "tandem") {
            cfg.selection = Tandem{};
        } else if (kind == "weighted") {
            Weighted<double> w;
            if (sel.contains("betas")) {
                const json& b = sel.at("betas");
                if (!b.is_array() || b.size() != 3) {
                    throw ConfigError("selection.betas: expected three weights");
                }
                w.beta1 = number(b[0], "selection.betas[0]");
                w.beta2 = number(b[1], "selection.betas[1]");
                w.beta3 = number(b[2], "selection.betas[2]");
            }
            cfg.selection = w;
        } else {
            throw ConfigError("selection.kind: expected \"tandem\" or \"weighted\"");
        }
    }
    validate(cfg);
    return cfg;
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string() + ": cannot open file");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ModelConfig load_config(const std::filesystem::path& path)
{
    try {
        return config_from_json(read_json_file(path));
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        if (what.starts_with(path.string())) {
            throw;
        }
        throw ConfigError(path.string() + ": " + what);
    }
}

std::vector<ModelConfig> load_config_grid(const std::filesystem::path& path)
{
    const json j = read_json_file(path);
    const json& list = j.is_object() && j.contains("candidates") ? j.at("candidates") : j;
    if (!list.is_array()) {
        throw ConfigError(path.string() + ": expected an array of configs or {\"candidates\": [...]}");
    }
    std::vector<ModelConfig> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        try {
            out.push_back(config_from_json(list[i]));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ": candidates[" + std::to_string(i) + "]." + e.what());
        }
    }
    return out;
}

SystemState parse_state(const std::string& text)
{
    std::vector<int> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        item = first == std::string::npos ? std::string() : item.substr(first, last - first + 1);
        int v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size() || v < 0) {
            throw ConfigError("state: '" + item + "' is not a nonnegative integer");
        }
        values.push_back(v);
    }
    SystemState x(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = values[i];
    }
    return x;
}

}  // namespace hetsim
