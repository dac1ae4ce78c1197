#include "lplab/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace lplab {

namespace {

enum class Type { text, integer, number, positive, list, positive_list, names, boolean };

struct KeySpec {
    Type type;
    std::vector<std::string> choices;  // text and names only; empty = free
};

const std::vector<std::string> kSubcommands{"cell",         "kernel-rates",  "solve", "rellich-sweep",
                                            "continuation", "q-identities", "green", "const-kernel",
                                            "traces"};

const std::map<std::string, KeySpec>& schema() {
    static const std::map<std::string, KeySpec> s = [] {
        std::map<std::string, KeySpec> m;
        m["subcommand"] = {Type::text, kSubcommands};
        m["seed"] = {Type::integer, {}};
        m["jobs"] = {Type::integer, {}};
        m["output"] = {Type::text, {}};
        m["strict"] = {Type::boolean, {}};

        m["field.kind"] = {Type::text, {"constant", "identity", "layered", "trigonometric"}};
        m["field.dim"] = {Type::integer, {}};
        m["field.matrix"] = {Type::list, {}};
        m["field.mean"] = {Type::number, {}};
        m["field.amplitude"] = {Type::number, {}};
        m["field.frequency"] = {Type::integer, {}};
        m["field.axis"] = {Type::integer, {}};
        m["field.seed"] = {Type::integer, {}};
        m["field.terms"] = {Type::integer, {}};
        m["field.max_frequency"] = {Type::integer, {}};
        m["field.trig_amplitude"] = {Type::number, {}};
        m["field.shift"] = {Type::number, {}};
        m["cell.cutoff"] = {Type::integer, {}};

        m["domain.kind"] = {Type::text, {"square", "cube", "disk", "graph"}};
        m["domain.panels"] = {Type::integer, {}};
        m["domain.radius"] = {Type::positive, {}};
        m["domain.center"] = {Type::list, {}};
        m["domain.graph"] = {Type::text, {"flat", "cone", "sawtooth", "sine"}};
        m["domain.lipschitz"] = {Type::number, {}};
        m["domain.slope"] = {Type::number, {}};
        m["domain.period"] = {Type::positive, {}};
        m["domain.amplitude"] = {Type::number, {}};
        m["domain.r"] = {Type::positive, {}};
        m["domain.resolution"] = {Type::integer, {}};

        m["eps"] = {Type::positive, {}};
        m["epsilons"] = {Type::positive_list, {}};
        m["problem"] = {Type::text, {"dirichlet", "neumann", "regularity"}};
        m["problems"] = {Type::names, {"corrector", "dirichlet", "neumann", "regularity"}};
        m["data"] = {Type::text, {"corrector", "polynomial"}};
        m["weights"] = {Type::list, {}};
        m["mesh.panels_per_eps"] = {Type::integer, {}};
        m["mesh.max_panels"] = {Type::integer, {}};
        m["nt.aperture"] = {Type::positive, {}};
        m["dump"] = {Type::boolean, {}};
        m["dump.n"] = {Type::integer, {}};

        m["s_grid"] = {Type::list, {}};
        m["random"] = {Type::integer, {}};
        m["rho"] = {Type::positive, {}};
        m["samples"] = {Type::integer, {}};

        m["kernel.box"] = {Type::positive, {}};
        m["kernel.h"] = {Type::positive, {}};
        m["kernel.pole"] = {Type::list, {}};
        m["kernel.near_radii"] = {Type::positive_list, {}};
        m["kernel.far_radii"] = {Type::positive_list, {}};
        m["kernel.angles"] = {Type::integer, {}};
        m["const.radii"] = {Type::positive_list, {}};
        m["const.diag"] = {Type::positive_list, {}};
        m["green.pole"] = {Type::list, {}};
        m["green.flux_radius"] = {Type::positive, {}};

        for (const char* t : {"a0", "cell", "rate_gain", "interior", "spread", "condition_factor",
                              "probe_factor", "product", "telescoping", "ibp", "green", "trace", "flux",
                              "jump", "tangential", "mean", "homogeneity", "flux_norm"})
            m[std::string("tol.") + t] = {Type::positive, {}};
        return m;
    }();
    return s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end && std::isfinite(out);
}

bool parse_int(const std::string& s, long long& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

void validate(const std::string& key, const std::string& value) {
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError(Config::pointer(key), "unknown key");
    const KeySpec& spec = it->second;
    const std::string ptr = Config::pointer(key);
    if (value.empty()) throw ConfigError(ptr, "missing value");
    auto check_choice = [&](const std::string& v, const std::string& where) {
        if (spec.choices.empty()) return;
        for (const auto& c : spec.choices)
            if (c == v) return;
        std::string all;
        for (const auto& c : spec.choices) all += (all.empty() ? "" : ", ") + c;
        throw ConfigError(where, "'" + v + "' is not one of {" + all + "}");
    };
    switch (spec.type) {
    case Type::text: check_choice(value, ptr); break;
    case Type::integer: {
        long long v;
        if (!parse_int(value, v)) throw ConfigError(ptr, "expected an integer, got '" + value + "'");
        if (v < 0) throw ConfigError(ptr, "must be non-negative");
        break;
    }
    case Type::number:
    case Type::positive: {
        double v;
        if (!parse_double(value, v)) throw ConfigError(ptr, "expected a number, got '" + value + "'");
        if (spec.type == Type::positive && !(v > 0.0)) throw ConfigError(ptr, "must be positive");
        break;
    }
    case Type::list:
    case Type::positive_list: {
        const auto items = split(value);
        for (std::size_t i = 0; i < items.size(); ++i) {
            const std::string where = ptr + "/" + std::to_string(i);
            double v;
            if (!parse_double(items[i], v)) throw ConfigError(where, "expected a number, got '" + items[i] + "'");
            if (spec.type == Type::positive_list && !(v > 0.0)) throw ConfigError(where, "must be positive");
        }
        break;
    }
    case Type::names: {
        const auto items = split(value);
        for (std::size_t i = 0; i < items.size(); ++i) check_choice(items[i], ptr + "/" + std::to_string(i));
        break;
    }
    case Type::boolean:
        if (value != "true" && value != "false") throw ConfigError(ptr, "expected true or false");
        break;
    }
}

}  // namespace

std::string Config::pointer(std::string_view key) {
    std::string out = "/";
    for (char c : key) out += c == '.' ? '/' : c;
    return out;
}

std::vector<std::string> Config::schema_keys() {
    std::vector<std::string> out;
    for (const auto& [k, v] : schema()) out.push_back(k);
    return out;
}

Config Config::parse(std::string_view text) {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string raw;
    bool header = false;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (!header) {
            if (line != kConfigHeader)
                throw ConfigError("/", "first line must be '" + std::string(kConfigHeader) + "'");
            header = true;
            continue;
        }
        if (line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("/", "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("/", "line " + std::to_string(line_no) + ": empty key");
        validate(key, value);
        if (cfg.values_.count(key)) throw ConfigError(pointer(key), "duplicate key");
        cfg.values_[key] = value;
    }
    if (!header) throw ConfigError("/", "missing '" + std::string(kConfigHeader) + "' header");
    if (!cfg.has("subcommand")) throw ConfigError("/subcommand", "required key is missing");
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
    validate(key, value);
    values_[key] = value;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_number(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    double v = 0.0;
    parse_double(it->second, v);
    return v;
}

int Config::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    long long v = 0;
    parse_int(it->second, v);
    return static_cast<int>(v);
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    long long v = 0;
    parse_int(it->second, v);
    return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second == "true";
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const auto& s : split(it->second)) {
        double v = 0.0;
        parse_double(s, v);
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> Config::get_names(const std::string& key,
                                           const std::vector<std::string>& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : split(it->second);
}

std::string Config::canonical() const {
    std::string out(kConfigHeader);
    out += '\n';
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

std::string Config::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

}  // namespace lplab
