#include "thermoplate/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "thermoplate/errors.hpp"

namespace thermoplate {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) throw InvalidArgument("config: '" + key + "' expects an integer, got '" + v + "'");
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) throw InvalidArgument("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidArgument("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::string fmt_double(double x) { return fmt::format("{:.17g}", x); }

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += f(xs[i]);
    }
    return out;
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename M>
Field str_field(M RunConfig::*m) {
    return {[m](RunConfig& c, const std::string&, const std::string& v) { c.*m = v; },
            [m](const RunConfig& c) { return c.*m; }};
}
Field dbl_field(double RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_double(k, v); },
            [m](const RunConfig& c) { return fmt_double(c.*m); }};
}
Field int_field(int RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = static_cast<int>(parse_int(k, v)); },
            [m](const RunConfig& c) { return std::to_string(c.*m); }};
}
Field bool_field(bool RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_bool(k, v); },
            [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}
Field int_list_field(std::vector<int> RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) {
                std::vector<int> out;
                for (const auto& s : split_list(v)) out.push_back(static_cast<int>(parse_int(k, s)));
                c.*m = out;
            },
            [m](const RunConfig& c) { return join(c.*m, [](int x) { return std::to_string(x); }); }};
}
Field dbl_list_field(std::vector<double> RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) {
                std::vector<double> out;
                for (const auto& s : split_list(v)) out.push_back(parse_double(k, s));
                c.*m = out;
            },
            [m](const RunConfig& c) { return join(c.*m, fmt_double); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"command", str_field(&RunConfig::command)},
        {"output_dir", str_field(&RunConfig::output_dir)},
        {"seed",
         {[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); },
          [](const RunConfig& c) { return std::to_string(c.seed); }}},
        {"json", bool_field(&RunConfig::json)},
        {"lambda0", dbl_field(&RunConfig::lambda0)},
        {"theta_fraction", dbl_field(&RunConfig::theta_fraction)},
        {"dimension", int_field(&RunConfig::dimension)},
        {"max_alpha", int_field(&RunConfig::max_alpha)},
        {"symbol", str_field(&RunConfig::symbol)},
        {"j", int_field(&RunConfig::j)},
        {"k_list", dbl_list_field(&RunConfig::k_list)},
        {"torus_points", int_field(&RunConfig::torus_points)},
        {"torus_length", dbl_field(&RunConfig::torus_length)},
        {"time", dbl_field(&RunConfig::time)},
        {"domain", str_field(&RunConfig::domain)},
        {"grid", int_list_field(&RunConfig::grid)},
        {"bc", str_field(&RunConfig::bc)},
        {"beta", dbl_field(&RunConfig::beta)},
        {"mu", dbl_field(&RunConfig::mu)},
        {"b", dbl_field(&RunConfig::b)},
        {"zero_tol", dbl_field(&RunConfig::zero_tol)},
        {"horizon", dbl_field(&RunConfig::horizon)},
        {"samples", int_field(&RunConfig::samples)},
        {"project", bool_field(&RunConfig::project)},
        {"grids", int_list_field(&RunConfig::grids)},
    };
    return table;
}

const Field& find_field(const std::string& key) {
    for (const auto& [k, f] : fields())
        if (k == key) return f;
    throw InvalidArgument("config: unknown key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& [k, f] : fields()) out.push_back(k);
        return out;
    }();
    return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    find_field(key).set(config, key, value);
}

std::string get_config_value(const RunConfig& config, const std::string& key) { return find_field(key).get(config); }

std::string serialize_config(const RunConfig& config) {
    std::string out;
    for (const auto& [k, f] : fields()) out += k + " = " + f.get(config) + "\n";
    return out;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(fmt::format("config line {}: expected 'key = value'", lineno));
        set_config_value(base, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return base;
}

RunConfig read_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw NumericalFailure("sha256 failed");
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

std::string manifest_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json cfg;
    for (const auto& k : run_config_keys()) cfg[k] = get_config_value(m.config, k);
    j["config"] = cfg;
    j["version"] = m.version;
    j["started_utc"] = m.started_utc;
    j["wall_seconds"] = m.wall_seconds;
    auto& checks = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : m.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    auto& arts = j["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& a : m.artifacts) arts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    return j.dump(2) + "\n";
}

std::string tool_version() { return THERMOPLATE_VERSION; }

}  // namespace thermoplate
