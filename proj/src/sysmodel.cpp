#include "serlink/sysmodel.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace serlink {
namespace {

[[noreturn]] void fail(ConfigErrc code, const std::string& what) {
    throw ConfigError(code, what);
}

std::string format_double(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool parse_bool(std::string_view s, std::string_view key) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    fail(ConfigErrc::parse, "cannot parse '" + t + "' as a boolean for " + std::string(key));
}

struct Field {
    std::function<void(SystemConfig&, std::string_view)> set;
    std::function<std::string(const SystemConfig&)> get;
};

template <class T>
Field int_field(T SystemConfig::*member) {
    return {[member](SystemConfig& c, std::string_view v) {
                c.*member = static_cast<T>(parse_int(v, "integer field"));
            },
            [member](const SystemConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(double SystemConfig::*member) {
    return {[member](SystemConfig& c, std::string_view v) { c.*member = parse_double(v, "real field"); },
            [member](const SystemConfig& c) { return format_double(c.*member); }};
}

Field circuit_field(double CircuitProfile::*member) {
    return {[member](SystemConfig& c, std::string_view v) {
                c.circuit.*member = parse_double(v, "circuit field");
            },
            [member](const SystemConfig& c) { return format_double(c.circuit.*member); }};
}

Field bool_field(bool SystemConfig::*member, const char* key) {
    return {[member, key](SystemConfig& c, std::string_view v) { c.*member = parse_bool(v, key); },
            [member](const SystemConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

// Ordered so that serialization is stable.
const std::vector<std::pair<std::string, Field>>& field_table() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        t.emplace_back("mode", Field{[](SystemConfig& c, std::string_view v) {
                                         const std::string s = trim(v);
                                         if (s == "HD" || s == "hd") c.mode = Duplex::HD;
                                         else if (s == "FD" || s == "fd") c.mode = Duplex::FD;
                                         else fail(ConfigErrc::parse, "mode must be HD or FD, got '" + s + "'");
                                     },
                                     [](const SystemConfig& c) { return to_string(c.mode); }});
        t.emplace_back("q_chains", int_field(&SystemConfig::q_chains));
        t.emplace_back("m_tx", int_field(&SystemConfig::m_tx));
        t.emplace_back("n_rx", int_field(&SystemConfig::n_rx));
        t.emplace_back("p_eh_antennas", int_field(&SystemConfig::p_eh_antennas));
        t.emplace_back("tau", real_field(&SystemConfig::tau));
        t.emplace_back("p_source_w", real_field(&SystemConfig::p_source_w));
        t.emplace_back("p_u_w", real_field(&SystemConfig::p_u_w));
        t.emplace_back("noise_w", real_field(&SystemConfig::noise_w));
        t.emplace_back("eta", real_field(&SystemConfig::eta));
        t.emplace_back("zeta_db", real_field(&SystemConfig::zeta_db));
        t.emplace_back("phi_td_db", real_field(&SystemConfig::phi_td_db));
        t.emplace_back("phi_ur_db", real_field(&SystemConfig::phi_ur_db));
        t.emplace_back("phi_ud_db", real_field(&SystemConfig::phi_ud_db));
        t.emplace_back("phi_g_db", real_field(&SystemConfig::phi_g_db));
        t.emplace_back("phi_si_db", real_field(&SystemConfig::phi_si_db));
        t.emplace_back("g_mag2", real_field(&SystemConfig::g_mag2));
        t.emplace_back("gs_mag2", real_field(&SystemConfig::gs_mag2));
        t.emplace_back("r_d", real_field(&SystemConfig::r_d));
        t.emplace_back("r_sbs", real_field(&SystemConfig::r_sbs));
        t.emplace_back("amp_alpha", real_field(&SystemConfig::amp_alpha));
        t.emplace_back("p_dac_w", circuit_field(&CircuitProfile::p_dac_w));
        t.emplace_back("p_adc_w", circuit_field(&CircuitProfile::p_adc_w));
        t.emplace_back("p_mix_w", circuit_field(&CircuitProfile::p_mix_w));
        t.emplace_back("p_lna_w", circuit_field(&CircuitProfile::p_lna_w));
        t.emplace_back("p_ifa_w", circuit_field(&CircuitProfile::p_ifa_w));
        t.emplace_back("p_filt_w", circuit_field(&CircuitProfile::p_filt_w));
        t.emplace_back("p_filr_w", circuit_field(&CircuitProfile::p_filr_w));
        t.emplace_back("p_syn_w", circuit_field(&CircuitProfile::p_syn_w));
        t.emplace_back("alpha_variant",
                       Field{[](SystemConfig& c, std::string_view v) {
                                 const std::string s = trim(v);
                                 if (s == "paper") c.alpha_variant = AlphaVariant::paper;
                                 else if (s == "conserving") c.alpha_variant = AlphaVariant::conserving;
                                 else fail(ConfigErrc::parse, "alpha_variant must be paper or conserving");
                             },
                             [](const SystemConfig& c) { return to_string(c.alpha_variant); }});
        t.emplace_back("hd_circuit_rx", bool_field(&SystemConfig::hd_circuit_rx, "hd_circuit_rx"));
        t.emplace_back("ideal_power", bool_field(&SystemConfig::ideal_power, "ideal_power"));
        t.emplace_back("z_model", Field{[](SystemConfig& c, std::string_view v) {
                                            const std::string s = trim(v);
                                            if (s == "averaged") c.z_model = ZModel::averaged;
                                            else if (s == "mean_field") c.z_model = ZModel::mean_field;
                                            else fail(ConfigErrc::parse, "z_model must be averaged or mean_field");
                                        },
                                        [](const SystemConfig& c) { return to_string(c.z_model); }});
        return t;
    }();
    return table;
}

const Field& find_field(std::string_view key) {
    for (const auto& [name, field] : field_table()) {
        if (name == key) return field;
    }
    fail(ConfigErrc::unknown_key, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    if (t.empty()) fail(ConfigErrc::parse, "empty value for " + std::string(what));
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || std::isnan(v)) {
        fail(ConfigErrc::parse, "cannot parse '" + t + "' as a number for " + std::string(what));
    }
    return v;
}

long long parse_int(std::string_view s, std::string_view what) {
    const double v = parse_double(s, what);
    if (!std::isfinite(v) || std::floor(v) != v || std::abs(v) > 9e15) {
        fail(ConfigErrc::parse, "'" + trim(s) + "' is not an integer for " + std::string(what));
    }
    return static_cast<long long>(v);
}

double db_to_linear(double db) {
    if (std::isinf(db) && db < 0) return 0.0;
    return std::pow(10.0, db / 10.0);
}

double circuit_power(int m_tx, int n_rx, const CircuitProfile& c) {
    return m_tx * (c.p_dac_w + c.p_mix_w + c.p_filt_w) + 2.0 * c.p_syn_w +
           n_rx * (c.p_lna_w + c.p_mix_w + c.p_ifa_w + c.p_filr_w + c.p_adc_w);
}

double transmit_power_rf(double p_source_w, double p_c_w, double amp_alpha, AlphaVariant variant) {
    if (!(p_source_w > p_c_w)) {
        throw InfeasibleError("circuit consumption " + format_double(p_c_w) + " W exhausts the supply " +
                              format_double(p_source_w) + " W");
    }
    if (amp_alpha < 0.0) throw DomainError("transmit_power_rf: amp_alpha must be nonnegative");
    if (variant == AlphaVariant::paper) {
        if (amp_alpha >= 1.0) throw InfeasibleError("transmit_power_rf: amp_alpha >= 1 under the paper variant");
        return (p_source_w - p_c_w) / (1.0 - amp_alpha);
    }
    return (p_source_w - p_c_w) / (1.0 + amp_alpha);
}

double amp_alpha_from(double epsilon, double eta_pa) {
    if (!(eta_pa > 0.0) || eta_pa > 1.0) throw DomainError("amp_alpha_from: eta_pa must be in (0, 1]");
    const double alpha = epsilon / eta_pa - 1.0;
    if (alpha < 0.0) throw DomainError("amp_alpha_from: epsilon must be at least eta_pa");
    return alpha;
}

void validate(const SystemConfig& c) {
    if (c.q_chains < 2) fail(ConfigErrc::chain_count, "q_chains must be at least 2");
    if (c.mode == Duplex::FD) {
        if (c.m_tx < 2 || c.n_rx < 2) fail(ConfigErrc::antenna_minimum, "FD requires m_tx >= 2 and n_rx >= 2");
        if (c.m_tx + c.n_rx != c.q_chains) {
            fail(ConfigErrc::chain_sum, "FD requires m_tx + n_rx = q_chains (" + std::to_string(c.m_tx) + " + " +
                                            std::to_string(c.n_rx) + " != " + std::to_string(c.q_chains) + ")");
        }
        if (c.tau != 1.0) fail(ConfigErrc::fd_tau, "FD requires tau = 1");
    } else {
        if (c.m_tx != c.q_chains || c.n_rx != c.q_chains) {
            fail(ConfigErrc::hd_antennas, "HD requires m_tx = n_rx = q_chains");
        }
        if (!(c.tau > 0.0 && c.tau < 1.0)) fail(ConfigErrc::hd_tau, "HD requires tau in (0, 1)");
    }
    if (!(c.p_source_w > 0.0) || !(c.p_u_w > 0.0) || !(c.noise_w > 0.0)) {
        fail(ConfigErrc::power_nonpositive, "p_source_w, p_u_w and noise_w must be positive");
    }
    if (!(c.eta > 0.0 && c.eta <= 1.0)) fail(ConfigErrc::eta_range, "eta must be in (0, 1]");
    if (!(c.zeta_db <= 0.0)) fail(ConfigErrc::zeta_range, "zeta_db must be <= 0");
    if (c.p_eh_antennas < 0) fail(ConfigErrc::eh_antennas, "p_eh_antennas must be nonnegative");
    if (!(c.g_mag2 > 0.0) || !(c.gs_mag2 > 0.0)) {
        fail(ConfigErrc::channel_magnitude, "g_mag2 and gs_mag2 must be positive");
    }
    if (!(c.r_d > 0.0) || !(c.r_sbs > 0.0)) fail(ConfigErrc::rate_nonpositive, "r_d and r_sbs must be positive");
    if (!(c.amp_alpha >= 0.0)) fail(ConfigErrc::alpha_negative, "amp_alpha must be nonnegative");
    const CircuitProfile& p = c.circuit;
    for (double v : {p.p_dac_w, p.p_adc_w, p.p_mix_w, p.p_lna_w, p.p_ifa_w, p.p_filt_w, p.p_filr_w, p.p_syn_w}) {
        if (!(v > 0.0)) fail(ConfigErrc::circuit_nonpositive, "circuit block powers must be positive");
    }
}

LinkBudget derive(const SystemConfig& c) {
    validate(c);
    LinkBudget lb;
    lb.m = c.m_tx;
    lb.n = c.mode == Duplex::FD ? c.n_rx : c.q_chains;
    lb.tau = c.mode == Duplex::FD ? 1.0 : c.tau;
    if (c.mode == Duplex::HD) {
        lb.p_c = circuit_power(c.q_chains, c.hd_circuit_rx ? c.q_chains : 0, c.circuit);
    } else {
        lb.p_c = circuit_power(c.m_tx, c.n_rx, c.circuit);
    }
    lb.p_rf = c.ideal_power ? c.p_source_w : transmit_power_rf(c.p_source_w, lb.p_c, c.amp_alpha, c.alpha_variant);
    lb.c = c.eta * c.p_eh_antennas * db_to_linear(c.phi_g_db) * c.g_mag2;
    lb.noise = c.noise_w;
    lb.p_u = c.p_u_w;
    lb.phi_td = db_to_linear(c.phi_td_db);
    lb.phi_ur = db_to_linear(c.phi_ur_db);
    lb.phi_ud = db_to_linear(c.phi_ud_db);
    lb.si_gain = db_to_linear(c.zeta_db) * db_to_linear(c.phi_si_db) * c.gs_mag2;
    lb.p_eh_cap = kEnergyCapFactor * c.p_source_w;
    return lb;
}

double total_power(const LinkBudget& lb, double z, bool* capped) {
    const double loop = lb.tau * lb.c * z;
    bool hit = false;
    double p_eh = 0.0;
    if (loop >= 1.0) {
        p_eh = lb.p_eh_cap;
        hit = true;
    } else {
        p_eh = loop * lb.p_rf / (1.0 - loop);
        if (p_eh > lb.p_eh_cap) {
            p_eh = lb.p_eh_cap;
            hit = true;
        }
    }
    if (capped) *capped = hit;
    return lb.p_rf + p_eh;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, field] : field_table()) k.push_back(name);
        return k;
    }();
    return keys;
}

bool is_config_key(std::string_view key) {
    for (const auto& [name, field] : field_table()) {
        if (name == key) return true;
    }
    return false;
}

void set_field(SystemConfig& cfg, std::string_view key, std::string_view value) {
    const Field& f = find_field(trim(key));
    try {
        f.set(cfg, value);
    } catch (const ConfigError& e) {
        fail(e.code(), std::string(trim(key)) + ": " + e.what());
    }
}

std::string get_field(const SystemConfig& cfg, std::string_view key) {
    return find_field(key).get(cfg);
}

SystemConfig parse_config_text(std::string_view text, SystemConfig cfg) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            fail(ConfigErrc::parse, "line " + std::to_string(lineno) + ": expected key = value");
        }
        set_field(cfg, trim(t.substr(0, eq)), t.substr(eq + 1));
    }
    return cfg;
}

SystemConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ConfigErrc::parse, "cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const SystemConfig& cfg) {
    std::string out;
    for (const auto& [name, field] : field_table()) {
        out += name;
        out += " = ";
        out += field.get(cfg);
        out += '\n';
    }
    return out;
}

std::string to_string(Duplex d) {
    return d == Duplex::HD ? "HD" : "FD";
}

std::string to_string(ZModel z) {
    return z == ZModel::averaged ? "averaged" : "mean_field";
}

std::string to_string(AlphaVariant v) {
    return v == AlphaVariant::paper ? "paper" : "conserving";
}

}  // namespace serlink
