#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "serlink/runner.hpp"

namespace serlink {
namespace {

constexpr double kOff = -std::numeric_limits<double>::infinity();

SystemConfig hd16() {
    SystemConfig c;
    c.mode = Duplex::HD;
    c.q_chains = c.m_tx = c.n_rx = 16;
    c.tau = 0.5;
    return c;
}

SystemConfig fd(int q, int m) {
    SystemConfig c;
    c.mode = Duplex::FD;
    c.tau = 1.0;
    c.q_chains = q;
    c.m_tx = m;
    c.n_rx = q - m;
    return c;
}

Axis axis(const std::string& fields, const std::string& values) { return parse_axis(fields + ": " + values); }

PresetPart part(std::string suffix, SystemConfig base, Axis a1, Evaluator e, std::optional<Axis> a2 = std::nullopt) {
    PresetPart p;
    p.suffix = std::move(suffix);
    p.spec.base = std::move(base);
    p.spec.axis1 = std::move(a1);
    p.spec.axis2 = std::move(a2);
    p.spec.evaluator = e;
    return p;
}

std::vector<Preset> build() {
    std::vector<Preset> out;

    // Outage versus path gain, with and without circuit consumption.
    auto fig4 = [&](const std::string& name, const std::string& desc, SystemConfig base) {
        Preset p{name, desc, {}, {}};
        const Axis gain = axis("phi_td_db+phi_ur_db", "-90:2.5:-60");
        for (bool ideal : {false, true}) {
            SystemConfig c = base;
            c.ideal_power = ideal;
            const std::string tag = ideal ? "ideal" : "practical";
            p.parts.push_back(part(tag + "_cf", c, gain, Evaluator::closed_form));
            p.parts.push_back(part(tag + "_mc", c, gain, Evaluator::monte_carlo));
        }
        out.push_back(std::move(p));
    };
    SystemConfig f4a = hd16();
    f4a.phi_ud_db = -60.0;
    fig4("fig4a", "HD, M=16: outage vs path gain, practical and ideal power, closed form and MC", f4a);
    SystemConfig f4b = fd(16, 8);
    f4b.phi_ud_db = -60.0;
    fig4("fig4b", "FD, M=N=8: outage vs path gain, practical and ideal power, closed form and MC", f4b);

    {
        Preset p{"fig5", "MinMax outage vs source power for HD and FD 8/8, two path-gain pairs, P in {0, 6}", {}, {}};
        const Axis pg = axis("p_source_w", "1:0.5:20");
        const std::pair<double, double> pairs[] = {{-75.0, -90.0}, {-80.0, -65.0}};
        for (bool is_fd : {false, true}) {
            for (const auto& [ur, td] : pairs) {
                for (int eh : {0, 6}) {
                    SystemConfig c = is_fd ? fd(16, 8) : hd16();
                    c.phi_ur_db = ur;
                    c.phi_td_db = td;
                    c.phi_ud_db = kOff;
                    c.p_eh_antennas = eh;
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%s_ur%d_td%d_p%d", is_fd ? "fd" : "hd", static_cast<int>(-ur),
                                  static_cast<int>(-td), eh);
                    p.parts.push_back(part(buf, c, pg, Evaluator::closed_form));
                }
            }
        }
        out.push_back(std::move(p));
    }

    auto p1_base = [] {
        SystemConfig c = fd(16, 8);
        c.r_sbs = 3.0;
        c.phi_td_db = c.phi_ur_db = -80.0;
        c.phi_ud_db = kOff;
        return c;
    };

    {
        Preset p{"fig6", "Per-split outage for M = 2..14 at Q = 16, P in {0, 6}; r_d must be supplied", {"r_d"}, {}};
        for (int eh : {0, 6}) {
            SystemConfig c = p1_base();
            c.p_eh_antennas = eh;
            p.parts.push_back(part("p" + std::to_string(eh), c, axis("m_tx", "2:1:14"), Evaluator::closed_form));
        }
        out.push_back(std::move(p));
    }
    {
        Preset p{"fig7", "Optimal split vs r_d at Q = 16, P in {0, 6}", {}, {}};
        for (int eh : {0, 6}) {
            SystemConfig c = p1_base();
            c.p_eh_antennas = eh;
            p.parts.push_back(part("p" + std::to_string(eh), c, axis("r_d", "1:0.5:8"), Evaluator::optimize_p1));
        }
        out.push_back(std::move(p));
    }
    {
        Preset p{"fig8", "Optimal split vs phi_td at Q = 16, r_d = 4, P in {0, 6}", {}, {}};
        for (int eh : {0, 6}) {
            SystemConfig c = p1_base();
            c.r_d = 4.0;
            c.p_eh_antennas = eh;
            p.parts.push_back(
                part("p" + std::to_string(eh), c, axis("phi_td_db", "-90:2.5:-60"), Evaluator::optimize_p1));
        }
        out.push_back(std::move(p));
    }
    {
        Preset p{"fig9", "MinMax over r_d x r_sbs: optimal FD, fixed FD 8/8 and HD 16", {}, {}};
        const Axis rd = axis("r_d", "2:0.5:8");
        const Axis rs = axis("r_sbs", "2,3,4");
        SystemConfig c = p1_base();
        p.parts.push_back(part("optimal", c, rd, Evaluator::optimize_p1, rs));
        p.parts.push_back(part("fixed", c, rd, Evaluator::closed_form, rs));
        SystemConfig h = hd16();
        h.phi_td_db = h.phi_ur_db = -80.0;
        h.phi_ud_db = kOff;
        p.parts.push_back(part("hd", h, rd, Evaluator::closed_form, rs));
        out.push_back(std::move(p));
    }
    {
        Preset p{"fig11", "Minimum chain count q_min over r_d x r_sbs for delta = 1e-5", {}, {}};
        SystemConfig c = p1_base();
        PresetPart pp = part("qmin", c, axis("r_d", "1:1:6"), Evaluator::optimize_p2, axis("r_sbs", "1:1:4"));
        pp.spec.delta = 1e-5;
        pp.spec.q_max = 32;
        p.parts.push_back(std::move(pp));
        out.push_back(std::move(p));
    }
    {
        Preset p{"fig12", "MinMax vs EH antenna count at Q = 8, fixed 4/4 and optimized split", {}, {}};
        const std::pair<double, double> rates[] = {{1.0, 2.0}, {4.0, 2.0}, {6.0, 2.0}};
        for (const auto& [rd, rs] : rates) {
            SystemConfig c = fd(8, 4);
            c.phi_td_db = c.phi_ur_db = -80.0;
            c.phi_ud_db = kOff;
            c.r_d = rd;
            c.r_sbs = rs;
            const std::string tag = "rd" + std::to_string(static_cast<int>(rd)) + "_rs" + std::to_string(static_cast<int>(rs));
            const Axis eh = axis("p_eh_antennas", "0:1:12");
            p.parts.push_back(part(tag + "_fixed", c, eh, Evaluator::closed_form));
            p.parts.push_back(part(tag + "_optimal", c, eh, Evaluator::optimize_p1));
        }
        out.push_back(std::move(p));
    }
    {
        Preset p{"fig13", "Uplink integral quadrature convergence for both kernel setups", {}, {}};
        for (int s : {1, 2}) {
            PresetPart pp = part("setup" + std::to_string(s), SystemConfig{}, axis("gl_order", "10,20,40,80,160,200"),
                                 Evaluator::gl_check);
            pp.spec.gl_setup = s;
            p.parts.push_back(std::move(pp));
        }
        out.push_back(std::move(p));
    }
    {
        Preset p{"fig14", "GPD fit of the leakage ratio for M in {2, 4, 8, 16}, plus histograms", {}, {}};
        p.parts.push_back(part("fit", SystemConfig{}, axis("m_tx", "2,4,8,16"), Evaluator::fit_gpd));
        out.push_back(std::move(p));
    }
    return out;
}

void apply_override(SweepSpec& spec, const std::string& key, const std::string& value) {
    if (key == "delta") {
        spec.delta = parse_double(value, "delta");
    } else if (key == "q_max") {
        spec.q_max = static_cast<int>(parse_int(value, "q_max"));
    } else if (key == "gl_order") {
        spec.gl_order = static_cast<int>(parse_int(value, "gl_order"));
    } else {
        set_field(spec.base, key, value);
    }
}

}  // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = build();
    return all;
}

const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets()) {
        if (p.name == name) return p;
    }
    throw ConfigError(ConfigErrc::parse, "unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> run_preset(const std::string& name,
                                    const std::vector<std::pair<std::string, std::string>>& overrides,
                                    const std::string& out_dir, long long mc_budget,
                                    std::optional<std::uint64_t> seed) {
    const Preset& preset = find_preset(name);
    for (const auto& req : preset.required) {
        const bool given = std::any_of(overrides.begin(), overrides.end(), [&](const auto& kv) { return kv.first == req; });
        if (!given) throw ConfigError(ConfigErrc::parse, "preset " + name + " requires --set " + req + "=<value>");
    }
    std::vector<std::string> written;
    for (const auto& pp : preset.parts) {
        SweepSpec spec = pp.spec;
        for (const auto& [k, v] : overrides) apply_override(spec, k, v);
        if (mc_budget > 0) spec.mc_budget = mc_budget;
        if (seed) spec.seed = *seed;
        const std::string path = (std::filesystem::path(out_dir) / (name + "_" + pp.suffix + ".csv")).string();
        write_file_atomic(path, run_sweep_csv(spec));
        written.push_back(path);
        if (spec.evaluator == Evaluator::fit_gpd) {
            for (double m : spec.axis1.values) {
                const GpdFitSummary s = fit_gpd_summary(static_cast<int>(m), spec.mc_budget, spec.seed, true);
                const std::string hp =
                    (std::filesystem::path(out_dir) / (name + "_hist_m" + std::to_string(s.m) + ".csv")).string();
                write_file_atomic(hp, gpd_histogram_csv(s));
                written.push_back(hp);
            }
        }
    }
    return written;
}

}  // namespace serlink
