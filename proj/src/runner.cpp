#include "serlink/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "serlink/fading.hpp"
#include "serlink/rng.hpp"

namespace serlink {
namespace {

std::string fmt_axis(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

bool is_sweep_key(std::string_view key) {
    return key == "gl_order" || key == "delta";
}

std::string header_tail(Evaluator e) {
    switch (e) {
        case Evaluator::closed_form:
        case Evaluator::monte_carlo:
            return "p_out_d,p_out_sbs,minmax,method,ci_d,ci_sbs,capped_draws";
        case Evaluator::optimize_p1:
            return "p_out_d,p_out_sbs,minmax,method,ci_d,ci_sbs,capped_draws,m_opt,n_opt";
        case Evaluator::optimize_p2:
            return "p_out_d,p_out_sbs,minmax,method,ci_d,ci_sbs,capped_draws,q_min,feasible,m_opt,n_opt";
        case Evaluator::fit_gpd:
            return "samples,xi_hat,sigma_hat,xi_theory,sigma_theory,ks";
        case Evaluator::gl_check:
            return "setup,literal,mapped,reference,rel_err_literal,rel_err_mapped";
    }
    return {};
}

struct Point {
    SystemConfig cfg;
    int gl_order = kDefaultGlOrder;
    double delta = 1e-5;
    std::string prefix;
};

void apply(Point& pt, const Axis& axis, double v) {
    for (const auto& f : axis.fields) {
        if (f == "gl_order") {
            pt.gl_order = static_cast<int>(v);
        } else if (f == "delta") {
            pt.delta = v;
        }
    }
    Axis cfg_axis;
    for (const auto& f : axis.fields) {
        if (!is_sweep_key(f)) cfg_axis.fields.push_back(f);
    }
    if (!cfg_axis.fields.empty()) apply_axis_value(pt.cfg, cfg_axis, v);
}

std::string point_row(const SweepSpec& spec, const Point& pt) {
    const SystemConfig& cfg = pt.cfg;
    std::string row;
    auto outage_cols = [&](double d, double s, const std::string& method, double ci_d, double ci_s, long long capped) {
        row += fmt(d) + "," + fmt(s) + "," + fmt(std::max(d, s)) + "," + method + "," + fmt(ci_d) + "," + fmt(ci_s) +
               "," + std::to_string(capped);
    };
    try {
        switch (spec.evaluator) {
            case Evaluator::closed_form: {
                EvalOptions eo;
                eo.gl_order = pt.gl_order;
                const OutageReport r = evaluate(cfg, eo);
                outage_cols(r.p_out_d, r.p_out_sbs, to_string(r.method), 0.0, 0.0, 0);
                break;
            }
            case Evaluator::monte_carlo: {
                const McPair r = mc_run(cfg, spec.mc_budget, spec.seed);
                outage_cols(r.d.p_hat, r.sbs.p_hat, to_string(Method::monte_carlo), r.d.ci_halfwidth_95,
                            r.sbs.ci_halfwidth_95, r.d.capped_draws);
                break;
            }
            case Evaluator::optimize_p1: {
                SolverOptions so;
                so.gl_order = pt.gl_order;
                const AllocationResult r = solve_p1(cfg, cfg.q_chains, so);
                outage_cols(r.p_out_d, r.p_out_sbs, to_string(Method::closed_form), 0.0, 0.0, 0);
                row += "," + std::to_string(r.m_opt) + "," + std::to_string(r.n_opt);
                break;
            }
            case Evaluator::optimize_p2: {
                SolverOptions so;
                so.gl_order = pt.gl_order;
                const AllocationResult r = solve_p2(cfg, pt.delta, spec.q_max, so);
                outage_cols(r.p_out_d, r.p_out_sbs, to_string(Method::closed_form), 0.0, 0.0, 0);
                row += "," + std::to_string(r.q_min) + "," + (r.feasible ? "true" : "false") + "," +
                       std::to_string(r.m_opt) + "," + std::to_string(r.n_opt);
                break;
            }
            case Evaluator::fit_gpd: {
                const GpdFitSummary s = fit_gpd_summary(cfg.m_tx, spec.mc_budget, spec.seed);
                row += std::to_string(s.samples) + "," + fmt(s.fitted.shape) + "," + fmt(s.fitted.scale) + "," +
                       fmt(s.theory.shape) + "," + fmt(s.theory.scale) + "," + fmt(s.ks);
                break;
            }
            case Evaluator::gl_check: {
                const GlCheck g = gl_check(kernel_setup(spec.gl_setup), {pt.gl_order});
                const GlCheckRow& r = g.rows.front();
                row += std::to_string(spec.gl_setup) + "," + fmt(r.literal) + "," + fmt(r.mapped) + "," +
                       fmt(g.reference) + "," + fmt(r.rel_err_literal) + "," + fmt(r.rel_err_mapped);
                break;
            }
        }
    } catch (const InfeasibleError&) {
        row.clear();
        outage_cols(1.0, 1.0, "infeasible", 0.0, 0.0, 0);
        if (spec.evaluator == Evaluator::optimize_p1) row += ",0,0";
        if (spec.evaluator == Evaluator::optimize_p2) row += ",0,false,0,0";
    }
    return row;
}

}  // namespace

std::string to_string(Evaluator e) {
    switch (e) {
        case Evaluator::closed_form: return "closed-form";
        case Evaluator::monte_carlo: return "monte-carlo";
        case Evaluator::optimize_p1: return "optimize-p1";
        case Evaluator::optimize_p2: return "optimize-p2";
        case Evaluator::fit_gpd: return "fit-gpd";
        case Evaluator::gl_check: return "gl-check";
    }
    return "unknown";
}

Evaluator parse_evaluator(std::string_view s) {
    const std::string t = trim(s);
    if (t == "closed-form" || t == "cf") return Evaluator::closed_form;
    if (t == "monte-carlo" || t == "mc") return Evaluator::monte_carlo;
    if (t == "optimize-p1") return Evaluator::optimize_p1;
    if (t == "optimize-p2") return Evaluator::optimize_p2;
    if (t == "fit-gpd") return Evaluator::fit_gpd;
    if (t == "gl-check") return Evaluator::gl_check;
    throw ConfigError(ConfigErrc::parse, "unknown evaluator '" + t + "'");
}

std::string Axis::label() const {
    std::string s;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) s += '+';
        s += fields[i];
    }
    return s;
}

std::vector<double> parse_value_list(std::string_view text) {
    const std::string t = trim(text);
    std::vector<double> out;
    if (t.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        if (parts.size() != 3) throw ConfigError(ConfigErrc::parse, "range must be start:step:stop");
        const double start = parse_double(parts[0], "range start");
        const double step = parse_double(parts[1], "range step");
        const double stop = parse_double(parts[2], "range stop");
        if (step == 0.0 || (stop - start) / step < 0.0) {
            throw ConfigError(ConfigErrc::parse, "range step does not reach stop");
        }
        const long long count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 100000) throw ConfigError(ConfigErrc::parse, "range has too many points");
        for (long long k = 0; k < count; ++k) out.push_back(start + k * step);
    } else {
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_double(item, "list value"));
    }
    if (out.empty()) throw ConfigError(ConfigErrc::parse, "empty value list");
    return out;
}

Axis parse_axis(std::string_view text) {
    const std::string t = trim(text);
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw ConfigError(ConfigErrc::parse, "axis must be field: values");
    Axis a;
    std::stringstream ss(t.substr(0, colon));
    std::string f;
    while (std::getline(ss, f, '+')) {
        f = trim(f);
        if (!is_config_key(f) && !is_sweep_key(f)) {
            throw ConfigError(ConfigErrc::unknown_key, "axis field '" + f + "' is not a config key");
        }
        a.fields.push_back(f);
    }
    if (a.fields.empty()) throw ConfigError(ConfigErrc::parse, "axis names no field");
    a.values = parse_value_list(t.substr(colon + 1));
    return a;
}

void apply_axis_value(SystemConfig& cfg, const Axis& axis, double value) {
    for (const auto& f : axis.fields) {
        if (is_sweep_key(f)) continue;
        set_field(cfg, f, fmt_axis(value));
        if (cfg.mode == Duplex::FD && (f == "m_tx" || f == "q_chains")) cfg.n_rx = cfg.q_chains - cfg.m_tx;
        if (cfg.mode == Duplex::HD && f == "q_chains") {
            cfg.m_tx = cfg.q_chains;
            cfg.n_rx = cfg.q_chains;
        }
    }
}

SweepSpec parse_sweep_text(std::string_view text, const std::string& base_dir) {
    SweepSpec spec;
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<std::pair<std::string, std::string>> cfg_lines;
    bool have_axis1 = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(ConfigErrc::parse, "sweep line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key == "axis1") {
            spec.axis1 = parse_axis(val);
            have_axis1 = true;
        } else if (key == "axis2") {
            spec.axis2 = parse_axis(val);
        } else if (key == "evaluator") {
            spec.evaluator = parse_evaluator(val);
        } else if (key == "mc_budget") {
            spec.mc_budget = parse_int(val, "mc_budget");
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(parse_int(val, "seed"));
        } else if (key == "delta") {
            spec.delta = parse_double(val, "delta");
        } else if (key == "q_max") {
            spec.q_max = static_cast<int>(parse_int(val, "q_max"));
        } else if (key == "gl_order") {
            spec.gl_order = static_cast<int>(parse_int(val, "gl_order"));
        } else if (key == "gl_setup") {
            spec.gl_setup = static_cast<int>(parse_int(val, "gl_setup"));
        } else if (key == "config") {
            std::filesystem::path p(val);
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            spec.base = load_config(p.string());
        } else {
            if (!is_config_key(key)) {
                throw ConfigError(ConfigErrc::unknown_key, "unknown sweep key '" + key + "'");
            }
            cfg_lines.emplace_back(key, val);
        }
    }
    if (!have_axis1) throw ConfigError(ConfigErrc::parse, "sweep file needs axis1");
    for (const auto& [k, v] : cfg_lines) set_field(spec.base, k, v);
    if (spec.mc_budget < 1) throw ConfigError(ConfigErrc::parse, "mc_budget must be positive");
    return spec;
}

SweepSpec load_sweep(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(ConfigErrc::parse, "cannot open sweep file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_sweep_text(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string run_sweep_csv(const SweepSpec& spec) {
    std::vector<Point> points;
    const std::vector<double> inner = spec.axis2 ? spec.axis2->values : std::vector<double>{0.0};
    for (double v1 : spec.axis1.values) {
        for (double v2 : inner) {
            Point pt;
            pt.cfg = spec.base;
            pt.gl_order = spec.gl_order;
            pt.delta = spec.delta;
            apply(pt, spec.axis1, v1);
            pt.prefix = fmt_axis(v1) + ",";
            if (spec.axis2) {
                apply(pt, *spec.axis2, v2);
                pt.prefix += fmt_axis(v2) + ",";
            }
            points.push_back(std::move(pt));
        }
    }
    // Validate every grid point up front so a bad axis fails before any work.
    if (spec.evaluator != Evaluator::fit_gpd && spec.evaluator != Evaluator::gl_check) {
        for (const auto& pt : points) validate(pt.cfg);
    }

    std::vector<std::string> rows(points.size());
    const bool fan_out = spec.evaluator != Evaluator::monte_carlo && worker_count() > 1;
    if (fan_out) {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex mu;
        auto work = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= points.size()) return;
                try {
                    rows[i] = point_row(spec, points[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < worker_count(); ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t i = 0; i < points.size(); ++i) rows[i] = point_row(spec, points[i]);
    }

    std::string csv = spec.axis1.label() + ",";
    if (spec.axis2) csv += spec.axis2->label() + ",";
    csv += header_tail(spec.evaluator) + "\n";
    for (std::size_t i = 0; i < points.size(); ++i) csv += points[i].prefix + rows[i] + "\n";
    return csv;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + tmp);
        f << content;
        f.flush();
        if (!f) throw Error("write to " + tmp + " failed");
    }
    std::filesystem::rename(tmp, target);
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return buf;
}

std::string format_report(const OutageReport& r) {
    std::string s;
    s += "p_out_d = " + fmt(r.p_out_d) + "\n";
    s += "p_out_sbs = " + fmt(r.p_out_sbs) + "\n";
    s += "minmax = " + fmt(r.minmax) + "\n";
    s += "method = " + to_string(r.method) + "\n";
    for (const auto& [k, v] : r.diagnostics) s += "diag." + k + " = " + fmt(v) + "\n";
    return s;
}

std::string format_mc_report(const McPair& r) {
    std::string s;
    s += "p_out_d = " + fmt(r.d.p_hat) + "\n";
    s += "p_out_sbs = " + fmt(r.sbs.p_hat) + "\n";
    s += "minmax = " + fmt(std::max(r.d.p_hat, r.sbs.p_hat)) + "\n";
    s += "method = monte-carlo\n";
    s += "ci_d = " + fmt(r.d.ci_halfwidth_95) + "\n";
    s += "ci_sbs = " + fmt(r.sbs.ci_halfwidth_95) + "\n";
    s += "samples = " + std::to_string(r.d.n_samples) + "\n";
    s += "seed = " + std::to_string(r.d.seed) + "\n";
    s += "capped_draws = " + std::to_string(r.d.capped_draws) + "\n";
    if (r.d.budget_exhausted) s += "budget_exhausted = true\n";
    return s;
}

std::string format_allocation(const AllocationResult& r, bool p2) {
    std::string s;
    if (p2) {
        s += "feasible = " + std::string(r.feasible ? "true" : "false") + "\n";
        s += "q_min = " + std::to_string(r.q_min) + "\n";
    } else {
        s += "q = " + std::to_string(r.q) + "\n";
    }
    s += "m_opt = " + std::to_string(r.m_opt) + "\n";
    s += "n_opt = " + std::to_string(r.n_opt) + "\n";
    s += "minmax = " + fmt(r.minmax_outage) + "\n";
    s += "p_out_d = " + fmt(r.p_out_d) + "\n";
    s += "p_out_sbs = " + fmt(r.p_out_sbs) + "\n";
    s += "m,p_out_d,p_out_sbs,minmax,feasible\n";
    for (const auto& sp : r.per_split_curve) {
        s += std::to_string(sp.m) + "," + fmt(sp.p_out_d) + "," + fmt(sp.p_out_sbs) + "," + fmt(sp.minmax()) + "," +
             (sp.feasible ? "true" : "false") + "\n";
    }
    return s;
}

KernelSetup kernel_setup(int which) {
    if (which == 1) return {3, 4, 20.0, 2, 2, 2};
    if (which == 2) return {2, 2, 46.0, 4, 4, 2};
    throw DomainError("kernel_setup: setup must be 1 or 2");
}

GlCheck gl_check(const KernelSetup& s, const std::vector<int>& orders) {
    GlCheck g;
    g.setup = s;
    g.reference = uplink_kernel_reference(s.m, s.n, s.a4, s.l, s.p, s.i);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int n : orders) {
        GlCheckRow r;
        r.order = n;
        r.literal = uplink_kernel_gl(s.m, s.n, s.a4, s.l, s.p, s.i, n);
        r.mapped = uplink_kernel_gl_mapped(s.m, s.n, s.a4, s.l, s.p, s.i, n);
        r.rel_err_literal = std::abs(r.literal - g.reference) / std::abs(g.reference);
        r.rel_err_mapped = std::abs(r.mapped - g.reference) / std::abs(g.reference);
        r.rel_change_literal = std::isnan(prev) ? 0.0 : std::abs(r.literal - prev) / std::abs(r.literal);
        prev = r.literal;
        g.rows.push_back(r);
    }
    return g;
}

std::string format_gl_check(const GlCheck& g) {
    std::string s;
    char buf[256];
    std::snprintf(buf, sizeof buf, "setup M=%d N=%d a4=%g l=%d p=%d i=%d\n", g.setup.m, g.setup.n, g.setup.a4,
                  g.setup.l, g.setup.p, g.setup.i);
    s += buf;
    s += "reference = " + fmt(g.reference) + "\n";
    s += "order,literal,rel_change,rel_err_literal,mapped,rel_err_mapped\n";
    for (const auto& r : g.rows) {
        s += std::to_string(r.order) + "," + fmt(r.literal) + "," + fmt(r.rel_change_literal) + "," +
             fmt(r.rel_err_literal) + "," + fmt(r.mapped) + "," + fmt(r.rel_err_mapped) + "\n";
    }
    return s;
}

GpdFitSummary fit_gpd_summary(int m, long long samples, std::uint64_t seed, bool keep_samples) {
    if (m < 2) throw DomainError("fit-gpd: m must be at least 2");
    if (samples < 2) throw DomainError("fit-gpd: need at least two samples");
    GpdFitSummary s;
    s.m = m;
    s.samples = samples;
    std::vector<double> z(static_cast<std::size_t>(samples));
    const long long batches = (samples + kMcBatch - 1) / kMcBatch;
    for (long long b = 0; b < batches; ++b) {
        Rng rng(seed, static_cast<std::uint64_t>(b));
        const long long end = std::min(samples, (b + 1) * kMcBatch);
        for (long long k = b * kMcBatch; k < end; ++k) z[static_cast<std::size_t>(k)] = sample_leakage_ratio(m, rng);
    }
    s.fitted = fit_gpd(z);
    s.theory = {0.0, m / (m - 1.0), -1.0 / (m - 1.0)};
    s.ks = ks_statistic(z, [m](double x) { return gpd_cdf(x, m); });
    if (keep_samples) s.z = std::move(z);
    return s;
}

std::string format_gpd_fit(const GpdFitSummary& s) {
    std::string out;
    out += "m = " + std::to_string(s.m) + "\n";
    out += "samples = " + std::to_string(s.samples) + "\n";
    out += "param,fitted,theory,rel_dev\n";
    auto line = [&](const char* name, double f, double t) {
        out += std::string(name) + "," + fmt(f) + "," + fmt(t) + "," + fmt(t == 0.0 ? std::abs(f) : std::abs(f - t) / std::abs(t)) +
               "\n";
    };
    line("xi", s.fitted.shape, s.theory.shape);
    line("sigma", s.fitted.scale, s.theory.scale);
    line("mu", s.fitted.location, s.theory.location);
    out += "ks = " + fmt(s.ks) + "\n";
    return out;
}

std::string gpd_histogram_csv(const GpdFitSummary& s) {
    if (s.z.empty()) throw DomainError("gpd_histogram_csv: samples were not kept");
    constexpr int kBins = 200;
    std::vector<long long> counts(kBins, 0);
    const double width = static_cast<double>(s.m) / kBins;
    for (double v : s.z) {
        int b = static_cast<int>(v / width);
        b = std::min(std::max(b, 0), kBins - 1);
        ++counts[b];
    }
    std::string out = "bin_lo,bin_hi,empirical_density,exact_density,fitted_density\n";
    const double n = static_cast<double>(s.z.size());
    for (int b = 0; b < kBins; ++b) {
        const double lo = b * width;
        const double hi = lo + width;
        const double exact = (gpd_cdf(hi, s.m) - gpd_cdf(lo, s.m)) / width;
        const double fitted = (gpd_distribution(hi, s.fitted) - gpd_distribution(lo, s.fitted)) / width;
        out += fmt(lo) + "," + fmt(hi) + "," + fmt(counts[b] / n / width) + "," + fmt(exact) + "," + fmt(fitted) + "\n";
    }
    return out;
}

std::pair<std::string, std::string> split_override(std::string_view kv) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw ConfigError(ConfigErrc::parse, "override must be key=value");
    return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

}  // namespace serlink
