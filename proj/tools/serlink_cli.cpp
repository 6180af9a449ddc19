#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "serlink/allocopt.hpp"
#include "serlink/closedform.hpp"
#include "serlink/mcsim.hpp"
#include "serlink/runner.hpp"
#include "serlink/sysmodel.hpp"

namespace {

using namespace serlink;

struct CommonOpts {
    std::string config;
    std::string method = "cf";
    std::string samples;
    std::optional<std::uint64_t> seed;
    std::optional<int> gl_order;
    std::string out;
    std::string alpha_variant;
    std::string z_model;
    std::vector<std::string> sets;
};

void add_config_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config, "Config file (key = value lines)");
    cmd->add_option("--alpha-variant", o.alpha_variant, "paper or conserving");
    cmd->add_option("--z-model", o.z_model, "averaged or mean_field");
    cmd->add_option("--set", o.sets, "Override a config key: key=value (repeatable)");
}

SystemConfig build_config(const CommonOpts& o) {
    SystemConfig cfg = o.config.empty() ? SystemConfig{} : load_config(o.config);
    if (!o.alpha_variant.empty()) set_field(cfg, "alpha_variant", o.alpha_variant);
    if (!o.z_model.empty()) set_field(cfg, "z_model", o.z_model);
    for (const auto& kv : o.sets) {
        const auto [k, v] = split_override(kv);
        set_field(cfg, k, v);
    }
    validate(cfg);
    return cfg;
}

long long samples_or(const CommonOpts& o, long long dflt) {
    return o.samples.empty() ? dflt : parse_int(o.samples, "--samples");
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(out, text);
    }
}

std::vector<int> parse_orders(const std::string& s) {
    std::vector<int> out;
    for (double v : parse_value_list(s)) out.push_back(static_cast<int>(v));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outage evaluation and antenna allocation for a small base station with self-energy recycling"};
    app.require_subcommand(1);

    CommonOpts eval_o;
    auto* eval = app.add_subcommand("eval", "Evaluate both link outages for one config");
    add_config_flags(eval, eval_o);
    eval->add_option("--method", eval_o.method, "cf or mc")->check(CLI::IsMember({"cf", "mc"}));
    eval->add_option("--samples", eval_o.samples, "MC draws (default 1e7)");
    eval->add_option("--seed", eval_o.seed, "MC seed (default 1)");
    eval->add_option("--gl-order", eval_o.gl_order, "Starting quadrature order for the uplink integral");
    eval->add_option("--out", eval_o.out, "Write the report here instead of stdout");

    CommonOpts sweep_o;
    auto* sweep = app.add_subcommand("sweep", "Run a sweep file and write CSV");
    sweep->add_option("--config", sweep_o.config, "Sweep file")->required();
    sweep->add_option("--out", sweep_o.out, "Output CSV path")->required();
    sweep->add_option("--samples", sweep_o.samples, "Override mc_budget");
    sweep->add_option("--seed", sweep_o.seed, "Override seed");
    sweep->add_option("--gl-order", sweep_o.gl_order, "Override gl_order");
    sweep->add_option("--alpha-variant", sweep_o.alpha_variant, "paper or conserving");
    sweep->add_option("--z-model", sweep_o.z_model, "averaged or mean_field");

    CommonOpts opt_o;
    std::string problem;
    std::optional<int> q_opt;
    double delta = 1e-5;
    int q_max = 32;
    auto* optimize = app.add_subcommand("optimize", "Antenna split (p1) or minimum chain count (p2)");
    optimize->add_option("problem", problem, "p1 or p2")->required()->check(CLI::IsMember({"p1", "p2"}));
    add_config_flags(optimize, opt_o);
    optimize->add_option("--q", q_opt, "Chain count for p1 (default q_chains)");
    optimize->add_option("--delta", delta, "Outage target for p2");
    optimize->add_option("--q-max", q_max, "Search limit for p2");
    optimize->add_option("--method", opt_o.method, "cf or mc")->check(CLI::IsMember({"cf", "mc"}));
    optimize->add_option("--samples", opt_o.samples, "MC draws per split");
    optimize->add_option("--seed", opt_o.seed, "MC seed");
    optimize->add_option("--gl-order", opt_o.gl_order, "Starting quadrature order");
    optimize->add_option("--out", opt_o.out, "Write the result here instead of stdout");

    int fit_m = 16;
    std::string fit_samples = "1e6";
    std::uint64_t fit_seed = 1;
    std::string fit_out;
    std::string fit_hist;
    auto* fit = app.add_subcommand("fit-gpd", "Fit a GPD to sampled leakage ratios");
    fit->add_option("--m", fit_m, "Antenna count")->required();
    fit->add_option("--samples", fit_samples, "Sample count");
    fit->add_option("--seed", fit_seed, "Seed");
    fit->add_option("--out", fit_out, "Write the table here instead of stdout");
    fit->add_option("--hist", fit_hist, "Write the 200-bin histogram CSV here");

    int gl_setup = 1;
    std::string gl_custom;
    std::string gl_orders = "10,20,40,80,160,200";
    std::string gl_out;
    auto* gl = app.add_subcommand("gl-check", "Quadrature convergence of the uplink integral");
    gl->add_option("--setup", gl_setup, "Kernel setup 1 or 2")->check(CLI::IsMember({1, 2}));
    gl->add_option("--custom", gl_custom, "M,N,a4,l,p,i");
    gl->add_option("--orders", gl_orders, "Orders as a list or start:step:stop");
    gl->add_option("--out", gl_out, "Write the table here instead of stdout");

    auto* pre = app.add_subcommand("presets", "Figure presets");
    pre->require_subcommand(1);
    pre->add_subcommand("list", "List presets");
    auto* pre_run = pre->add_subcommand("run", "Run one preset");
    std::string preset_name;
    std::string preset_out = "out";
    std::vector<std::string> preset_sets;
    std::string preset_samples;
    std::optional<std::uint64_t> preset_seed;
    pre_run->add_option("name", preset_name, "Preset name")->required();
    pre_run->add_option("--out", preset_out, "Output directory");
    pre_run->add_option("--set", preset_sets, "Override: key=value (repeatable)");
    pre_run->add_option("--samples", preset_samples, "Override the MC or fit sample budget");
    pre_run->add_option("--seed", preset_seed, "Override the seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*eval) {
            const SystemConfig cfg = build_config(eval_o);
            if (eval_o.method == "mc") {
                const McPair r = mc_run(cfg, samples_or(eval_o, 10'000'000), eval_o.seed.value_or(1));
                emit(format_mc_report(r), eval_o.out);
            } else {
                EvalOptions eo;
                if (eval_o.gl_order) eo.gl_order = *eval_o.gl_order;
                emit(format_report(evaluate(cfg, eo)), eval_o.out);
            }
        } else if (*sweep) {
            SweepSpec spec = load_sweep(sweep_o.config);
            if (!sweep_o.samples.empty()) spec.mc_budget = parse_int(sweep_o.samples, "--samples");
            if (sweep_o.seed) spec.seed = *sweep_o.seed;
            if (sweep_o.gl_order) spec.gl_order = *sweep_o.gl_order;
            if (!sweep_o.alpha_variant.empty()) set_field(spec.base, "alpha_variant", sweep_o.alpha_variant);
            if (!sweep_o.z_model.empty()) set_field(spec.base, "z_model", sweep_o.z_model);
            write_file_atomic(sweep_o.out, run_sweep_csv(spec));
        } else if (*optimize) {
            const SystemConfig cfg = build_config(opt_o);
            SolverOptions so;
            so.backend = opt_o.method == "mc" ? Backend::monte_carlo : Backend::closed_form;
            so.mc_samples = samples_or(opt_o, so.mc_samples);
            so.seed = opt_o.seed.value_or(1);
            if (opt_o.gl_order) so.gl_order = *opt_o.gl_order;
            if (problem == "p1") {
                emit(format_allocation(solve_p1(cfg, q_opt.value_or(cfg.q_chains), so), false), opt_o.out);
            } else {
                emit(format_allocation(solve_p2(cfg, delta, q_max, so), true), opt_o.out);
            }
        } else if (*fit) {
            const GpdFitSummary s =
                fit_gpd_summary(fit_m, parse_int(fit_samples, "--samples"), fit_seed, !fit_hist.empty());
            emit(format_gpd_fit(s), fit_out);
            if (!fit_hist.empty()) write_file_atomic(fit_hist, gpd_histogram_csv(s));
        } else if (*gl) {
            KernelSetup ks = kernel_setup(gl_setup);
            if (!gl_custom.empty()) {
                const std::vector<double> v = parse_value_list(gl_custom);
                if (v.size() != 6) throw ConfigError(ConfigErrc::parse, "--custom needs M,N,a4,l,p,i");
                ks = {static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], static_cast<int>(v[3]),
                      static_cast<int>(v[4]), static_cast<int>(v[5])};
            }
            emit(format_gl_check(gl_check(ks, parse_orders(gl_orders))), gl_out);
        } else if (*pre) {
            if (*pre_run) {
                std::vector<std::pair<std::string, std::string>> overrides;
                for (const auto& kv : preset_sets) overrides.push_back(split_override(kv));
                const long long budget = preset_samples.empty() ? 0 : parse_int(preset_samples, "--samples");
                for (const auto& path : run_preset(preset_name, overrides, preset_out, budget, preset_seed)) {
                    std::cout << path << "\n";
                }
            } else {
                for (const auto& p : presets()) {
                    std::cout << p.name << "  " << p.description;
                    for (const auto& r : p.required) std::cout << "  [requires --set " << r << "=...]";
                    std::cout << "\n";
                }
            }
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::fprintf(stderr, "error: %s\n", msg.c_str());
        return 2;
    }
    return 0;
}
