#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "serlink/runner.hpp"

using namespace serlink;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("serlink_runner_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    int col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        FAIL("missing column " << name);
        return -1;
    }
};

Csv parse_csv(const std::string& text) {
    Csv c;
    auto lines = split(text, '\n');
    REQUIRE(!lines.empty());
    c.header = split(lines[0], ',');
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (!lines[i].empty()) c.rows.push_back(split(lines[i], ','));
    }
    return c;
}

const char* cli() { return std::getenv("SERLINK_CLI"); }

int run_cli(const std::string& args, const fs::path& out, const fs::path& err) {
    const std::string cmd = std::string(cli()) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("value lists") {
    CHECK(parse_value_list("1, 2.5,4") == std::vector<double>{1.0, 2.5, 4.0});
    const auto r = parse_value_list("-90:2.5:-60");
    REQUIRE(r.size() == 13);
    CHECK(r.front() == -90.0);
    CHECK(r.back() == -60.0);
    CHECK(parse_value_list("1:0.1:2").size() == 11);
    CHECK_THROWS_AS(parse_value_list(""), ConfigError);
    CHECK_THROWS_AS(parse_value_list("1:0:2"), ConfigError);
    CHECK_THROWS_AS(parse_value_list("a,b"), ConfigError);
}

TEST_CASE("axes and axis application") {
    const Axis a = parse_axis("phi_td_db+phi_ur_db: -90, -80");
    CHECK(a.fields == std::vector<std::string>{"phi_td_db", "phi_ur_db"});
    CHECK(a.label() == "phi_td_db+phi_ur_db");
    SystemConfig c;
    apply_axis_value(c, a, -85.0);
    CHECK(c.phi_td_db == -85.0);
    CHECK(c.phi_ur_db == -85.0);
    CHECK_THROWS_AS(parse_axis("no_such_field: 1"), ConfigError);
    CHECK_THROWS_AS(parse_axis("r_d"), ConfigError);

    SystemConfig f;
    f.mode = Duplex::FD;
    f.tau = 1.0;
    f.m_tx = f.n_rx = 8;
    apply_axis_value(f, parse_axis("m_tx: 5"), 5.0);
    CHECK(f.m_tx == 5);
    CHECK(f.n_rx == 11);

    SystemConfig h;
    apply_axis_value(h, parse_axis("q_chains: 8"), 8.0);
    CHECK(h.q_chains == 8);
    CHECK(h.m_tx == 8);
    CHECK(h.n_rx == 8);
}

TEST_CASE("sweep files") {
    const SweepSpec s = parse_sweep_text(
        "# comment\nmode = FD\ntau = 1\nm_tx = 8\nn_rx = 8\naxis1 = r_d: 2, 4\naxis2 = r_sbs: 1:1:3\n"
        "evaluator = mc\nmc_budget = 1e5\nseed = 9\n");
    CHECK(s.base.mode == Duplex::FD);
    CHECK(s.axis1.values.size() == 2);
    REQUIRE(s.axis2);
    CHECK(s.axis2->values.size() == 3);
    CHECK(s.evaluator == Evaluator::monte_carlo);
    CHECK(s.mc_budget == 100000);
    CHECK(s.seed == 9);
    CHECK_THROWS_AS(parse_sweep_text("r_d = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_text("axis1 = r_d: 4\nevaluator = nope\n"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_text("axis1 = r_d: 4\nbogus = 1\n"), ConfigError);
    for (Evaluator e : {Evaluator::closed_form, Evaluator::monte_carlo, Evaluator::optimize_p1, Evaluator::optimize_p2,
                        Evaluator::fit_gpd, Evaluator::gl_check}) {
        CHECK(parse_evaluator(to_string(e)) == e);
    }
}

TEST_CASE("sweep CSV layout") {
    SweepSpec s;
    s.axis1 = parse_axis("r_d: 2, 4, 6");
    s.axis2 = parse_axis("r_sbs: 1, 3");
    const Csv c = parse_csv(run_sweep_csv(s));
    CHECK(c.header == std::vector<std::string>{"r_d", "r_sbs", "p_out_d", "p_out_sbs", "minmax", "method", "ci_d",
                                               "ci_sbs", "capped_draws"});
    REQUIRE(c.rows.size() == 6);
    CHECK(c.rows[0][0] == "2");
    CHECK(c.rows[0][1] == "1");
    CHECK(c.rows[1][1] == "3");
    for (const auto& r : c.rows) {
        REQUIRE(r.size() == c.header.size());
        // 9 significant digits in scientific notation.
        CHECK(r[2].find('e') != std::string::npos);
        CHECK(r[2].find('.') == 1);
        CHECK(r[2].size() == std::string("1.23456789e-05").size());
        const double d = std::stod(r[2]), sbs = std::stod(r[3]), mm = std::stod(r[4]);
        CHECK(mm == std::max(d, sbs));
    }
    SweepSpec bad = s;
    bad.base.r_sbs = -1.0;
    bad.axis2.reset();
    CHECK_THROWS_AS(run_sweep_csv(bad), ConfigError);
}

TEST_CASE("atomic writes leave no temporary behind") {
    const fs::path p = scratch_dir() / "atomic.csv";
    write_file_atomic(p.string(), "x\n");
    write_file_atomic(p.string(), "y\n");
    CHECK(slurp(p) == "y\n");
    for (const auto& e : fs::directory_iterator(scratch_dir())) {
        CHECK(e.path().extension() != ".tmp");
    }
    write_file_atomic((scratch_dir() / "nested" / "a.csv").string(), "z");
    CHECK(slurp(scratch_dir() / "nested" / "a.csv") == "z");
}

TEST_CASE("every figure preset exists and its configs round-trip") {
    for (const char* name : {"fig4a", "fig4b", "fig5", "fig6", "fig7", "fig8", "fig9", "fig11", "fig12", "fig13",
                             "fig14"}) {
        CAPTURE(name);
        const Preset& p = find_preset(name);
        CHECK(!p.parts.empty());
        for (const auto& part : p.parts) {
            const std::string text = serialize_config(part.spec.base);
            const SystemConfig back = parse_config_text(text);
            CHECK(back == part.spec.base);
            CHECK(serialize_config(back) == text);
        }
    }
    CHECK_THROWS_AS(find_preset("fig10"), ConfigError);
    CHECK_THROWS_AS(run_preset("fig6", {}, scratch_dir().string()), ConfigError);
}

TEST_CASE("fig6 preset rows and rerun stability") {
    const fs::path d1 = scratch_dir() / "fig6a";
    const fs::path d2 = scratch_dir() / "fig6b";
    fs::create_directories(d1);
    fs::create_directories(d2);
    const auto w1 = run_preset("fig6", {{"r_d", "6"}, {"phi_si_db", "-20"}}, d1.string());
    const auto w2 = run_preset("fig6", {{"r_d", "6"}, {"phi_si_db", "-20"}}, d2.string());
    REQUIRE(w1.size() == 2);
    for (std::size_t i = 0; i < w1.size(); ++i) {
        const std::string a = slurp(w1[i]);
        CHECK(a == slurp(w2[i]));
        const Csv c = parse_csv(a);
        CHECK(c.rows.size() == 13);
        CHECK(c.rows.front()[0] == "2");
        CHECK(c.rows.back()[0] == "14");
    }
    // With 20 dB of extra near-field isolation the best split at P = 0 is 6/10.
    const Csv p0 = parse_csv(slurp(d1 / "fig6_p0.csv"));
    int best = 0;
    double best_v = INFINITY;
    for (const auto& r : p0.rows) {
        const double v = std::stod(r[p0.col("minmax")]);
        if (v < best_v) {
            best_v = v;
            best = std::stoi(r[0]);
        }
    }
    CHECK(best == 6);
}

TEST_CASE("fig11 chain count is nondecreasing in the uplink rate") {
    const fs::path d = scratch_dir() / "fig11";
    fs::create_directories(d);
    const auto w = run_preset("fig11", {}, d.string());
    REQUIRE(w.size() == 1);
    const Csv c = parse_csv(slurp(w[0]));
    REQUIRE(c.rows.size() == 24);
    // An infeasible row counts as q = infinity: later rates must stay infeasible.
    std::map<std::string, int> last;
    int feasible = 0;
    for (const auto& r : c.rows) {
        const bool ok = r[c.col("feasible")] == "true";
        const int q = ok ? std::stoi(r[c.col("q_min")]) : 1 << 30;
        const std::string rd = r[c.col("r_d")];
        if (last.count(rd)) CHECK(q >= last[rd]);
        last[rd] = q;
        if (ok) {
            ++feasible;
            CHECK(std::stoi(r[c.col("m_opt")]) + std::stoi(r[c.col("n_opt")]) == q);
        }
    }
    CHECK(feasible > 0);
}

TEST_CASE("MC sweeps are byte-identical at a fixed seed") {
    SweepSpec s;
    s.base.q_chains = s.base.m_tx = s.base.n_rx = 4;
    s.base.phi_td_db = -85.0;
    s.axis1 = parse_axis("r_d: 3, 5");
    s.evaluator = Evaluator::monte_carlo;
    s.mc_budget = 100000;
    s.seed = 17;
    const std::string a = run_sweep_csv(s);
    CHECK(a == run_sweep_csv(s));
    s.seed = 18;
    CHECK(a != run_sweep_csv(s));
    const Csv c = parse_csv(a);
    CHECK(c.rows[0][c.col("method")] == "monte-carlo");
}

TEST_CASE("gl-check and fit-gpd sweeps") {
    SweepSpec g;
    g.evaluator = Evaluator::gl_check;
    g.axis1 = parse_axis("gl_order: 20, 80, 200");
    g.gl_setup = 2;
    const Csv gc = parse_csv(run_sweep_csv(g));
    REQUIRE(gc.rows.size() == 3);
    CHECK(std::stod(gc.rows[2][gc.col("rel_err_mapped")]) <= 1e-8);

    SweepSpec f;
    f.evaluator = Evaluator::fit_gpd;
    f.axis1 = parse_axis("m_tx: 2, 16");
    f.mc_budget = 200000;
    const Csv fc = parse_csv(run_sweep_csv(f));
    REQUIRE(fc.rows.size() == 2);
    CHECK(std::stod(fc.rows[0][fc.col("xi_theory")]) == -1.0);
    CHECK(std::abs(std::stod(fc.rows[1][fc.col("xi_hat")]) + 1.0 / 15.0) <= 0.02);
}

TEST_CASE("fit-gpd summary and histogram") {
    const GpdFitSummary s = fit_gpd_summary(4, 200000, 3, true);
    CHECK(s.theory.scale == doctest::Approx(4.0 / 3.0));
    CHECK(s.theory.shape == doctest::Approx(-1.0 / 3.0));
    CHECK(s.ks <= 0.005);
    const Csv h = parse_csv(gpd_histogram_csv(s));
    CHECK(h.rows.size() == 200);
    double mass = 0.0;
    double exact = 0.0;
    for (const auto& r : h.rows) {
        mass += std::stod(r[h.col("empirical_density")]) * 4.0 / 200.0;
        exact += std::stod(r[h.col("exact_density")]) * 4.0 / 200.0;
    }
    CHECK(exact == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS(fit_gpd_summary(1, 1000, 1));
}

TEST_CASE("CLI behaviour") {
    if (!cli()) {
        MESSAGE("SERLINK_CLI not set, skipping");
        return;
    }
    const fs::path d = scratch_dir();
    const fs::path out = d / "cli.out", err = d / "cli.err";

    CHECK(run_cli("eval", out, err) == 0);
    const std::string rep = slurp(out);
    CHECK(rep.find("p_out_d = ") != std::string::npos);
    CHECK(rep.find("p_out_sbs = ") != std::string::npos);
    CHECK(rep.find("minmax = ") != std::string::npos);

    CHECK(run_cli("eval --set mode=FD --set tau=1 --set m_tx=5", out, err) != 0);
    const std::string msg = slurp(err);
    CHECK(msg.find("m_tx + n_rx = q_chains") != std::string::npos);
    CHECK(std::count(msg.begin(), msg.end(), '\n') == 1);

    CHECK(run_cli("eval --config " + (d / "nope.cfg").string(), out, err) != 0);

    const fs::path m1 = d / "mc1.txt", m2 = d / "mc2.txt";
    CHECK(run_cli("eval --method mc --samples 1e7 --seed 7 --out " + m1.string(), out, err) == 0);
    CHECK(run_cli("eval --method mc --samples 1e7 --seed 7 --out " + m2.string(), out, err) == 0);
    CHECK(slurp(m1) == slurp(m2));
    CHECK(slurp(m1).find("seed = 7") != std::string::npos);

    CHECK(run_cli("optimize p1 --set mode=FD --set tau=1 --set m_tx=8 --set n_rx=8 --set r_d=6 --set r_sbs=3 "
                  "--set phi_ud_db=-inf --set phi_si_db=-20",
                  out, err) == 0);
    CHECK(slurp(out).find("m_opt = 6") != std::string::npos);

    CHECK(run_cli("gl-check --setup 1 --orders 20,80", out, err) == 0);
    CHECK(run_cli("presets list", out, err) == 0);
    CHECK(slurp(out).find("fig14") != std::string::npos);
}
