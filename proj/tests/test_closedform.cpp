#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "serlink/closedform.hpp"
#include "serlink/numerics.hpp"

using namespace serlink;
using numerics::regularized_gamma_lower;

namespace {

constexpr double kOff = -std::numeric_limits<double>::infinity();

SystemConfig hd(int m, int p = 0) {
    SystemConfig c;
    c.q_chains = c.m_tx = c.n_rx = m;
    c.p_eh_antennas = p;
    return c;
}

SystemConfig fd(int m, int n, int p = 0) {
    SystemConfig c;
    c.mode = Duplex::FD;
    c.tau = 1.0;
    c.phi_si_db = -20.0;  // fixtures are pinned at this near-field gain
    c.q_chains = m + n;
    c.m_tx = m;
    c.n_rx = n;
    c.p_eh_antennas = p;
    return c;
}

bool rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

}  // namespace

// Reference values below come from direct high-precision quadrature of the
// outage events over the exact channel laws.

TEST_CASE("HD uplink") {
    CHECK(rel(outage_hd_sbs(hd(16)), 0.21471425668849334, 1e-12));
    SystemConfig c = hd(16);
    c.r_sbs = 1e-9;
    CHECK(outage_hd_sbs(c) < 1e-30);
    for (double pg : {5.0, 10.0, 15.0}) {
        SystemConfig v = hd(16, 6);
        v.p_source_w = pg;
        CHECK(outage_hd_sbs(v) == outage_hd_sbs(hd(16)));
    }
}

TEST_CASE("HD downlink against reference values") {
    auto cfg = [](int m, int p, double rd, double phi) {
        SystemConfig c = hd(m, p);
        c.r_d = rd;
        c.phi_td_db = phi;
        return c;
    };
    const auto num = HdVariant::numeric_z_integral;
    CHECK(rel(outage_hd_d(cfg(8, 6, 6, -90), num), 0.99998915872901923, 1e-9));
    CHECK(rel(outage_hd_d(cfg(16, 6, 4, -90), num), 1.2060274266072672e-10, 1e-7));
    CHECK(rel(outage_hd_d(cfg(4, 3, 5, -85), num), 0.17330795162822296, 1e-9));
    CHECK(rel(evaluate(cfg(4, 3, 5, -85)).p_out_d, 0.17330795162822296, 1e-9));
}

TEST_CASE("HD downlink reduces to the MRT outage without recycling") {
    for (int m : {2, 8, 16}) {
        SystemConfig c = hd(m);
        c.phi_td_db = -95.0;
        const LinkBudget lb = derive(c);
        const double a2 = (std::exp2(c.r_d / c.tau) - 1.0) * c.noise_w / (lb.p_rf * lb.phi_td);
        CHECK(rel(outage_hd_d(c, HdVariant::numeric_z_integral), regularized_gamma_lower(m, a2), 1e-12));
        CHECK(rel(outage_hd_d(c, HdVariant::closed_form_1f1), regularized_gamma_lower(m, a2), 1e-9));
    }
    SystemConfig c = hd(8, 6);
    c.r_d = 1e-9;
    CHECK(outage_hd_d(c, HdVariant::numeric_z_integral) < 1e-30);
}

TEST_CASE("HD downlink routes agree wherever clamping is inactive") {
    int compared = 0;
    for (int m : {2, 4, 8, 12, 16}) {
        for (int p : {0, 2, 6}) {
            for (double rd : {1.0, 3.0, 5.0, 6.0}) {
                for (double phi : {-70.0, -80.0, -90.0}) {
                    SystemConfig c = hd(m, p);
                    c.r_d = rd;
                    c.phi_td_db = phi;
                    if (hd_clamping_active(c)) continue;
                    ++compared;
                    const double a = outage_hd_d(c, HdVariant::closed_form_1f1);
                    const double b = outage_hd_d(c, HdVariant::numeric_z_integral);
                    CAPTURE(m); CAPTURE(p); CAPTURE(rd); CAPTURE(phi);
                    CHECK(std::abs(a - b) <= kHdVariantTolerance);
                }
            }
        }
    }
    CHECK(compared > 100);
}

TEST_CASE("HD clamping is detected") {
    SystemConfig c = hd(16, 20);
    c.phi_g_db = -5.0;
    CHECK(hd_clamping_active(c));
    const OutageReport r = evaluate(c);
    CHECK(r.diagnostics.at("clamping_active") == 1.0);
    CHECK(r.p_out_d >= 0.0);
    CHECK(r.p_out_d <= 1.0);
    CHECK_FALSE(hd_clamping_active(hd(16, 0)));
}

TEST_CASE("FD downlink against reference values") {
    SystemConfig a = fd(8, 8, 6);
    a.phi_ud_db = -60.0;
    CHECK(rel(outage_fd_d(a), 0.65720219733373516, 1e-9));
    SystemConfig b = fd(5, 11, 0);
    b.r_d = 6.0;
    b.phi_ud_db = -60.0;
    CHECK(rel(outage_fd_d(b), 0.94632808131813671, 1e-9));

    const FdDResult d = outage_fd_d_detail(a, ZModel::mean_field);
    CHECK(d.interference);
    CHECK(d.paper_form >= 0.0);
    CHECK(d.paper_form <= 1.0);
    CHECK(d.rederived_form >= 0.0);
    const OutageReport r = evaluate(a);
    CHECK(r.diagnostics.count("fd_d_paper_form") == 1);
    CHECK(r.diagnostics.count("fd_d_rederived_form") == 1);
}

TEST_CASE("FD downlink without interference or recycling is the MRT outage") {
    SystemConfig c = fd(6, 10);
    c.phi_ud_db = kOff;
    c.r_d = 6.0;
    c.phi_td_db = -90.0;
    const LinkBudget lb = derive(c);
    const double x = (std::exp2(c.r_d) - 1.0) * c.noise_w / (lb.phi_td * lb.p_rf);
    CHECK(rel(outage_fd_d(c), regularized_gamma_lower(6, x), 1e-12));
    CHECK_FALSE(outage_fd_d_detail(c, ZModel::averaged).interference);
}

TEST_CASE("FD uplink against reference values") {
    SystemConfig a = fd(8, 8, 6);
    a.phi_ur_db = -75.0;
    CHECK(rel(outage_fd_sbs(a), 1.6339808762241764e-07, 1e-6));
    SystemConfig b = fd(3, 4, 0);
    b.r_sbs = 2.0;
    CHECK(rel(outage_fd_sbs(b), 3.6393157530693868e-05, 1e-7));
    SystemConfig c = fd(6, 10, 6);
    c.r_sbs = 3.0;
    CHECK(rel(outage_fd_sbs(c), 2.6054282653260721e-08, 1e-6));
}

TEST_CASE("FD uplink mean-field routes against reference values") {
    SystemConfig a = fd(8, 8, 6);
    CHECK(rel(fd_sbs_mean_field_gl(a, 200), 1.8869363512306054e-05, 1e-7));
    CHECK(rel(fd_sbs_mean_field_q_integral(a), 1.8869363512306054e-05, 1e-7));
    CHECK(rel(fd_sbs_z_integral(a, ZModel::mean_field), 1.8869363512306054e-05, 1e-7));
    a.z_model = ZModel::mean_field;
    CHECK(rel(evaluate(a).p_out_sbs, 1.8869363512306054e-05, 1e-7));

    SystemConfig b = fd(5, 11, 6);
    b.r_sbs = 3.0;
    // 1 - Σ form: absolute accuracy only.
    CHECK(std::abs(fd_sbs_mean_field_gl(b, 200) - 8.6971250723335556e-11) <= 1e-12);
}

TEST_CASE("FD uplink routes coincide without recycling") {
    for (auto [m, n] : {std::pair{2, 2}, std::pair{3, 4}, std::pair{8, 8}, std::pair{4, 12}, std::pair{12, 4}}) {
        for (double rs : {1.0, 3.0, 5.0}) {
            SystemConfig c = fd(m, n, 0);
            c.r_sbs = rs;
            c.phi_si_db = 0.0;
            const double avg = fd_sbs_z_integral(c, ZModel::averaged);
            const double mf = fd_sbs_z_integral(c, ZModel::mean_field);
            const double gl = fd_sbs_mean_field_gl(c, 200);
            const double qi = fd_sbs_mean_field_q_integral(c);
            CAPTURE(m); CAPTURE(n); CAPTURE(rs);
            CHECK(avg == doctest::Approx(mf).epsilon(1e-9));
            CHECK(std::abs(gl - qi) <= kFdSbsFallbackTolerance);
            CHECK(std::abs(gl - qi) <= 1e-6);
            CHECK(rel(avg, qi, 1e-6));
        }
    }
}

TEST_CASE("FD uplink without self-interference is the MRC outage") {
    SystemConfig c = fd(8, 8, 0);
    c.zeta_db = -400.0;
    const LinkBudget lb = derive(c);
    const double x = (std::exp2(c.r_sbs) - 1.0) * c.noise_w / (c.p_u_w * lb.phi_ur);
    CHECK(rel(outage_fd_sbs(c), regularized_gamma_lower(8, x), 1e-9));
    c.r_sbs = 1e-9;
    CHECK(outage_fd_sbs(c) < 1e-30);
}

TEST_CASE("evaluate dispatch") {
    const OutageReport h = evaluate(hd(16));
    CHECK(h.method == Method::closed_form);
    CHECK(h.minmax == std::max(h.p_out_d, h.p_out_sbs));
    const OutageReport f = evaluate(fd(8, 8, 6));
    CHECK(f.minmax == std::max(f.p_out_d, f.p_out_sbs));
    SystemConfig bad = fd(8, 8);
    bad.n_rx = 9;
    CHECK_THROWS_AS(evaluate(bad), ConfigError);
    CHECK(to_string(Method::closed_form) == "closed-form");
}

TEST_CASE("probabilities stay in [0, 1] and move the right way") {
    for (int m : {2, 5, 8, 11}) {
        for (double rate : {1.0, 3.0, 6.0}) {
            for (double phi : {-60.0, -75.0, -90.0}) {
                double prev_d = 2.0, prev_fdd = 2.0, prev_sbs = -1.0;
                for (int p : {0, 2, 4, 6}) {
                    SystemConfig h = hd(m, p);
                    h.r_d = h.r_sbs = rate;
                    h.phi_td_db = h.phi_ur_db = phi;
                    const OutageReport rh = evaluate(h);
                    SystemConfig f = fd(m, 16 - m, p);
                    f.r_d = f.r_sbs = rate;
                    f.phi_td_db = f.phi_ur_db = phi;
                    f.phi_ud_db = kOff;
                    const OutageReport rf = evaluate(f);
                    for (double v : {rh.p_out_d, rh.p_out_sbs, rf.p_out_d, rf.p_out_sbs}) {
                        CHECK(v >= 0.0);
                        CHECK(v <= 1.0);
                    }
                    // Recycling lowers both downlinks and raises the FD uplink.
                    CHECK(rh.p_out_d <= prev_d * (1 + 1e-9));
                    CHECK(rf.p_out_d <= prev_fdd * (1 + 1e-9));
                    CHECK(rf.p_out_sbs >= prev_sbs * (1 - 1e-9));
                    prev_d = rh.p_out_d;
                    prev_fdd = rf.p_out_d;
                    prev_sbs = rf.p_out_sbs;
                }
            }
        }
    }
}

TEST_CASE("monotone in power, rate and cancellation residue") {
    double prev = 2.0;
    for (double pg = 3.0; pg <= 20.0; pg += 1.0) {
        SystemConfig c = hd(8, 6);
        c.p_source_w = pg;
        c.phi_td_db = -90.0;
        const double v = outage_hd_d(c, HdVariant::numeric_z_integral);
        CHECK(v <= prev);
        prev = v;
    }
    prev = -1.0;
    for (double rd = 1.0; rd <= 8.0; rd += 0.5) {
        SystemConfig c = fd(6, 10, 6);
        c.r_d = rd;
        c.phi_ud_db = -60.0;
        const double v = outage_fd_d(c);
        CHECK(v >= prev);
        prev = v;
    }
    prev = -1.0;
    for (double rs = 1.0; rs <= 6.0; rs += 0.5) {
        SystemConfig c = fd(6, 10, 6);
        c.r_sbs = rs;
        const double v = outage_fd_sbs(c);
        CHECK(v >= prev);
        prev = v;
    }
    prev = -1.0;
    for (double zeta = -120.0; zeta <= -80.0; zeta += 5.0) {
        SystemConfig c = fd(6, 10, 6);
        c.zeta_db = zeta;
        const double v = outage_fd_sbs(c);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("HD links cross where the received powers match") {
    // Without recycling the two HD thresholds share the rate factor, so the
    // downlink becomes the better link once P_RF·φ_td exceeds P_u·φ_ur.
    SystemConfig c = hd(16);
    c.phi_ur_db = -75.0;
    c.phi_td_db = -90.0;
    c.phi_ud_db = kOff;
    const double p_rf_cross = c.p_u_w * std::pow(10.0, 1.5);
    const double pg_cross = p_rf_cross + circuit_power(16, 16, c.circuit);
    for (double pg : {pg_cross - 0.2, pg_cross + 0.2}) {
        c.p_source_w = pg;
        const OutageReport r = evaluate(c);
        if (pg < pg_cross) CHECK(r.p_out_d > r.p_out_sbs);
        else CHECK(r.p_out_d < r.p_out_sbs);
    }
}

TEST_CASE("uplink kernel pieces") {
    const double ref = uplink_kernel_reference(3, 4, 20.0, 2, 2, 2);
    CHECK(ref == doctest::Approx(3.97000072e-06).epsilon(1e-7));
    CHECK(uplink_kernel(0.0, 3, 4, 20.0, 2, 2, 2) == doctest::Approx(std::exp(-240.0)).epsilon(1e-12));
    CHECK(std::isfinite(uplink_kernel_gl(3, 4, 20.0, 2, 2, 2, 80)));
}
