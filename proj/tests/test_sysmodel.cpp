#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <set>

#include "serlink/sysmodel.hpp"

using namespace serlink;

namespace {

SystemConfig fd_cfg(int q, int m) {
    SystemConfig c;
    c.mode = Duplex::FD;
    c.tau = 1.0;
    c.q_chains = q;
    c.m_tx = m;
    c.n_rx = q - m;
    return c;
}

ConfigErrc code_of(const SystemConfig& c) {
    try {
        validate(c);
    } catch (const ConfigError& e) {
        return e.code();
    }
    FAIL("config was accepted");
    return ConfigErrc::parse;
}

}  // namespace

TEST_CASE("dB conversion") {
    CHECK(db_to_linear(0.0) == 1.0);
    CHECK(db_to_linear(-80.0) == doctest::Approx(1e-8).epsilon(1e-14));
    CHECK(db_to_linear(-std::numeric_limits<double>::infinity()) == 0.0);
}

TEST_CASE("circuit power") {
    const CircuitProfile cp;
    CHECK(circuit_power(0, 0, cp) == doctest::Approx(0.100).epsilon(1e-14));
    CHECK(circuit_power(8, 8, cp) == doctest::Approx(0.8248).epsilon(1e-13));
    CHECK(circuit_power(16, 16, cp) == doctest::Approx(1.5496).epsilon(1e-13));
    // Linear and monotone in both counts.
    for (int m = 0; m < 16; ++m) {
        CHECK(circuit_power(m + 1, 4, cp) - circuit_power(m, 4, cp) == doctest::Approx(0.0338).epsilon(1e-12));
        CHECK(circuit_power(4, m + 1, cp) - circuit_power(4, m, cp) == doctest::Approx(0.0568).epsilon(1e-12));
    }
}

TEST_CASE("transmit power") {
    CHECK(transmit_power_rf(15.0, 0.0, 0.0) == 15.0);
    CHECK(transmit_power_rf(15.0, 1.5496, 0.0) == doctest::Approx(13.4504).epsilon(1e-14));
    CHECK(transmit_power_rf(15.0, 0.8248, 0.0) == doctest::Approx(14.1752).epsilon(1e-14));
    for (double pc : {0.1, 0.8, 3.0}) {
        CHECK(transmit_power_rf(15.0, pc, 0.0, AlphaVariant::paper) ==
              transmit_power_rf(15.0, pc, 0.0, AlphaVariant::conserving));
    }
    CHECK(transmit_power_rf(15.0, 1.0, 0.5, AlphaVariant::paper) == doctest::Approx(28.0));
    CHECK(transmit_power_rf(15.0, 1.0, 0.5, AlphaVariant::conserving) == doctest::Approx(14.0 / 1.5));
    double prev = INFINITY;
    for (double pc = 0.0; pc < 14.0; pc += 0.5) {
        const double p = transmit_power_rf(15.0, pc, 0.2, AlphaVariant::conserving);
        CHECK(p < prev);
        prev = p;
    }
    CHECK_THROWS_AS(transmit_power_rf(1.0, 1.0, 0.0), InfeasibleError);
    CHECK_THROWS_AS(transmit_power_rf(15.0, 1.0, 1.0, AlphaVariant::paper), InfeasibleError);
}

TEST_CASE("amplifier alpha") {
    CHECK(amp_alpha_from(1.0, 1.0) == 0.0);
    CHECK(amp_alpha_from(0.35, 0.35) == 0.0);
    CHECK(amp_alpha_from(1.4, 0.35) == doctest::Approx(3.0));
    CHECK_THROWS_AS(amp_alpha_from(0.2, 0.35), DomainError);
    CHECK_THROWS_AS(amp_alpha_from(1.0, 0.0), DomainError);
}

TEST_CASE("validation uses a distinct code per constraint") {
    std::set<ConfigErrc> seen;
    auto expect = [&](SystemConfig c, ConfigErrc code) {
        CHECK(code_of(c) == code);
        seen.insert(code);
    };
    SystemConfig c;
    validate(c);
    validate(fd_cfg(16, 8));

    c = SystemConfig{}; c.q_chains = 1; c.m_tx = c.n_rx = 1; expect(c, ConfigErrc::chain_count);
    expect(fd_cfg(16, 1), ConfigErrc::antenna_minimum);
    c = fd_cfg(16, 8); c.n_rx = 9; expect(c, ConfigErrc::chain_sum);
    c = SystemConfig{}; c.m_tx = 8; expect(c, ConfigErrc::hd_antennas);
    c = SystemConfig{}; c.tau = 1.0; expect(c, ConfigErrc::hd_tau);
    c = fd_cfg(16, 8); c.tau = 0.5; expect(c, ConfigErrc::fd_tau);
    c = SystemConfig{}; c.p_u_w = 0.0; expect(c, ConfigErrc::power_nonpositive);
    c = SystemConfig{}; c.eta = 1.5; expect(c, ConfigErrc::eta_range);
    c = SystemConfig{}; c.zeta_db = 3.0; expect(c, ConfigErrc::zeta_range);
    c = SystemConfig{}; c.p_eh_antennas = -1; expect(c, ConfigErrc::eh_antennas);
    c = SystemConfig{}; c.g_mag2 = 0.0; expect(c, ConfigErrc::channel_magnitude);
    c = SystemConfig{}; c.r_d = 0.0; expect(c, ConfigErrc::rate_nonpositive);
    c = SystemConfig{}; c.amp_alpha = -0.1; expect(c, ConfigErrc::alpha_negative);
    c = SystemConfig{}; c.circuit.p_syn_w = 0.0; expect(c, ConfigErrc::circuit_nonpositive);
    CHECK(seen.size() == 14);
}

TEST_CASE("derived link budget") {
    const LinkBudget hd = derive(SystemConfig{});
    CHECK(hd.m == 16);
    CHECK(hd.tau == 0.5);
    CHECK(hd.p_c == doctest::Approx(1.5496));
    CHECK(hd.p_rf == doctest::Approx(13.4504));
    CHECK(hd.c == 0.0);

    SystemConfig c = fd_cfg(16, 8);
    c.p_eh_antennas = 6;
    const LinkBudget fd = derive(c);
    CHECK(fd.tau == 1.0);
    CHECK(fd.p_rf == doctest::Approx(14.1752));
    CHECK(fd.c == doctest::Approx(0.6 * 6 * std::pow(10.0, -1.5)).epsilon(1e-14));
    CHECK(fd.phi_ud == doctest::Approx(1e-6));

    c.ideal_power = true;
    CHECK(derive(c).p_rf == 15.0);

    SystemConfig no_rx;
    no_rx.hd_circuit_rx = false;
    CHECK(derive(no_rx).p_c == doctest::Approx(circuit_power(16, 0, CircuitProfile{})));

    SystemConfig starved;
    starved.p_source_w = 1.0;
    CHECK_THROWS_AS(derive(starved), InfeasibleError);
}

TEST_CASE("total power and the recycling cap") {
    SystemConfig c = fd_cfg(16, 8);
    c.p_eh_antennas = 6;
    const LinkBudget lb = derive(c);
    bool capped = true;
    CHECK(total_power(lb, 0.0, &capped) == lb.p_rf);
    CHECK_FALSE(capped);
    const double t = lb.c * 1.0;
    CHECK(total_power(lb, 1.0) == doctest::Approx(lb.p_rf / (1.0 - t)).epsilon(1e-14));
    CHECK(total_power(lb, 100.0, &capped) == doctest::Approx(lb.p_rf + kEnergyCapFactor * c.p_source_w));
    CHECK(capped);
}

TEST_CASE("config text round trip") {
    SystemConfig c = fd_cfg(12, 5);
    c.p_eh_antennas = 3;
    c.phi_ud_db = -std::numeric_limits<double>::infinity();
    c.r_d = 5.5;
    c.zeta_db = -97.25;
    c.alpha_variant = AlphaVariant::conserving;
    c.z_model = ZModel::mean_field;
    c.circuit.p_mix_w = 0.0301;
    const std::string text = serialize_config(c);
    const SystemConfig back = parse_config_text(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
    for (const auto& key : config_keys()) {
        CHECK(is_config_key(key));
        CHECK(get_field(back, key) == get_field(c, key));
    }
}

TEST_CASE("config parsing errors") {
    auto code = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return e.code();
        }
        return ConfigErrc{};
    };
    CHECK(code("bogus_key = 1\n") == ConfigErrc::unknown_key);
    CHECK(code("m_tx = eight\n") == ConfigErrc::parse);
    CHECK(code("m_tx 8\n") == ConfigErrc::parse);
    CHECK(code("mode = TDD\n") == ConfigErrc::parse);
    const SystemConfig c = parse_config_text("# comment\n  mode = FD  # trailing\ntau=1\nm_tx = 6\nn_rx = 10\n");
    CHECK(c.mode == Duplex::FD);
    CHECK(c.m_tx == 6);
    CHECK(c.n_rx == 10);
    CHECK(parse_int("1e7", "x") == 10'000'000);
    CHECK_THROWS_AS(parse_int("2.5", "x"), ConfigError);
}
