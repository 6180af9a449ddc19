#pragma once

// Link configuration, unit conversion and the transceiver power model.

#include <string>
#include <string_view>
#include <vector>

#include "serlink/errors.hpp"

namespace serlink {

enum class Duplex { HD, FD };

/// Sign convention for the amplifier-loss term in the transmit-power relation.
enum class AlphaVariant {
    paper,       ///< P_RF = (P_G - P_c) / (1 - α)
    conserving,  ///< P_RF = (P_G - P_c) / (1 + α)
};

/// How FD analytic evaluators treat the leakage ratio z_td in the recycling loop.
enum class ZModel {
    averaged,    ///< integrate over the exact z_td distribution
    mean_field,  ///< replace z_td by its mean 1
};

enum class ConfigErrc {
    unknown_key = 1,
    parse,
    chain_count,
    antenna_minimum,
    chain_sum,
    hd_antennas,
    hd_tau,
    fd_tau,
    power_nonpositive,
    eta_range,
    zeta_range,
    eh_antennas,
    channel_magnitude,
    rate_nonpositive,
    alpha_negative,
    circuit_nonpositive,
};

/// Configuration rejected by the parser or validator; code() identifies the constraint.
class ConfigError : public Error {
public:
    ConfigError(ConfigErrc code, const std::string& what) : Error(what), code_(code) {}
    ConfigErrc code() const noexcept { return code_; }

private:
    ConfigErrc code_;
};

/// Per-block power draw of the RF front end, watts.
struct CircuitProfile {
    double p_dac_w = 1e-3;
    double p_adc_w = 1e-3;
    double p_mix_w = 30.3e-3;
    double p_lna_w = 20e-3;
    double p_ifa_w = 3e-3;
    double p_filt_w = 2.5e-3;
    double p_filr_w = 2.5e-3;
    double p_syn_w = 50e-3;

    bool operator==(const CircuitProfile&) const = default;
};

struct SystemConfig {
    int q_chains = 16;
    int m_tx = 16;
    int n_rx = 16;  ///< HD receives on the same Q antennas, so n_rx = q_chains there
    int p_eh_antennas = 0;
    Duplex mode = Duplex::HD;
    double tau = 0.5;
    double p_source_w = 15.0;
    double p_u_w = 0.2;
    double noise_w = 1e-10;
    double eta = 0.6;
    double zeta_db = -100.0;
    double phi_td_db = -80.0;
    double phi_ur_db = -80.0;
    double phi_ud_db = -60.0;  ///< -inf switches interference at D off
    double phi_g_db = -15.0;
    double phi_si_db = 0.0;
    double g_mag2 = 1.0;
    double gs_mag2 = 1.0;
    double r_d = 4.0;
    double r_sbs = 4.0;
    double amp_alpha = 0.0;
    CircuitProfile circuit;

    AlphaVariant alpha_variant = AlphaVariant::paper;
    bool hd_circuit_rx = true;  ///< HD counts Q receive chains in P_c
    bool ideal_power = false;   ///< P_RF = P_G, circuit consumption ignored
    ZModel z_model = ZModel::averaged;

    bool operator==(const SystemConfig&) const = default;
};

/// Linear-unit quantities derived from a validated configuration.
struct LinkBudget {
    int m = 0;          ///< transmit antennas
    int n = 0;          ///< receive antennas
    double tau = 1.0;   ///< DL time fraction (1 in FD)
    double p_rf = 0.0;  ///< radiated power from the supply
    double p_c = 0.0;   ///< circuit consumption
    double c = 0.0;     ///< loop gain η·P·φ_g·|g|²
    double noise = 0.0;
    double p_u = 0.0;
    double phi_td = 0.0;
    double phi_ur = 0.0;
    double phi_ud = 0.0;
    double si_gain = 0.0;  ///< ζ·φ_SI·|g_s|²
    double p_eh_cap = 0.0; ///< per-draw ceiling on recycled power
};

/// 10^{dB/10}; -inf maps to 0.
double db_to_linear(double db);

/// P_c = m(P_dac + P_mix + P_filt) + 2 P_syn + n(P_lna + P_mix + P_ifa + P_filr + P_adc).
double circuit_power(int m_tx, int n_rx, const CircuitProfile& circuit);

/// Radiated power left after circuit consumption and amplifier loss.
double transmit_power_rf(double p_source_w, double p_c_w, double amp_alpha,
                         AlphaVariant variant = AlphaVariant::paper);

/// α = ε/η_pa - 1.
double amp_alpha_from(double epsilon, double eta_pa);

/// Throws ConfigError on the first violated constraint.
void validate(const SystemConfig& cfg);

/// Validates and converts to linear units. Throws InfeasibleError when the
/// circuit consumes the whole supply.
LinkBudget derive(const SystemConfig& cfg);

/// Ceiling on recycled power per draw, as a multiple of P_G.
inline constexpr double kEnergyCapFactor = 10.0;

/// P_RF + min(P_EH(z), cap) for a given leakage ratio; the capped flag reports
/// whether the ceiling (or loop divergence) was hit.
double total_power(const LinkBudget& lb, double z, bool* capped = nullptr);

// Key-value text format: one `key = value` per line, `#` starts a comment.

const std::vector<std::string>& config_keys();
bool is_config_key(std::string_view key);
void set_field(SystemConfig& cfg, std::string_view key, std::string_view value);
std::string get_field(const SystemConfig& cfg, std::string_view key);

/// Parses without validating, so callers can apply overrides first.
SystemConfig parse_config_text(std::string_view text, SystemConfig base = {});
SystemConfig load_config(const std::string& path);
std::string serialize_config(const SystemConfig& cfg);

std::string to_string(Duplex d);
std::string to_string(ZModel z);
std::string to_string(AlphaVariant v);

/// Shared helpers for the key-value formats.
std::string trim(std::string_view s);
double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

}  // namespace serlink
