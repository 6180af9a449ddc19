#pragma once

// Channel sampling, the leakage ratio Z and the distributions built on it.

#include <complex>
#include <functional>
#include <vector>

#include "serlink/rng.hpp"
#include "serlink/sysmodel.hpp"

namespace serlink {

struct ChannelDraw {
    std::vector<std::complex<double>> h_td;  ///< length M
    std::vector<std::complex<double>> h_ur;  ///< length M in HD, N in FD
    std::complex<double> h_ud;
    double norm2_td = 0.0;
    double norm2_ur = 0.0;
    double z_td = 0.0;  ///< |Σ h_td|² / ‖h_td‖²
    double z_ur = 0.0;  ///< same functional of h_ur (FD only)
    double q = 0.0;     ///< z_td·z_ur (FD only)
};

/// Generalized Pareto parameters (location μ, scale σ, shape ξ).
struct GpdParams {
    double location = 0.0;
    double scale = 1.0;
    double shape = 0.0;
};

/// |Σ h_i|² / Σ|h_i|²; writes Σ|h_i|² to norm2 when given.
double leakage_ratio(const std::complex<double>* h, int n, double* norm2 = nullptr);

/// Fresh draw with every entry CN(0, 1).
ChannelDraw sample_draw(const SystemConfig& cfg, Rng& rng);

/// Same as sample_draw but reuses the buffers in `out`.
void sample_into(int m, int n_ur, bool fd, Rng& rng, ChannelDraw& out);

/// One Z sample for m antennas. Small m draws the channel vector; large m uses the
/// exact split Σh = √m·a, ‖h‖² = |a|² + G with a ~ CN(0, 1), G ~ Gamma(m - 1).
double sample_leakage_ratio(int m, Rng& rng);

/// Gamma(shape, 1) variate (Marsaglia-Tsang), shape >= 1.
double sample_gamma(double shape, Rng& rng);

/// Density of Z for m antennas: ((m-1)/m)(1 - z/m)^{m-2} on [0, m].
double gpd_pdf(double z, int m);

/// CDF of the same law, 1 - (1 - z/m)^{m-1}.
double gpd_cdf(double z, int m);

/// Generic generalized Pareto density and CDF.
double gpd_density(double x, const GpdParams& p);
double gpd_distribution(double x, const GpdParams& p);

/// Maximum-likelihood fit with the location fixed at 0. The shape is kept at or
/// above -1, where the likelihood is bounded.
GpdParams fit_gpd(const std::vector<double>& samples);

/// sup_x |F_n(x) - F(x)| for the empirical CDF of `samples`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Recycled power τ·c·z·P_RF / (1 - τ·c·z). Throws EnergyLoopError when τ·c·z >= 1.
double p_eh(double z, const LinkBudget& lb);
double p_eh(double z, const SystemConfig& cfg);

/// Density of P_EH, obtained from the Z law through the p_eh map. Requires at
/// least one EH antenna. Mass beyond the divergence point has no density.
double p_eh_pdf(double p, const SystemConfig& cfg);

/// Upper end of the P_EH support (infinite when the loop can diverge).
double p_eh_support_max(const SystemConfig& cfg);

/// Density of q = z_td·z_ur over (0, m·n).
double q_pdf(double q, int m, int n);

}  // namespace serlink
