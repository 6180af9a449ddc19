#include "serlink/fading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "serlink/numerics.hpp"

namespace serlink {
namespace {

void fill(std::vector<std::complex<double>>& v, int n, Rng& rng) {
    v.resize(n);
    for (auto& h : v) h = rng.complex_normal();
}

// Profile log-likelihood of the zero-location GPD at θ = ξ/σ, with ξ >= -1.
double profile_loglik(const std::vector<double>& x, double theta, double mean, double* shape) {
    const double n = static_cast<double>(x.size());
    if (std::abs(theta) * mean < 1e-12) {
        if (shape) *shape = 0.0;
        return -n * std::log(mean) - n;
    }
    double s = 0.0;
    for (double v : x) s += std::log1p(theta * v);
    const double xi = s / n;
    if (xi < -1.0) {
        if (shape) *shape = -1.0;
        return n * std::log(-theta);
    }
    if (shape) *shape = xi;
    return -n * std::log(s / (n * theta)) - s - n;
}

}  // namespace

double leakage_ratio(const std::complex<double>* h, int n, double* norm2) {
    std::complex<double> sum{0.0, 0.0};
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) {
        sum += h[i];
        nrm += std::norm(h[i]);
    }
    if (norm2) *norm2 = nrm;
    return std::norm(sum) / nrm;
}

void sample_into(int m, int n_ur, bool fd, Rng& rng, ChannelDraw& out) {
    fill(out.h_td, m, rng);
    fill(out.h_ur, n_ur, rng);
    out.h_ud = rng.complex_normal();
    out.z_td = leakage_ratio(out.h_td.data(), m, &out.norm2_td);
    out.z_ur = leakage_ratio(out.h_ur.data(), n_ur, &out.norm2_ur);
    if (!fd) out.z_ur = 0.0;
    out.q = fd ? out.z_td * out.z_ur : 0.0;
}

ChannelDraw sample_draw(const SystemConfig& cfg, Rng& rng) {
    validate(cfg);
    ChannelDraw d;
    const bool fd = cfg.mode == Duplex::FD;
    sample_into(cfg.m_tx, fd ? cfg.n_rx : cfg.q_chains, fd, rng, d);
    return d;
}

double sample_gamma(double shape, Rng& rng) {
    if (!(shape >= 1.0)) throw DomainError("sample_gamma: shape must be at least 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = rng.complex_normal().real() * std::sqrt(2.0);
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = rng.uniform_pos();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
}

double sample_leakage_ratio(int m, Rng& rng) {
    if (m < 1) throw DomainError("sample_leakage_ratio: m must be positive");
    if (m <= 64) {
        std::complex<double> buf[64];
        for (int i = 0; i < m; ++i) buf[i] = rng.complex_normal();
        return leakage_ratio(buf, m);
    }
    const double a2 = rng.exponential();
    const double g = sample_gamma(m - 1.0, rng);
    return m * a2 / (a2 + g);
}

double gpd_pdf(double z, int m) {
    if (m < 2) throw DomainError("gpd_pdf: m must be at least 2");
    if (z < 0.0 || z > m) return 0.0;
    const double mm = m;
    if (m == 2) return 0.5;
    return (mm - 1.0) / mm * std::pow(1.0 - z / mm, mm - 2.0);
}

double gpd_cdf(double z, int m) {
    if (m < 2) throw DomainError("gpd_cdf: m must be at least 2");
    if (z <= 0.0) return 0.0;
    if (z >= m) return 1.0;
    return -std::expm1((m - 1.0) * std::log1p(-z / m));
}

double gpd_density(double x, const GpdParams& p) {
    if (!(p.scale > 0.0)) throw DomainError("gpd_density: scale must be positive");
    const double y = (x - p.location) / p.scale;
    if (y < 0.0) return 0.0;
    if (p.shape == 0.0) return std::exp(-y) / p.scale;
    const double t = 1.0 + p.shape * y;
    if (t <= 0.0) return 0.0;
    return std::pow(t, -1.0 / p.shape - 1.0) / p.scale;
}

double gpd_distribution(double x, const GpdParams& p) {
    if (!(p.scale > 0.0)) throw DomainError("gpd_distribution: scale must be positive");
    const double y = (x - p.location) / p.scale;
    if (y <= 0.0) return 0.0;
    if (p.shape == 0.0) return -std::expm1(-y);
    const double t = 1.0 + p.shape * y;
    if (t <= 0.0) return 1.0;
    return -std::expm1(-std::log(t) / p.shape);
}

GpdParams fit_gpd(const std::vector<double>& x) {
    if (x.size() < 2) throw DomainError("fit_gpd: need at least two samples");
    double xmax = 0.0;
    double mean = 0.0;
    for (double v : x) {
        if (!std::isfinite(v) || v < 0.0) throw DomainError("fit_gpd: samples must be finite and nonnegative");
        xmax = std::max(xmax, v);
        mean += v;
    }
    mean /= static_cast<double>(x.size());
    if (!(xmax > 0.0)) throw DomainError("fit_gpd: all samples are zero");

    // Search over v = θ·x_max on (-1, 1e4): a log-spaced approach to the -1 end,
    // a linear middle section and a log-spaced positive tail.
    std::vector<double> grid;
    for (double k = 12.0; k >= 0.5; k -= 0.25) grid.push_back(-1.0 + std::pow(10.0, -k));
    for (int i = 1; i < 40; ++i) grid.push_back(-0.7 + 0.7 * i / 40.0);
    grid.push_back(0.0);
    for (double k = -6.0; k <= 4.0; k += 0.25) grid.push_back(std::pow(10.0, k));
    std::sort(grid.begin(), grid.end());

    auto negll = [&](double v) { return -profile_loglik(x, v / xmax, mean, nullptr); };
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double val = negll(grid[i]);
        if (val < best_val) {
            best_val = val;
            best = i;
        }
    }
    double v_best = grid[best];
    if (best > 0 && best + 1 < grid.size()) {
        const auto r = boost::math::tools::brent_find_minima(negll, grid[best - 1], grid[best + 1], 52);
        if (r.second <= best_val) v_best = r.first;
    }
    double shape = 0.0;
    const double ll = profile_loglik(x, v_best / xmax, mean, &shape);
    if (!std::isfinite(ll)) throw NonConvergenceError("fit_gpd: likelihood maximization failed");
    GpdParams p;
    p.location = 0.0;
    p.shape = shape;
    const double theta = v_best / xmax;
    p.scale = std::abs(theta) * mean < 1e-12 ? mean : shape / theta;
    return p;
}

double ks_statistic(std::vector<double> s, const std::function<double(double)>& cdf) {
    if (s.empty()) throw DomainError("ks_statistic: no samples");
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
    }
    return d;
}

double p_eh(double z, const LinkBudget& lb) {
    if (lb.c == 0.0 || z == 0.0) return 0.0;
    const double loop = lb.tau * lb.c * z;
    if (loop >= 1.0) throw EnergyLoopError("p_eh: recycling loop gain tau*c*z >= 1");
    return loop * lb.p_rf / (1.0 - loop);
}

double p_eh(double z, const SystemConfig& cfg) {
    const LinkBudget lb = derive(cfg);
    if (z < 0.0 || z > lb.m) throw DomainError("p_eh: z outside [0, M]");
    return p_eh(z, lb);
}

double p_eh_support_max(const SystemConfig& cfg) {
    const LinkBudget lb = derive(cfg);
    const double b1 = lb.tau * lb.c;
    if (b1 * lb.m >= 1.0) return std::numeric_limits<double>::infinity();
    return b1 * lb.p_rf * lb.m / (1.0 - b1 * lb.m);
}

double p_eh_pdf(double p, const SystemConfig& cfg) {
    if (cfg.p_eh_antennas < 1) throw DomainError("p_eh_pdf: needs at least one EH antenna");
    const LinkBudget lb = derive(cfg);
    const double b1 = lb.tau * lb.c;
    const double a1 = b1 * lb.p_rf;
    const double pmax = p_eh_support_max(cfg);
    if (p < 0.0 || p > pmax) throw DomainError("p_eh_pdf: p outside the support");
    const double den = a1 + b1 * p;
    const double z = p / den;
    return gpd_pdf(std::min(z, static_cast<double>(lb.m)), lb.m) * a1 / (den * den);
}

double q_pdf(double q, int m, int n) {
    if (m < 2 || n < 2) throw DomainError("q_pdf: m and n must be at least 2");
    const double mm = m;
    const double nn = n;
    if (!(q > 0.0 && q < mm * nn)) throw DomainError("q_pdf: q outside (0, m*n)");
    const double log_part = std::log((mm - 1.0) * (nn - 1.0)) - (mm - 1.0) * std::log(mm) +
                            (2.0 - nn) * std::log(q / nn) - std::log(q) +
                            (mm + nn - 3.0) * std::log(mm - q / nn) +
                            std::log(numerics::beta(mm - 1.0, nn - 1.0));
    // 1 - MN/q = -(e^t - 1) with t = ln(MN/q)
    const double t = std::log(mm * nn / q);
    return std::exp(log_part + numerics::ln_hyp2f1_neg_expm1(nn - 1.0, nn - 1.0, mm + nn - 2.0, t));
}

}  // namespace serlink
