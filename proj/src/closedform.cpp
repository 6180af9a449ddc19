#include "serlink/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "serlink/fading.hpp"
#include "serlink/numerics.hpp"

namespace serlink {
namespace {

namespace nm = numerics;

constexpr double kQuadTol = 1e-10;
constexpr double kQuadAbs = 1e-14;

double clamp01(double p) {
    return std::min(1.0, std::max(0.0, p));
}

// Breakpoints on [0, M] where the recycled-power ceiling starts to bind.
std::vector<double> z_breakpoints(const LinkBudget& lb) {
    std::vector<double> pts{0.0};
    const double b = lb.tau * lb.c;
    if (b > 0.0) {
        const double z_cap = lb.p_eh_cap / ((lb.p_rf + lb.p_eh_cap) * b);
        if (z_cap > 0.0 && z_cap < lb.m) pts.push_back(z_cap);
    }
    pts.push_back(static_cast<double>(lb.m));
    return pts;
}

// ∫_0^M f_Z(z) g(z) dz, split where the ceiling binds.
template <class G>
double integrate_over_z(const LinkBudget& lb, G&& g) {
    const auto pts = z_breakpoints(lb);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        total += nm::integrate([&](double z) { return gpd_pdf(z, lb.m) * g(z); }, pts[k], pts[k + 1], kQuadTol, kQuadAbs);
    }
    return total;
}

// Downlink outage at fixed total radiated power, exact over the UL-device interference.
double fd_d_at_power(const LinkBudget& lb, double gamma, double p_tot) {
    if (lb.phi_ud * lb.p_u == 0.0) {
        return nm::regularized_gamma_lower(lb.m, gamma * lb.noise / (lb.phi_td * p_tot));
    }
    const double a3 = lb.noise / (lb.phi_ud * lb.p_u);
    const double b3 = lb.phi_td * p_tot / (lb.phi_ud * lb.p_u * gamma);
    const double head = nm::regularized_gamma_lower(lb.m, a3 / b3);
    const double q = nm::regularized_gamma_upper(lb.m, (1.0 + b3) * a3 / b3);
    if (q == 0.0) return clamp01(head);
    const double tail = std::exp(a3 - lb.m * std::log1p(b3) + std::log(q));
    return clamp01(head + tail);
}

struct UplinkConstants {
    double a_prime = 0.0;  // SI coefficient per watt of radiated power
    double b4 = 0.0;
};

UplinkConstants uplink_constants(const LinkBudget& lb, double r_sbs) {
    const double gamma = std::exp2(r_sbs) - 1.0;
    UplinkConstants k;
    k.a_prime = gamma * lb.si_gain / (lb.p_u * lb.phi_ur);
    k.b4 = gamma * lb.noise / (lb.p_u * lb.phi_ur);
    return k;
}

// E over z_ur of P(N, x·z_ur/N + b) with x = α·N, by the finite 1F1 expansion.
double uplink_g_series(int n, double x, double b) {
    if (x == 0.0) return nm::regularized_gamma_lower(n, b);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        // Σ_{l < n-k} b^l/l! = e^b Q(n-k, b)
        const double poly = b > 0.0 ? nm::regularized_gamma_upper(n - k, b) : 1.0;
        const double log_pref = k * std::log(x) + std::lgamma(n) - std::lgamma(k + n);
        const double t = std::exp(log_pref) * nm::hyp1f1(k + 1.0, k + n, -x);
        sum += t * poly;
    }
    return clamp01(1.0 - sum);
}

double uplink_g_quadrature(int n, double alpha, double b, double abs_tol = kQuadAbs) {
    return nm::integrate(
        [&](double u) { return gpd_pdf(u, n) * nm::regularized_gamma_lower(n, alpha * u + b); }, 0.0, n, kQuadTol, abs_tol);
}

double uplink_g(int n, double alpha, double b) {
    const double x = alpha * n;
    if (x > 500.0) return uplink_g_quadrature(n, alpha, b);
    const double g = uplink_g_series(n, x, b);
    // Below this the 1 - Σ form has lost most of its relative accuracy.
    if (g < 1e-6) return uplink_g_quadrature(n, alpha, b, 0.0);
    return g;
}

double ln_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// J_k = ∫_0^∞ e^{-a MN/(1+u)} u^{M+N-3} (1+u)^{-M-k} 2F1(N-1, N-1; M+N-2; -u) du for
// k = 0..N-1 on an order-n rule after u = c(e^t - 1). This is the p-sum of the triple sum in
// closed form, (Σ_p (-1)^p C(M+N-3, p)(1+u)^{-p} = (u/(1+u))^{M+N-3}).
// The scale c moves the e^{-aMN/(1+u)} edge away from the first nodes when aMN is large.
std::vector<double> uplink_moments(int m, int n, double a4, int order) {
    const auto& rule = nm::cached_laguerre_rule(order);
    std::vector<double> j(n, 0.0);
    const double amn = a4 * m * n;
    const double c = std::max(1.0, amn / (m + n));
    const double lc = std::log(c);
    for (int s = 0; s < rule.order; ++s) {
        const double t = rule.nodes[s];
        if (t <= 0.0) continue;
        const double lu = lc + t + std::log1p(-std::exp(-t));
        const double l1u = lu > 0.0 ? lu + std::log1p(std::exp(-lu)) : std::log1p(std::exp(lu));
        const double lf = nm::ln_hyp2f1_neg_expm1(n - 1.0, n - 1.0, m + n - 2.0, l1u);
        double base = rule.log_weights[s] + 2.0 * t + lc - amn * std::exp(-l1u) - m * l1u + lf;
        if (m + n > 3) base += (m + n - 3.0) * lu;
        for (int k = 0; k < n; ++k) j[k] += std::exp(base - k * l1u);
    }
    return j;
}

double uplink_triple_sum(int m, int n, double a4, double b4, int order) {
    const auto j = uplink_moments(m, n, a4, order);
    const double lead = std::log(nm::beta(m - 1.0, n - 1.0)) + std::log((m - 1.0) * (n - 1.0)) - b4;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l <= i; ++l) {
            const int k = i - l;
            if (k > 0 && a4 == 0.0) continue;
            if (l > 0 && b4 == 0.0) continue;
            double lt = lead + ln_binomial(i, l) - std::lgamma(i + 1.0);
            if (l > 0) lt += l * std::log(b4);
            if (k > 0) lt += k * (std::log(a4) + std::log(static_cast<double>(m) * n));
            sum += std::exp(lt) * j[k];
        }
    }
    return clamp01(1.0 - sum);
}

double mean_field_a4(const LinkBudget& lb, const SystemConfig& cfg) {
    return uplink_constants(lb, cfg.r_sbs).a_prime * total_power(lb, 1.0);
}

void require_fd(const SystemConfig& cfg, const char* who) {
    if (cfg.mode != Duplex::FD) throw DomainError(std::string(who) + ": requires FD mode");
}

void require_hd(const SystemConfig& cfg, const char* who) {
    if (cfg.mode != Duplex::HD) throw DomainError(std::string(who) + ": requires HD mode");
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::closed_form: return "closed-form";
        case Method::numeric_integral: return "numeric-integral";
        case Method::monte_carlo: return "monte-carlo";
    }
    return "unknown";
}

double outage_hd_sbs(const SystemConfig& cfg) {
    require_hd(cfg, "outage_hd_sbs");
    const LinkBudget lb = derive(cfg);
    const double x = (std::exp2(cfg.r_sbs / (1.0 - cfg.tau)) - 1.0) * lb.noise / (lb.p_u * lb.phi_ur);
    return nm::regularized_gamma_lower(lb.n, x);
}

bool hd_clamping_active(const SystemConfig& cfg) {
    const LinkBudget lb = derive(cfg);
    bool capped = false;
    total_power(lb, lb.m, &capped);
    return lb.tau * lb.c * lb.m >= 1.0 || capped;
}

double outage_hd_d(const SystemConfig& cfg, HdVariant variant) {
    require_hd(cfg, "outage_hd_d");
    const LinkBudget lb = derive(cfg);
    const int m = lb.m;
    const double a2 = (std::exp2(cfg.r_d / lb.tau) - 1.0) * lb.noise / (lb.p_rf * lb.phi_td);
    if (variant == HdVariant::numeric_z_integral) {
        if (lb.c == 0.0) return nm::regularized_gamma_lower(m, a2);
        return clamp01(integrate_over_z(lb, [&](double z) {
            return nm::regularized_gamma_lower(m, a2 * lb.p_rf / total_power(lb, z));
        }));
    }
    // 1 - e^{-a2}(M-1)! Σ_k Σ_{j<=k} a2^{k-j}/(k-j)! (-b2 M)^j / (j+M-1)! 1F1(j+1; j+M; b2 M)
    const double x = a2 * lb.tau * lb.c * m;
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j <= k; ++j) {
            double lt = -a2 + std::lgamma(m) - std::lgamma(j + m) - std::lgamma(k - j + 1.0);
            if (k - j > 0) lt += (k - j) * std::log(a2);
            if (j > 0) {
                if (x == 0.0) continue;
                lt += j * std::log(x);
            }
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            sum += sign * std::exp(lt) * nm::hyp1f1(j + 1.0, j + m, x);
        }
    }
    return 1.0 - sum;
}

FdDResult outage_fd_d_detail(const SystemConfig& cfg, ZModel model) {
    require_fd(cfg, "outage_fd_d");
    const LinkBudget lb = derive(cfg);
    const double gamma = std::exp2(cfg.r_d) - 1.0;
    FdDResult r;
    r.interference = lb.phi_ud * lb.p_u > 0.0;
    const double p_mf = total_power(lb, 1.0);
    if (model == ZModel::mean_field || lb.c == 0.0) {
        r.value = fd_d_at_power(lb, gamma, p_mf);
    } else {
        r.value = clamp01(integrate_over_z(lb, [&](double z) { return fd_d_at_power(lb, gamma, total_power(lb, z)); }));
    }
    if (r.interference) {
        const double a3 = lb.noise / (lb.phi_ud * lb.p_u);
        const double b3 = lb.phi_td * p_mf / (lb.phi_ud * lb.p_u * gamma);
        const double decay = std::exp(-lb.m * std::log1p(b3));
        r.paper_form = clamp01(1.0 - std::exp(a3) * (1.0 - decay));
        r.rederived_form = clamp01(std::exp(a3) * decay);
    } else {
        r.paper_form = r.value;
        r.rederived_form = r.value;
    }
    return r;
}

double outage_fd_d(const SystemConfig& cfg) {
    return outage_fd_d_detail(cfg, cfg.z_model).value;
}

double fd_sbs_mean_field_gl(const SystemConfig& cfg, int order) {
    require_fd(cfg, "fd_sbs_mean_field_gl");
    const LinkBudget lb = derive(cfg);
    const double a4 = mean_field_a4(lb, cfg);
    return uplink_triple_sum(lb.m, lb.n, a4, uplink_constants(lb, cfg.r_sbs).b4, order);
}

double fd_sbs_mean_field_q_integral(const SystemConfig& cfg) {
    require_fd(cfg, "fd_sbs_mean_field_q_integral");
    const LinkBudget lb = derive(cfg);
    const double a4 = mean_field_a4(lb, cfg);
    const double b4 = uplink_constants(lb, cfg.r_sbs).b4;
    const int m = lb.m;
    const int n = lb.n;
    const double top = static_cast<double>(m) * n;
    // q_pdf has a logarithmic singularity at 0; the double-exponential rule absorbs it.
    const double v = nm::integrate_singular(
        [&](double q) {
            if (!(q > 0.0 && q < top)) return 0.0;
            return q_pdf(q, m, n) * nm::regularized_gamma_lower(n, a4 * q + b4);
        },
        0.0, top, 1e-10);
    return clamp01(v);
}

double fd_sbs_z_integral(const SystemConfig& cfg, ZModel model) {
    require_fd(cfg, "fd_sbs_z_integral");
    const LinkBudget lb = derive(cfg);
    const auto k = uplink_constants(lb, cfg.r_sbs);
    const int n = lb.n;
    if (k.a_prime == 0.0) return nm::regularized_gamma_lower(n, k.b4);
    const double p_mf = total_power(lb, 1.0);
    return clamp01(integrate_over_z(lb, [&](double z) {
        const double p_tot = model == ZModel::mean_field ? p_mf : total_power(lb, z);
        return uplink_g(n, k.a_prime * p_tot * z, k.b4);
    }));
}

FdSbsResult outage_fd_sbs_detail(const SystemConfig& cfg, int gl_order, ZModel model, bool cross_check) {
    require_fd(cfg, "outage_fd_sbs");
    if (gl_order < 1 || gl_order > kMaxGlOrder) throw DomainError("outage_fd_sbs: gl_order must be in [1, 200]");
    FdSbsResult r;
    int order = gl_order;
    double value = fd_sbs_mean_field_gl(cfg, order);
    double change = std::numeric_limits<double>::infinity();
    while (order < kMaxGlOrder) {
        const int next = std::min(2 * order, kMaxGlOrder);
        const double v2 = fd_sbs_mean_field_gl(cfg, next);
        change = v2 == 0.0 ? std::abs(v2 - value) : std::abs(v2 - value) / std::abs(v2);
        value = v2;
        order = next;
        if (change < 1e-8) break;
    }
    r.mean_field_gl = value;
    r.gl_last_change = change;
    if (model == ZModel::mean_field) {
        r.value = value;
        r.gl_order_used = order;
        if (cross_check && order >= 60) {
            const double fallback = fd_sbs_mean_field_q_integral(cfg);
            if (std::abs(fallback - value) > kFdSbsFallbackTolerance) {
                throw DisagreementError("outage_fd_sbs: GL and q-integral routes disagree", value, fallback);
            }
        }
    } else {
        r.value = fd_sbs_z_integral(cfg, ZModel::averaged);
        r.gl_order_used = 0;
    }
    return r;
}

double outage_fd_sbs(const SystemConfig& cfg, int gl_order) {
    return outage_fd_sbs_detail(cfg, gl_order, cfg.z_model).value;
}

double uplink_kernel(double u, int m, int n, double a4, int l, int p, int i) {
    if (u < 0.0) throw DomainError("uplink_kernel: u must be nonnegative");
    const double e = -3.0 - i + l + n - p;
    return std::exp(-a4 * m * n / (1.0 + u) + e * std::log1p(u)) * nm::hyp2f1(n - 1.0, n - 1.0, m + n - 2.0, -u);
}

double uplink_kernel_gl(int m, int n, double a4, int l, int p, int i, int order) {
    return nm::gl_integrate([&](double u) { return uplink_kernel(u, m, n, a4, l, p, i); }, order);
}

double uplink_kernel_gl_mapped(int m, int n, double a4, int l, int p, int i, int order) {
    const double e = -3.0 - i + l + n - p;
    return nm::gl_integrate_exp_mapped(
        [&](double t) {
            return -a4 * m * n * std::exp(-t) + e * t + nm::ln_hyp2f1_neg_expm1(n - 1.0, n - 1.0, m + n - 2.0, t);
        },
        order);
}

double uplink_kernel_reference(int m, int n, double a4, int l, int p, int i) {
    return nm::integrate([&](double u) { return uplink_kernel(u, m, n, a4, l, p, i); }, 0.0,
                         std::numeric_limits<double>::infinity(), 1e-12, 0.0);
}

OutageReport evaluate(const SystemConfig& cfg, const EvalOptions& opts) {
    const LinkBudget lb = derive(cfg);
    OutageReport rep;
    rep.method = Method::closed_form;
    rep.diagnostics["p_rf_w"] = lb.p_rf;
    rep.diagnostics["p_c_w"] = lb.p_c;
    rep.diagnostics["loop_gain"] = lb.c;
    if (cfg.mode == Duplex::HD) {
        const bool clamped = hd_clamping_active(cfg);
        const double numeric = outage_hd_d(cfg, HdVariant::numeric_z_integral);
        const double closed = outage_hd_d(cfg, HdVariant::closed_form_1f1);
        rep.diagnostics["clamping_active"] = clamped ? 1.0 : 0.0;
        rep.diagnostics["hd_d_closed_form_1f1"] = closed;
        rep.diagnostics["hd_d_numeric_z_integral"] = numeric;
        if (opts.cross_check && !clamped && std::abs(closed - numeric) > kHdVariantTolerance) {
            throw DisagreementError("outage_hd_d: closed-form and z-integral variants disagree", closed, numeric);
        }
        rep.p_out_d = numeric;
        rep.p_out_sbs = outage_hd_sbs(cfg);
    } else {
        const FdDResult d = outage_fd_d_detail(cfg, cfg.z_model);
        const FdSbsResult s = outage_fd_sbs_detail(cfg, opts.gl_order, cfg.z_model, opts.cross_check);
        rep.p_out_d = d.value;
        rep.p_out_sbs = s.value;
        rep.diagnostics["z_model_mean_field"] = cfg.z_model == ZModel::mean_field ? 1.0 : 0.0;
        rep.diagnostics["fd_d_paper_form"] = d.paper_form;
        rep.diagnostics["fd_d_rederived_form"] = d.rederived_form;
        rep.diagnostics["fd_sbs_mean_field_gl"] = s.mean_field_gl;
        rep.diagnostics["fd_sbs_gl_last_change"] = s.gl_last_change;
        rep.diagnostics["clamping_active"] = [&] {
            bool capped = false;
            total_power(lb, lb.m, &capped);
            return capped ? 1.0 : 0.0;
        }();
    }
    rep.minmax = std::max(rep.p_out_d, rep.p_out_sbs);
    return rep;
}

}  // namespace serlink
