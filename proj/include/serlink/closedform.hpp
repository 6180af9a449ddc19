#pragma once

// Analytic outage evaluators for both duplex modes, each paired with an
// independent numeric route.

#include <map>
#include <string>

#include "serlink/sysmodel.hpp"

namespace serlink {

enum class Method { closed_form, numeric_integral, monte_carlo };

std::string to_string(Method m);

struct OutageReport {
    double p_out_d = 0.0;
    double p_out_sbs = 0.0;
    double minmax = 0.0;
    Method method = Method::closed_form;
    std::map<std::string, double> diagnostics;
};

enum class HdVariant {
    closed_form_1f1,     ///< double sum with 1F1 terms
    numeric_z_integral,  ///< adaptive quadrature over the Z law, threshold clamped at 0
};

/// Absolute tolerance between the two HD downlink variants.
inline constexpr double kHdVariantTolerance = 1e-6;
/// Absolute tolerance between the GL route and the q-integral for the FD uplink.
inline constexpr double kFdSbsFallbackTolerance = 1e-5;
inline constexpr int kDefaultGlOrder = 60;
inline constexpr int kMaxGlOrder = 200;

/// HD uplink: P(M, x*), x* = (2^{r_sbs/(1-τ)} - 1)σ²/(P_u φ_ur).
double outage_hd_sbs(const SystemConfig& cfg);

/// HD downlink by the chosen route.
double outage_hd_d(const SystemConfig& cfg, HdVariant variant);

/// True when the downlink threshold reaches 0 (τ·c·M >= 1) or the recycled-power
/// ceiling binds somewhere on [0, M]. The closed form is only comparable otherwise.
bool hd_clamping_active(const SystemConfig& cfg);

struct FdDResult {
    double value = 0.0;           ///< exact interference average at the chosen z model
    double paper_form = 0.0;      ///< clamp(1 - e^{a3}(1 - (1+b3)^{-M})), mean-field
    double rederived_form = 0.0;  ///< e^{a3}(1+b3)^{-M}, mean-field
    bool interference = false;
};

FdDResult outage_fd_d_detail(const SystemConfig& cfg, ZModel model);
double outage_fd_d(const SystemConfig& cfg);

struct FdSbsResult {
    double value = 0.0;
    int gl_order_used = 0;      ///< 0 when the z-averaged route produced the value
    double gl_last_change = 0.0;
    double mean_field_gl = 0.0; ///< triple-sum value with z_td at its mean
};

/// FD uplink. Under ZModel::mean_field the value is the GL-evaluated triple sum,
/// doubled from gl_order until the relative change is below 1e-8 (cap 200), and
/// checked against the q-integral fallback. Under ZModel::averaged the recycled
/// power follows each z_td exactly.
FdSbsResult outage_fd_sbs_detail(const SystemConfig& cfg, int gl_order, ZModel model,
                                 bool cross_check = true);
double outage_fd_sbs(const SystemConfig& cfg, int gl_order = kDefaultGlOrder);

/// Mean-field uplink by the triple sum at exactly `order` nodes.
double fd_sbs_mean_field_gl(const SystemConfig& cfg, int order);

/// Mean-field uplink by adaptive quadrature of the q law.
double fd_sbs_mean_field_q_integral(const SystemConfig& cfg);

/// Uplink by integrating the z_ur-averaged outage over z_td.
double fd_sbs_z_integral(const SystemConfig& cfg, ZModel model);

/// Integrand of the uplink triple sum,
/// e^{-a4 M N/(1+u)} (1+u)^{-3-i+l+N-p} 2F1(N-1, N-1; M+N-2; -u).
double uplink_kernel(double u, int m, int n, double a4, int l, int p, int i);

/// ∫_0^∞ uplink_kernel du by the order-n rule applied as written.
double uplink_kernel_gl(int m, int n, double a4, int l, int p, int i, int order);

/// Same integral by the order-n rule after u = e^t - 1.
double uplink_kernel_gl_mapped(int m, int n, double a4, int l, int p, int i, int order);

/// Same integral by adaptive quadrature.
double uplink_kernel_reference(int m, int n, double a4, int l, int p, int i);

struct EvalOptions {
    int gl_order = kDefaultGlOrder;
    bool cross_check = true;
};

/// Dispatches on the duplex mode and fills minmax and diagnostics.
OutageReport evaluate(const SystemConfig& cfg, const EvalOptions& opts = {});

}  // namespace serlink
