#pragma once

// Special functions and quadrature used by the outage expressions.

#include <cmath>
#include <functional>
#include <vector>

#include "serlink/errors.hpp"

namespace serlink::numerics {

/// Natural log of the gamma function, a > 0.
double ln_gamma(double a);

/// Beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b).
double beta(double a, double b);

/// Lower regularized incomplete gamma P(a, x) = γ(a, x)/Γ(a).
double regularized_gamma_lower(double a, double x);

/// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x), computed without cancellation.
double regularized_gamma_upper(double a, double x);

/// Digamma ψ(x) for x > 0.
double digamma(double x);

/// Confluent hypergeometric function 1F1(a; b; x).
///
/// Power series with a relative term cutoff of 1e-14 and a cap of 1e4 terms.
/// Negative arguments go through Kummer's transformation
/// 1F1(a; b; x) = e^x 1F1(b - a; b; -x) so the summed series is never alternating.
double hyp1f1(double a, double b, double x);

/// Gauss hypergeometric function 2F1(a, b; c; x) for real x < 1.
///
/// |x| <= 1/2 is summed directly. For x < -1/2 the Pfaff transformation maps the
/// argument to w = x/(x-1) in (1/3, 1); when w > 1/2 the 1-w connection formula is
/// used. The logarithmic case c = a + (c - b) is supported, as is the case where
/// c - a - (c - b) is not an integer. Other integer gaps throw DomainError.
double hyp2f1(double a, double b, double c, double x);

/// ln 2F1(a, b; c; -(e^t - 1)) for t >= 0, stable for t up to several hundred.
/// Requires the same parameter patterns as hyp2f1 and a positive result.
double ln_hyp2f1_neg_expm1(double a, double b, double c, double t);

/// Nodes and weights of the order-n Gauss-Laguerre rule for ∫_0^∞ e^{-x} g(x) dx.
struct GaussLaguerreRule {
    int order = 0;
    std::vector<double> nodes;        ///< roots of L_n, strictly increasing
    std::vector<double> weights;      ///< w_s; may underflow to 0 for large n
    std::vector<double> log_weights;  ///< ln w_s, always finite
};

/// Builds the order-n rule, 1 <= n <= 200.
///
/// Weights follow w_s = u_s / ((n+1)^2 L_{n+1}(u_s)^2) for the normalized
/// Laguerre polynomials, which is the classical formula with the factorials
/// absorbed into the normalization.
GaussLaguerreRule laguerre_rule(int n);

/// Shared read-only rule table, built on first use.
const GaussLaguerreRule& cached_laguerre_rule(int n);

/// ∫_0^∞ f(u) du ≈ Σ_s w_s e^{u_s} f(u_s).
template <class F>
double gl_integrate(F&& f, int n) {
    const auto& rule = cached_laguerre_rule(n);
    double sum = 0.0;
    for (int s = 0; s < rule.order; ++s) {
        const double u = rule.nodes[s];
        const double v = f(u);
        if (!std::isfinite(v)) throw DomainError("gl_integrate: integrand not finite at a node");
        sum += std::exp(rule.log_weights[s] + u) * v;
    }
    return sum;
}

/// Positive integrand given by its logarithm: ∫_0^∞ exp(log_f(u)) du with the same rule.
template <class F>
double gl_integrate_log(F&& log_f, int n) {
    const auto& rule = cached_laguerre_rule(n);
    double sum = 0.0;
    for (int s = 0; s < rule.order; ++s) {
        const double u = rule.nodes[s];
        sum += std::exp(rule.log_weights[s] + u + log_f(u));
    }
    return sum;
}

/// ∫_0^∞ f(u) du after the substitution u = e^t - 1, evaluated with the order-n
/// Gauss-Laguerre rule in t. Turns algebraic tails of f into exponential ones.
/// log_f_of_t(t) must return ln f(e^t - 1); the Jacobian e^t is added here.
template <class F>
double gl_integrate_exp_mapped(F&& log_f_of_t, int n) {
    const auto& rule = cached_laguerre_rule(n);
    double sum = 0.0;
    for (int s = 0; s < rule.order; ++s) {
        const double t = rule.nodes[s];
        sum += std::exp(rule.log_weights[s] + 2.0 * t + log_f_of_t(t));
    }
    return sum;
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature on [a, b]; b may be +inf.
/// Stops when the summed error estimate is below max(abs_tol, rel_tol·|I|) or
/// after 4000 panels.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, double abs_tol = 1e-15, double* error_estimate = nullptr);

/// Double-exponential (tanh-sinh) quadrature on a finite interval; tolerates
/// integrable endpoint singularities.
double integrate_singular(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12);

}  // namespace serlink::numerics
