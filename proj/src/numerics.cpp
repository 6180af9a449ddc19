#include "serlink/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace serlink::numerics {
namespace {

constexpr double kSeriesTol = 1e-14;
constexpr int kSeriesCap = 10000;

bool is_nonpositive_integer(double x) {
    return x <= 0.0 && std::floor(x) == x;
}

bool is_integer(double x) {
    return std::floor(x) == x;
}

double recip_gamma(double x) {
    if (is_nonpositive_integer(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

// Plain Gauss series, |x| < 1.
double hyp2f1_series(double a, double b, double c, double x) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < kSeriesCap; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        sum += term;
        if (term == 0.0 || std::abs(term) <= kSeriesTol * std::abs(sum)) return sum;
    }
    throw NonConvergenceError("hyp2f1: series did not converge within 1e4 terms");
}

// F(a, b; c; 1 - y) for 0 < y <= 1/2, ln_y supplied separately so tiny y keep precision.
double hyp2f1_connection(double a, double b, double c, double y, double ln_y) {
    const double gap = c - a - b;
    if (std::abs(gap) < 1e-12) {
        // Logarithmic case: c = a + b.
        if (is_nonpositive_integer(a) || is_nonpositive_integer(b)) {
            throw DomainError("hyp2f1: logarithmic case needs a, b not nonpositive integers");
        }
        const double pref = std::exp(ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b));
        double psi_1 = digamma(1.0);
        double psi_a = digamma(a);
        double psi_b = digamma(b);
        double coeff = 1.0;
        double sum = coeff * (2.0 * psi_1 - psi_a - psi_b - ln_y);
        for (int n = 0; n < kSeriesCap; ++n) {
            coeff *= (a + n) * (b + n) / ((n + 1.0) * (n + 1.0)) * y;
            psi_1 += 1.0 / (n + 1.0);
            psi_a += 1.0 / (a + n);
            psi_b += 1.0 / (b + n);
            const double term = coeff * (2.0 * psi_1 - psi_a - psi_b - ln_y);
            sum += term;
            if (coeff == 0.0 || std::abs(term) <= kSeriesTol * std::abs(sum)) return pref * sum;
        }
        throw NonConvergenceError("hyp2f1: logarithmic connection series did not converge");
    }
    if (is_integer(gap)) {
        throw DomainError("hyp2f1: integer gap c-a-b = " + std::to_string(gap) + " is not supported");
    }
    const double ga = std::tgamma(c) * std::tgamma(gap) * recip_gamma(c - a) * recip_gamma(c - b);
    const double gb = std::tgamma(c) * std::tgamma(-gap) * recip_gamma(a) * recip_gamma(b);
    double first = 0.0;
    if (ga != 0.0) first = ga * hyp2f1_series(a, b, 1.0 - gap, y);
    double second = 0.0;
    if (gb != 0.0) second = gb * std::exp(gap * ln_y) * hyp2f1_series(c - a, c - b, gap + 1.0, y);
    return first + second;
}

}  // namespace

double ln_gamma(double a) {
    if (!(a > 0.0)) throw DomainError("ln_gamma: argument must be positive");
    return std::lgamma(a);
}

double beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta: arguments must be positive");
    return std::exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b));
}

double regularized_gamma_lower(double a, double x) {
    if (!(a > 0.0)) throw DomainError("regularized_gamma_lower: a must be positive");
    if (!(x >= 0.0)) throw DomainError("regularized_gamma_lower: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(a, x);
}

double regularized_gamma_upper(double a, double x) {
    if (!(a > 0.0)) throw DomainError("regularized_gamma_upper: a must be positive");
    if (!(x >= 0.0)) throw DomainError("regularized_gamma_upper: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(a, x);
}

double digamma(double x) {
    if (!(x > 0.0)) throw DomainError("digamma: argument must be positive");
    return boost::math::digamma(x);
}

double hyp1f1(double a, double b, double x) {
    if (is_nonpositive_integer(b)) throw DomainError("hyp1f1: b must not be a nonpositive integer");
    if (x == 0.0) return 1.0;
    if (a == b) return std::exp(x);
    if (x < 0.0 && !is_nonpositive_integer(a)) return std::exp(x) * hyp1f1(b - a, b, -x);

    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < kSeriesCap; ++k) {
        const double ratio = (a + k) / (b + k) * x / (k + 1.0);
        term *= ratio;
        sum += term;
        if (term == 0.0) return sum;
        if (std::abs(ratio) < 1.0 && std::abs(term) <= kSeriesTol * std::abs(sum)) return sum;
    }
    throw NonConvergenceError("hyp1f1: series did not converge within 1e4 terms");
}

double hyp2f1(double a, double b, double c, double x) {
    if (is_nonpositive_integer(c)) throw DomainError("hyp2f1: c must not be a nonpositive integer");
    if (!(x < 1.0)) throw DomainError("hyp2f1: argument must be below 1");
    if (x == 0.0) return 1.0;
    if (x >= -0.5) return hyp2f1_series(a, b, c, x);

    // Pfaff: F(a,b;c;x) = (1-x)^{-a} F(a, c-b; c; x/(x-1)).
    const double one_minus_x = 1.0 - x;
    const double pfaff = std::pow(one_minus_x, -a);
    const double w = x / (x - 1.0);
    if (w <= 0.5) return pfaff * hyp2f1_series(a, c - b, c, w);
    const double y = 1.0 / one_minus_x;
    return pfaff * hyp2f1_connection(a, c - b, c, y, -std::log(one_minus_x));
}

double ln_hyp2f1_neg_expm1(double a, double b, double c, double t) {
    if (!(t >= 0.0)) throw DomainError("ln_hyp2f1_neg_expm1: t must be nonnegative");
    if (t <= std::log(2.0)) {
        const double v = hyp2f1(a, b, c, -std::expm1(t));
        if (!(v > 0.0)) throw DomainError("ln_hyp2f1_neg_expm1: value not positive");
        return std::log(v);
    }
    // 1 - w = e^{-t} exactly, so both the Pfaff factor and the log term stay exact.
    const double g = hyp2f1_connection(a, c - b, c, std::exp(-t), -t);
    if (!(g > 0.0)) throw DomainError("ln_hyp2f1_neg_expm1: value not positive");
    return -a * t + std::log(g);
}

GaussLaguerreRule laguerre_rule(int n) {
    if (n < 1 || n > 200) throw DomainError("laguerre_rule: order must be in [1, 200]");

    GaussLaguerreRule rule;
    rule.order = n;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    rule.log_weights.resize(n);

    // L_n(x) and L_{n-1}(x) by the three-term recurrence, in extended precision.
    auto eval = [n](long double x, long double& ln, long double& lnm1) {
        long double p1 = 1.0L;
        long double p2 = 0.0L;
        for (int j = 1; j <= n; ++j) {
            const long double p3 = p2;
            p2 = p1;
            p1 = ((2.0L * j - 1.0L - x) * p2 - (j - 1.0L) * p3) / j;
        }
        ln = p1;
        lnm1 = p2;
    };

    // Seeds from the eigenvalues of the symmetric Jacobi matrix (diagonal 2i+1,
    // off-diagonal i), then Newton polishing on the recurrence.
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(n > 1 ? n - 1 : 1);
    for (int i = 0; i < n; ++i) diag[i] = 2.0 * i + 1.0;
    for (int i = 1; i < n; ++i) sub[i - 1] = i;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NonConvergenceError("laguerre_rule: eigen solve failed");
    const Eigen::VectorXd seeds = solver.eigenvalues();

    for (int i = 0; i < n; ++i) {
        long double z = seeds[i];
        // Stops once the step is at rounding level or stops shrinking near the root.
        bool converged = false;
        long double last_step = std::numeric_limits<long double>::infinity();
        for (int it = 0; it < 100; ++it) {
            long double ln = 0.0L;
            long double lnm1 = 0.0L;
            eval(z, ln, lnm1);
            if (ln == 0.0L) {
                converged = true;
                break;
            }
            const long double deriv = n * (ln - lnm1) / z;
            const long double step = ln / deriv;
            const long double scale = std::fabs(z);
            if (std::fabs(step) <= 1e-18L * scale ||
                (std::fabs(step) >= 0.5L * last_step && std::fabs(step) <= 1e-14L * scale)) {
                z -= step;
                converged = true;
                break;
            }
            z -= step;
            last_step = std::fabs(step);
        }
        if (!converged || !(z > 0.0L) || (i > 0 && !(static_cast<double>(z) > rule.nodes[i - 1]))) {
            throw NonConvergenceError("laguerre_rule: root " + std::to_string(i) + " of order " +
                                      std::to_string(n) + " did not converge");
        }
        rule.nodes[i] = static_cast<double>(z);

        // L_{n+1}(z) from one more recurrence step; L_n(z) = 0 at the root.
        long double ln = 0.0L;
        long double lnm1 = 0.0L;
        eval(z, ln, lnm1);
        const long double lnp1 = ((2.0L * n + 1.0L - z) * ln - n * lnm1) / (n + 1.0L);
        rule.log_weights[i] =
            static_cast<double>(std::log(z) - 2.0L * std::log(n + 1.0L) - 2.0L * std::log(std::fabs(lnp1)));
        rule.weights[i] = std::exp(rule.log_weights[i]);
    }
    return rule;
}

const GaussLaguerreRule& cached_laguerre_rule(int n) {
    if (n < 1 || n > 200) throw DomainError("laguerre_rule: order must be in [1, 200]");
    static std::array<std::unique_ptr<GaussLaguerreRule>, 201> table;
    static std::array<std::once_flag, 201> flags;
    std::call_once(flags[n], [n] { table[n] = std::make_unique<GaussLaguerreRule>(laguerre_rule(n)); });
    return *table[n];
}

namespace {

// Kronrod 15-point nodes and weights with the embedded 7-point Gauss weights.
constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * kWgk[7];
    double g = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double sum = f(c - dx) + f(c + dx);
        k += kWgk[j] * sum;
        if (j % 2 == 1) g += kWg[j / 2] * sum;
    }
    return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, double abs_tol,
                 double* error_estimate) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, rel_tol, abs_tol, error_estimate);
    std::function<double(double)> g = f;
    double lo = a;
    double hi = b;
    if (std::isinf(a) || std::isinf(b)) {
        if (!std::isinf(b)) throw DomainError("integrate: only [a, +inf) infinite ranges are supported");
        if (std::isinf(a)) throw DomainError("integrate: only [a, +inf) infinite ranges are supported");
        // x = a + t/(1-t), t in [0, 1)
        g = [&f, a](double t) {
            const double one_minus = 1.0 - t;
            return f(a + t / one_minus) / (one_minus * one_minus);
        };
        lo = 0.0;
        hi = 1.0;
    }
    auto eval = [&g](double x) {
        const double v = g(x);
        if (!std::isfinite(v)) throw DomainError("integrate: integrand not finite");
        return v;
    };
    std::vector<Panel> heap;
    heap.push_back(gk15(eval, lo, hi));
    double total = heap.front().value;
    double err = heap.front().error;
    constexpr int kMaxPanels = 4000;
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (static_cast<int>(heap.size()) >= kMaxPanels) break;
        std::pop_heap(heap.begin(), heap.end());
        const Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end());
            break;
        }
        const Panel left = gk15(eval, worst.a, mid);
        const Panel right = gk15(eval, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end());
    }
    // Re-sum to shed drift from the running updates.
    total = 0.0;
    err = 0.0;
    for (const auto& p : heap) {
        total += p.value;
        err += p.error;
    }
    if (error_estimate) *error_estimate = err;
    if (!std::isfinite(total)) throw NonConvergenceError("integrate: non-finite result");
    return total;
}

double integrate_singular(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (a == b) return 0.0;
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double value = integrator.integrate(f, a, b, rel_tol);
    if (!std::isfinite(value)) throw NonConvergenceError("integrate_singular: non-finite result");
    return value;
}

}  // namespace serlink::numerics
