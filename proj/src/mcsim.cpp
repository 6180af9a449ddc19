#include "serlink/mcsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <thread>
#include <vector>

#include "serlink/rng.hpp"

namespace serlink {
namespace {

struct Counts {
    long long d = 0;
    long long sbs = 0;
    long long capped = 0;
};

struct Kernel {
    LinkBudget lb;
    bool fd = false;
    double thr_d = 0.0;
    double thr_sbs = 0.0;
};

Kernel make_kernel(const SystemConfig& cfg) {
    Kernel k;
    k.lb = derive(cfg);
    k.fd = cfg.mode == Duplex::FD;
    if (k.fd) {
        k.thr_d = std::exp2(cfg.r_d) - 1.0;
        k.thr_sbs = std::exp2(cfg.r_sbs) - 1.0;
    } else {
        k.thr_d = std::exp2(cfg.r_d / cfg.tau) - 1.0;
        k.thr_sbs = std::exp2(cfg.r_sbs / (1.0 - cfg.tau)) - 1.0;
    }
    return k;
}

// Coherent sum and squared norm of `len` fresh CN(0, 1) entries.
inline double draw_vector(Rng& rng, int len, double& norm2) {
    double re = 0.0;
    double im = 0.0;
    double nrm = 0.0;
    for (int i = 0; i < len; ++i) {
        const std::complex<double> h = rng.complex_normal();
        re += h.real();
        im += h.imag();
        nrm += std::norm(h);
    }
    norm2 = nrm;
    return (re * re + im * im) / nrm;
}

Counts run_batch(const Kernel& k, std::uint64_t seed, long long batch, long long draws) {
    Rng rng(seed, static_cast<std::uint64_t>(batch));
    const LinkBudget& lb = k.lb;
    Counts c;
    for (long long s = 0; s < draws; ++s) {
        double norm_td = 0.0;
        const double z_td = draw_vector(rng, lb.m, norm_td);
        bool capped = false;
        const double p_tot = total_power(lb, z_td, &capped);
        c.capped += capped;
        if (!k.fd) {
            double norm_ur = 0.0;
            for (int i = 0; i < lb.n; ++i) norm_ur += rng.exponential();
            const double g_d = lb.phi_td * p_tot * norm_td / lb.noise;
            const double g_sbs = lb.phi_ur * lb.p_u * norm_ur / lb.noise;
            c.d += g_d < k.thr_d;
            c.sbs += g_sbs < k.thr_sbs;
        } else {
            double norm_ur = 0.0;
            const double z_ur = draw_vector(rng, lb.n, norm_ur);
            const double h_ud = rng.exponential();
            const double g_d = lb.phi_td * p_tot * norm_td / (lb.phi_ud * lb.p_u * h_ud + lb.noise);
            const double g_sbs = lb.phi_ur * lb.p_u * norm_ur / (lb.si_gain * p_tot * z_td * z_ur + lb.noise);
            c.d += g_d < k.thr_d;
            c.sbs += g_sbs < k.thr_sbs;
        }
    }
    return c;
}

// Runs batches [first, last) of a run whose total length is n_total.
Counts run_range(const Kernel& k, std::uint64_t seed, long long first, long long last, long long n_total) {
    const long long count = last - first;
    std::vector<Counts> per(static_cast<std::size_t>(count));
    std::atomic<long long> next{first};
    auto work = [&] {
        for (;;) {
            const long long b = next.fetch_add(1);
            if (b >= last) return;
            const long long draws = std::min(kMcBatch, n_total - b * kMcBatch);
            per[static_cast<std::size_t>(b - first)] = run_batch(k, seed, b, draws);
        }
    };
    const int workers = static_cast<int>(std::min<long long>(worker_count(), count));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    Counts total;
    for (const auto& c : per) {
        total.d += c.d;
        total.sbs += c.sbs;
        total.capped += c.capped;
    }
    return total;
}

McEstimate make_estimate(long long events, long long n, long long capped, std::uint64_t seed) {
    McEstimate e;
    e.events = events;
    e.n_samples = n;
    e.p_hat = static_cast<double>(events) / static_cast<double>(n);
    e.ci_halfwidth_95 = ci_halfwidth(events, n);
    e.capped_draws = capped;
    e.seed = seed;
    return e;
}

McPair run(const SystemConfig& cfg, long long n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw DomainError("Monte Carlo run needs at least one sample");
    const Kernel k = make_kernel(cfg);
    const long long batches = (n_samples + kMcBatch - 1) / kMcBatch;
    const Counts c = run_range(k, seed, 0, batches, n_samples);
    return {make_estimate(c.d, n_samples, c.capped, seed), make_estimate(c.sbs, n_samples, c.capped, seed)};
}

}  // namespace

int worker_count() {
    const char* env = std::getenv("SERLINK_WORKERS");
    if (!env || !*env) return 1;
    const int w = std::atoi(env);
    return std::max(1, std::min(w, 256));
}

double ci_halfwidth(long long events, long long n) {
    if (n <= 0) return 1.0;
    if (events == 0) return 3.0 / static_cast<double>(n);
    const double p = static_cast<double>(events) / static_cast<double>(n);
    return 1.959963984540054 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

McPair mc_hd(const SystemConfig& cfg, long long n_samples, std::uint64_t seed) {
    if (cfg.mode != Duplex::HD) throw DomainError("mc_hd: requires HD mode");
    return run(cfg, n_samples, seed);
}

McPair mc_fd(const SystemConfig& cfg, long long n_samples, std::uint64_t seed) {
    if (cfg.mode != Duplex::FD) throw DomainError("mc_fd: requires FD mode");
    return run(cfg, n_samples, seed);
}

McPair mc_run(const SystemConfig& cfg, long long n_samples, std::uint64_t seed) {
    return run(cfg, n_samples, seed);
}

McPair mc_estimate_with_target(const SystemConfig& cfg, double target_ci, long long max_samples,
                               std::uint64_t seed) {
    if (!(target_ci > 0.0)) throw DomainError("mc_estimate_with_target: target_ci must be positive");
    if (max_samples < 1) throw DomainError("mc_estimate_with_target: max_samples must be positive");
    const Kernel k = make_kernel(cfg);
    const long long max_batches = (max_samples + kMcBatch - 1) / kMcBatch;
    Counts total;
    long long done = 0;
    long long step = 1;
    McPair out;
    for (;;) {
        const long long last = std::min(max_batches, done + step);
        const Counts c = run_range(k, seed, done, last, max_samples);
        total.d += c.d;
        total.sbs += c.sbs;
        total.capped += c.capped;
        done = last;
        const long long n = std::min(max_samples, done * kMcBatch);
        out = {make_estimate(total.d, n, total.capped, seed), make_estimate(total.sbs, n, total.capped, seed)};
        const bool met = out.d.ci_halfwidth_95 <= target_ci && out.sbs.ci_halfwidth_95 <= target_ci;
        if (met) return out;
        if (done >= max_batches) break;
        step *= 2;
    }
    out.d.budget_exhausted = true;
    out.sbs.budget_exhausted = true;
    return out;
}

}  // namespace serlink
