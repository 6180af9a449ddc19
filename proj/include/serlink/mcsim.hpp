#pragma once

// Draw-by-draw Monte Carlo estimates of both outage events.

#include <cstdint>

#include "serlink/sysmodel.hpp"

namespace serlink {

struct McEstimate {
    double p_hat = 0.0;
    long long n_samples = 0;
    long long events = 0;
    double ci_halfwidth_95 = 0.0;  ///< Wald; 3/n when no event was seen
    long long capped_draws = 0;
    std::uint64_t seed = 0;
    bool budget_exhausted = false;
};

struct McPair {
    McEstimate d;
    McEstimate sbs;
};

/// Draws per batch. Batch b always uses RNG stream b of the master seed, so the
/// estimate does not depend on how batches are spread over workers.
inline constexpr long long kMcBatch = 1LL << 16;

/// Worker threads, from SERLINK_WORKERS (default 1).
int worker_count();

/// 95% half-width for `events` out of `n`.
double ci_halfwidth(long long events, long long n);

McPair mc_hd(const SystemConfig& cfg, long long n_samples, std::uint64_t seed);
McPair mc_fd(const SystemConfig& cfg, long long n_samples, std::uint64_t seed);

/// mc_hd or mc_fd by mode.
McPair mc_run(const SystemConfig& cfg, long long n_samples, std::uint64_t seed);

/// Adds batches until both half-widths are at most target_ci or max_samples is
/// reached; budget_exhausted marks the latter.
McPair mc_estimate_with_target(const SystemConfig& cfg, double target_ci, long long max_samples,
                               std::uint64_t seed);

}  // namespace serlink
