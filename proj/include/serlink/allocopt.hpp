#pragma once

// Exhaustive antenna-split search (P1) and minimum chain count (P2).

#include <cstdint>
#include <vector>

#include "serlink/closedform.hpp"
#include "serlink/sysmodel.hpp"

namespace serlink {

struct SplitPoint {
    int m = 0;
    double p_out_d = 1.0;
    double p_out_sbs = 1.0;
    bool feasible = true;  ///< false when circuit power exhausts the supply
    double minmax() const { return p_out_d > p_out_sbs ? p_out_d : p_out_sbs; }
};

struct AllocationResult {
    int q = 0;
    int m_opt = 0;
    int n_opt = 0;
    double minmax_outage = 1.0;
    double p_out_d = 1.0;
    double p_out_sbs = 1.0;
    std::vector<SplitPoint> per_split_curve;  ///< M = 2..q-2
    int q_min = 0;                            ///< P2 only
    bool feasible = true;                     ///< P2 only
};

enum class Backend { closed_form, monte_carlo };

struct SolverOptions {
    Backend backend = Backend::closed_form;
    int gl_order = kDefaultGlOrder;
    long long mc_samples = 1'000'000;
    std::uint64_t seed = 1;
};

/// Every split M + N = q with M, N >= 2 in FD mode; P_RF is recomputed per split.
/// Ties go to the smaller M. Throws InfeasibleError when q < 4 or no split is powered.
AllocationResult solve_p1(const SystemConfig& cfg, int q, const SolverOptions& opts = {});

/// Smallest q in [4, q_max] whose best split meets max outage <= delta. Re-checks
/// that every split at q_min - 1 misses delta before returning.
AllocationResult solve_p2(const SystemConfig& cfg, double delta, int q_max, const SolverOptions& opts = {});

struct EhSweepPoint {
    int p = 0;
    AllocationResult result;  ///< optimized, or a single fixed split
};

/// MinMax outage versus the number of EH antennas, at the split in cfg or optimized.
std::vector<EhSweepPoint> sweep_eh_antennas(const SystemConfig& cfg, const std::vector<int>& p_values,
                                            bool optimize, const SolverOptions& opts = {});

/// FD config for the split (m, q - m) derived from cfg.
SystemConfig with_split(const SystemConfig& cfg, int q, int m);

}  // namespace serlink
