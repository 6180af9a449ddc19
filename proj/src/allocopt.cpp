#include "serlink/allocopt.hpp"

#include <string>

#include "serlink/mcsim.hpp"

namespace serlink {
namespace {

SplitPoint evaluate_split(const SystemConfig& base, int q, int m, const SolverOptions& opts) {
    SplitPoint sp;
    sp.m = m;
    const SystemConfig cfg = with_split(base, q, m);
    try {
        if (opts.backend == Backend::closed_form) {
            EvalOptions eo;
            eo.gl_order = opts.gl_order;
            const OutageReport r = evaluate(cfg, eo);
            sp.p_out_d = r.p_out_d;
            sp.p_out_sbs = r.p_out_sbs;
        } else {
            const McPair r = mc_run(cfg, opts.mc_samples, opts.seed);
            sp.p_out_d = r.d.p_hat;
            sp.p_out_sbs = r.sbs.p_hat;
        }
    } catch (const InfeasibleError&) {
        sp.feasible = false;
        sp.p_out_d = 1.0;
        sp.p_out_sbs = 1.0;
    }
    return sp;
}

}  // namespace

SystemConfig with_split(const SystemConfig& cfg, int q, int m) {
    SystemConfig c = cfg;
    c.mode = Duplex::FD;
    c.tau = 1.0;
    c.q_chains = q;
    c.m_tx = m;
    c.n_rx = q - m;
    return c;
}

AllocationResult solve_p1(const SystemConfig& cfg, int q, const SolverOptions& opts) {
    if (q < 4) throw InfeasibleError("solve_p1: q must be at least 4");
    AllocationResult res;
    res.q = q;
    bool any = false;
    for (int m = 2; m <= q - 2; ++m) {
        const SplitPoint sp = evaluate_split(cfg, q, m, opts);
        res.per_split_curve.push_back(sp);
        if (!sp.feasible) continue;
        if (!any || sp.minmax() < res.minmax_outage) {
            any = true;
            res.m_opt = m;
            res.n_opt = q - m;
            res.minmax_outage = sp.minmax();
            res.p_out_d = sp.p_out_d;
            res.p_out_sbs = sp.p_out_sbs;
        }
    }
    if (!any) throw InfeasibleError("solve_p1: circuit power exceeds the supply at every split of q = " +
                                    std::to_string(q));
    return res;
}

AllocationResult solve_p2(const SystemConfig& cfg, double delta, int q_max, const SolverOptions& opts) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("solve_p2: delta must be in (0, 1]");
    if (q_max < 4) throw DomainError("solve_p2: q_max must be at least 4");
    AllocationResult last;
    for (int q = 4; q <= q_max; ++q) {
        AllocationResult r;
        try {
            r = solve_p1(cfg, q, opts);
        } catch (const InfeasibleError&) {
            continue;
        }
        last = r;
        if (r.minmax_outage <= delta) {
            if (q > 4) {
                for (int m = 2; m <= q - 3; ++m) {
                    const SplitPoint sp = evaluate_split(cfg, q - 1, m, opts);
                    if (sp.feasible && sp.minmax() <= delta) {
                        throw Error("solve_p2: minimality re-check failed at q = " + std::to_string(q - 1));
                    }
                }
            }
            r.q_min = q;
            r.feasible = true;
            return r;
        }
    }
    last.q_min = 0;
    last.feasible = false;
    return last;
}

std::vector<EhSweepPoint> sweep_eh_antennas(const SystemConfig& cfg, const std::vector<int>& p_values,
                                            bool optimize, const SolverOptions& opts) {
    std::vector<EhSweepPoint> out;
    for (int p : p_values) {
        if (p < 0) throw DomainError("sweep_eh_antennas: EH antenna counts must be nonnegative");
        SystemConfig c = cfg;
        c.p_eh_antennas = p;
        EhSweepPoint pt;
        pt.p = p;
        if (optimize) {
            pt.result = solve_p1(c, c.q_chains, opts);
        } else {
            const SplitPoint sp = evaluate_split(c, c.q_chains, c.m_tx, opts);
            pt.result.q = c.q_chains;
            pt.result.m_opt = c.m_tx;
            pt.result.n_opt = c.q_chains - c.m_tx;
            pt.result.p_out_d = sp.p_out_d;
            pt.result.p_out_sbs = sp.p_out_sbs;
            pt.result.minmax_outage = sp.minmax();
            pt.result.per_split_curve.push_back(sp);
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace serlink
