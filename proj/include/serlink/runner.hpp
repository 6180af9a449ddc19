#pragma once

// Sweep files, CSV output, text reports and figure presets.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "serlink/allocopt.hpp"
#include "serlink/closedform.hpp"
#include "serlink/fading.hpp"
#include "serlink/mcsim.hpp"
#include "serlink/sysmodel.hpp"

namespace serlink {

enum class Evaluator { closed_form, monte_carlo, optimize_p1, optimize_p2, fit_gpd, gl_check };

std::string to_string(Evaluator e);
Evaluator parse_evaluator(std::string_view s);

/// One sweep dimension. Several config fields may share a value (joined by '+').
struct Axis {
    std::vector<std::string> fields;
    std::vector<double> values;
    std::string label() const;
};

struct SweepSpec {
    SystemConfig base;
    Axis axis1;
    std::optional<Axis> axis2;
    Evaluator evaluator = Evaluator::closed_form;
    long long mc_budget = 1'000'000;
    std::uint64_t seed = 1;
    double delta = 1e-5;  ///< optimize-p2 target
    int q_max = 32;       ///< optimize-p2 search limit
    int gl_order = kDefaultGlOrder;
    int gl_setup = 1;     ///< gl-check: 1 or 2
};

/// Parses "a, b, c" or "start:step:stop" (inclusive, tolerant to rounding).
std::vector<double> parse_value_list(std::string_view text);

/// Parses "field[+field...]: values".
Axis parse_axis(std::string_view text);

/// Sweep file: config keys set the base, plus axis1, axis2, evaluator, mc_budget,
/// seed, delta, q_max, gl_order, gl_setup and an optional `config` path.
SweepSpec parse_sweep_text(std::string_view text, const std::string& base_dir = ".");
SweepSpec load_sweep(const std::string& path);

/// Applies one axis value; sweeping m_tx or q_chains in FD keeps m_tx + n_rx = q_chains.
void apply_axis_value(SystemConfig& cfg, const Axis& axis, double value);

/// Runs the sweep and returns the CSV text.
std::string run_sweep_csv(const SweepSpec& spec);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

/// %.8e formatting used in every CSV and report.
std::string fmt(double v);

std::string format_report(const OutageReport& r);
std::string format_mc_report(const McPair& r);
std::string format_allocation(const AllocationResult& r, bool p2);

// Uplink integral self-check.

struct KernelSetup {
    int m = 3;
    int n = 4;
    double a4 = 20.0;
    int l = 2;
    int p = 2;
    int i = 2;
};

KernelSetup kernel_setup(int which);

struct GlCheckRow {
    int order = 0;
    double literal = 0.0;
    double mapped = 0.0;
    double rel_err_literal = 0.0;
    double rel_err_mapped = 0.0;
    double rel_change_literal = 0.0;  ///< vs the previous order in the list, 0 for the first
};

struct GlCheck {
    KernelSetup setup;
    double reference = 0.0;
    std::vector<GlCheckRow> rows;
};

GlCheck gl_check(const KernelSetup& setup, const std::vector<int>& orders);
std::string format_gl_check(const GlCheck& g);

// Leakage-ratio fit.

struct GpdFitSummary {
    int m = 0;
    long long samples = 0;
    GpdParams fitted;
    GpdParams theory;  ///< (0, m/(m-1), -1/(m-1))
    double ks = 0.0;   ///< against the exact Z law
    std::vector<double> z;
};

/// Samples z_td for m antennas from seed and fits the GPD.
GpdFitSummary fit_gpd_summary(int m, long long samples, std::uint64_t seed, bool keep_samples = false);
std::string format_gpd_fit(const GpdFitSummary& s);

/// 200-bin density histogram of the samples on [0, m] with the exact density.
std::string gpd_histogram_csv(const GpdFitSummary& s);

// Presets.

struct PresetPart {
    std::string suffix;
    SweepSpec spec;
};

struct Preset {
    std::string name;
    std::string description;
    std::vector<std::string> required;  ///< keys the caller must supply via overrides
    std::vector<PresetPart> parts;
};

const std::vector<Preset>& presets();
const Preset& find_preset(std::string_view name);

/// Runs every part of a preset into out_dir/<name>_<suffix>.csv. Overrides are
/// `key=value` pairs applied to each base config; mc_budget > 0 replaces the
/// preset budget. Returns the written paths.
std::vector<std::string> run_preset(const std::string& name,
                                    const std::vector<std::pair<std::string, std::string>>& overrides,
                                    const std::string& out_dir, long long mc_budget = 0,
                                    std::optional<std::uint64_t> seed = std::nullopt);

/// Splits "key=value".
std::pair<std::string, std::string> split_override(std::string_view kv);

}  // namespace serlink
