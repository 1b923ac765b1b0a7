// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Trace analytics: low-confidence step statistics, positional binning,
// end-of-thinking windows, stop-mode tables, length distributions, and the
// calibration matrix comparing a routed corpus against a baseline corpus.
//
// Cohort conventions: the confidence analyses (binning, windows, lengths)
// split per run by that run's own correct flag; calibration judges each
// sample once by majority vote over its seeds.
#ifndef TR_CORE_ANALYSIS_HPP
#define TR_CORE_ANALYSIS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "core/trace.hpp"

namespace tr::analysis {

// ============================================================
// Low-confidence statistics
// ============================================================

// Fraction of values strictly below tau.
double low_conf_ratio(const std::vector<double>& pmax_values, double tau);

// p_max of every thinking step of every trace, in corpus order.
std::vector<double> collect_pmax(const std::vector<RunTrace>& traces);

struct LowConfSweepRow {
    double tau = 0.0;
    double ratio = 0.0;
};

// low_conf_ratio over an inclusive tau grid lo, lo+step, ..., hi.
std::vector<LowConfSweepRow> low_conf_sweep(const std::vector<double>& pmax_values, double lo = 0.1,
                                            double hi = 0.95, double step = 0.05);

// ============================================================
// Positional binning
// ============================================================

struct BinCell {
    long count = 0;
    long low_conf = 0;
};

// Relative-position histogram: step t of a run with T thinking steps lands
// in bin floor(100*t/T) (0-based), except that the final step always lands
// in bin 99. One series per cohort.
struct BinnedSeries {
    std::array<BinCell, 100> correct{};
    std::array<BinCell, 100> incorrect{};
};
BinnedSeries binned_low_conf(const std::vector<RunTrace>& traces, double tau);

// ============================================================
// End-of-thinking window
// ============================================================

// Mean p_max at offset -k..-1 from the final thinking step, split by how the
// run stopped and whether it was correct. Runs shorter than k contribute
// only the offsets they have; empty (stop, cohort, offset) cells are omitted.
struct WindowRow {
    StopMode stop_mode = StopMode::EotToken;
    bool correct = false;
    int offset = 0; // -k .. -1
    double mean_p_max = 0.0;
    long count = 0;
};
std::vector<WindowRow> eot_window(const std::vector<RunTrace>& traces, int k = 10);

// ============================================================
// Stop modes and lengths
// ============================================================

struct StopModeRow {
    StopMode stop_mode = StopMode::EotToken;
    long count = 0;
    double fraction = 0.0;
};
// One row per stop mode (zero-count rows included); fractions sum to 1.
std::vector<StopModeRow> stop_mode_table(const std::vector<RunTrace>& traces);

struct HistRow {
    long bin_lo = 0; // [bin_lo, bin_lo + bin_width)
    bool correct = false;
    long count = 0;
};
struct LengthHistogram {
    long bin_width = 50;
    std::vector<HistRow> rows; // non-empty cells, sorted by (bin_lo, cohort)
    long correct_runs = 0;
    long incorrect_runs = 0;
    std::optional<double> correct_mean_length;
    std::optional<double> incorrect_mean_length;
};
LengthHistogram length_histogram(const std::vector<RunTrace>& traces, long bin_width = 50);

// ============================================================
// Calibration
// ============================================================

// Per-sample judgement of one corpus: majority-voted answer compared by the
// recorded correct flags. Requires all runs judged.
struct SampleVerdict {
    std::string sample_id;
    bool correct = false;
};
std::vector<SampleVerdict> majority_verdicts(const std::vector<RunTrace>& traces);

struct CalibrationMatrix {
    long tn = 0; // baseline correct   -> routed correct
    long fp = 0; // baseline correct   -> routed incorrect
    long tp = 0; // baseline incorrect -> routed correct
    long fn = 0; // baseline incorrect -> routed incorrect
};
// Both inputs are per-sample verdicts over the identical sample-id set.
CalibrationMatrix calibration(const std::vector<SampleVerdict>& baseline,
                              const std::vector<SampleVerdict>& routed);

// Quotients with zero denominators stay unset (reported as "undefined"),
// they are never folded to 0.
struct CalibrationScores {
    std::optional<double> fix_rate;  // tp / (tp + fn)
    std::optional<double> precision; // tp / (tp + fp)
    std::optional<double> f1;
    std::optional<double> err; // (tp - fp) / (tp + fn)
};
CalibrationScores calibration_scores(const CalibrationMatrix& m);

// ============================================================
// CSV emitters (plot-ready long format)
// ============================================================

std::string low_conf_sweep_csv(const std::vector<LowConfSweepRow>& rows);
std::string binned_csv(const BinnedSeries& series);
std::string eot_window_csv(const std::vector<WindowRow>& rows);
std::string stop_modes_csv(
    const std::vector<std::pair<std::string, std::vector<StopModeRow>>>& per_mode);
std::string length_histogram_csv(const LengthHistogram& h);
std::string lengths_summary_csv(const LengthHistogram& h);
std::string calibration_csv(const CalibrationMatrix& m, const CalibrationScores& s);

} // namespace tr::analysis

#endif
