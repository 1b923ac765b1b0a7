// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "core/error.hpp"
#include "core/metrics.hpp"

namespace tr::analysis {

using metrics::fmt_double;

namespace {

bool trace_correct(const RunTrace& t) {
    if (!t.correct.has_value())
        fail(ErrorKind::Validation,
             "run of sample \"" + t.sample_id + "\" has no correct flag; judge the corpus first");
    return *t.correct;
}

long thinking_steps(const RunTrace& t) {
    if (t.steps.empty())
        fail(ErrorKind::Validation, "run of sample \"" + t.sample_id + "\" has no thinking steps");
    return static_cast<long>(t.steps.size());
}

} // namespace

// ============================================================
// Low-confidence statistics
// ============================================================

double low_conf_ratio(const std::vector<double>& pmax_values, double tau) {
    if (pmax_values.empty()) fail(ErrorKind::InvalidArgument, "low_conf_ratio: no values");
    long low = 0;
    for (double v : pmax_values) low += v < tau ? 1 : 0;
    return static_cast<double>(low) / static_cast<double>(pmax_values.size());
}

std::vector<double> collect_pmax(const std::vector<RunTrace>& traces) {
    std::vector<double> values;
    for (const RunTrace& t : traces)
        for (const StepTrace& s : t.steps) values.push_back(s.p_max);
    return values;
}

std::vector<LowConfSweepRow> low_conf_sweep(const std::vector<double>& pmax_values, double lo,
                                            double hi, double step) {
    if (!(step > 0.0) || !(lo <= hi))
        fail(ErrorKind::InvalidArgument, "low_conf_sweep: need step > 0 and lo <= hi");
    const int points = static_cast<int>(std::llround((hi - lo) / step)) + 1;
    std::vector<LowConfSweepRow> rows;
    rows.reserve(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double tau = lo + static_cast<double>(i) * step;
        rows.push_back({tau, low_conf_ratio(pmax_values, tau)});
    }
    return rows;
}

// ============================================================
// Positional binning
// ============================================================

BinnedSeries binned_low_conf(const std::vector<RunTrace>& traces, double tau) {
    if (traces.empty()) fail(ErrorKind::InvalidArgument, "binned_low_conf: no traces");
    BinnedSeries series;
    for (const RunTrace& t : traces) {
        const long steps = thinking_steps(t);
        auto& bins = trace_correct(t) ? series.correct : series.incorrect;
        for (long i = 0; i < steps; ++i) {
            // Relative position on a fixed 100-slot axis; the final step is
            // pinned to the last slot so trajectories of any length end in
            // the same place.
            long bin = i == steps - 1 ? 99 : (100 * i) / steps;
            if (bin > 99) bin = 99;
            BinCell& cell = bins[static_cast<size_t>(bin)];
            cell.count += 1;
            cell.low_conf += t.steps[static_cast<size_t>(i)].p_max < tau ? 1 : 0;
        }
    }
    return series;
}

// ============================================================
// End-of-thinking window
// ============================================================

std::vector<WindowRow> eot_window(const std::vector<RunTrace>& traces, int k) {
    if (k < 1) fail(ErrorKind::InvalidArgument, "eot_window: k must be >= 1");
    if (traces.empty()) fail(ErrorKind::InvalidArgument, "eot_window: no traces");
    // (stop mode, cohort, offset) -> (sum of p_max, count)
    std::map<std::tuple<int, bool, int>, std::pair<double, long>> cells;
    for (const RunTrace& t : traces) {
        const long steps = thinking_steps(t);
        const bool correct = trace_correct(t);
        const long window = std::min<long>(k, steps);
        for (long j = 1; j <= window; ++j) {
            const StepTrace& s = t.steps[static_cast<size_t>(steps - j)];
            auto& cell = cells[{static_cast<int>(t.stop_mode), correct, static_cast<int>(-j)}];
            cell.first += s.p_max;
            cell.second += 1;
        }
    }
    std::vector<WindowRow> rows;
    for (const StopMode stop : {StopMode::EotToken, StopMode::ColdStop, StopMode::MaxLength}) {
        for (const bool correct : {true, false}) {
            for (int offset = -k; offset <= -1; ++offset) {
                const auto it = cells.find({static_cast<int>(stop), correct, offset});
                if (it == cells.end()) continue;
                const auto [sum, count] = it->second;
                rows.push_back({stop, correct, offset, sum / static_cast<double>(count), count});
            }
        }
    }
    return rows;
}

// ============================================================
// Stop modes and lengths
// ============================================================

std::vector<StopModeRow> stop_mode_table(const std::vector<RunTrace>& traces) {
    if (traces.empty()) fail(ErrorKind::InvalidArgument, "stop_mode_table: no traces");
    long counts[3] = {0, 0, 0};
    for (const RunTrace& t : traces) counts[static_cast<int>(t.stop_mode)] += 1;
    std::vector<StopModeRow> rows;
    for (const StopMode stop : {StopMode::EotToken, StopMode::ColdStop, StopMode::MaxLength}) {
        const long count = counts[static_cast<int>(stop)];
        rows.push_back(
            {stop, count, static_cast<double>(count) / static_cast<double>(traces.size())});
    }
    return rows;
}

LengthHistogram length_histogram(const std::vector<RunTrace>& traces, long bin_width) {
    if (bin_width < 1) fail(ErrorKind::InvalidArgument, "length_histogram: bin width must be >= 1");
    if (traces.empty()) fail(ErrorKind::InvalidArgument, "length_histogram: no traces");
    LengthHistogram h;
    h.bin_width = bin_width;
    std::map<std::pair<long, bool>, long> cells; // (bin_lo, correct) -> count
    double sum_correct = 0.0;
    double sum_incorrect = 0.0;
    for (const RunTrace& t : traces) {
        const bool correct = trace_correct(t);
        const long bin_lo = (t.generation_length / bin_width) * bin_width;
        cells[{bin_lo, correct}] += 1;
        if (correct) {
            h.correct_runs += 1;
            sum_correct += static_cast<double>(t.generation_length);
        } else {
            h.incorrect_runs += 1;
            sum_incorrect += static_cast<double>(t.generation_length);
        }
    }
    for (const auto& [key, count] : cells) {
        const auto [bin_lo, correct] = key;
        h.rows.push_back({bin_lo, correct, count});
    }
    // map order is (bin_lo asc, incorrect-before-correct); flip the cohort
    // order within each bin so "correct" reads first.
    std::stable_sort(h.rows.begin(), h.rows.end(), [](const HistRow& a, const HistRow& b) {
        return a.bin_lo != b.bin_lo ? a.bin_lo < b.bin_lo : a.correct && !b.correct;
    });
    if (h.correct_runs > 0) h.correct_mean_length = sum_correct / static_cast<double>(h.correct_runs);
    if (h.incorrect_runs > 0)
        h.incorrect_mean_length = sum_incorrect / static_cast<double>(h.incorrect_runs);
    return h;
}

// ============================================================
// Calibration
// ============================================================

std::vector<SampleVerdict> majority_verdicts(const std::vector<RunTrace>& traces) {
    if (traces.empty()) fail(ErrorKind::InvalidArgument, "majority_verdicts: no traces");
    std::vector<SampleVerdict> verdicts;
    for (const metrics::SampleOutcome& o : metrics::group_outcomes(traces)) {
        std::vector<std::pair<std::uint64_t, std::vector<TokenId>>> answers;
        answers.reserve(o.runs.size());
        for (const metrics::SeedRun& r : o.runs) answers.emplace_back(r.seed, r.answer);
        const std::vector<TokenId> winner = metrics::majority_vote(answers);
        // Identical answers are judged identically, so any run that produced
        // the winning answer carries the verdict.
        bool correct = false;
        for (const metrics::SeedRun& r : o.runs) {
            if (r.answer == winner) {
                correct = r.correct;
                break;
            }
        }
        verdicts.push_back({o.sample_id, correct});
    }
    return verdicts;
}

CalibrationMatrix calibration(const std::vector<SampleVerdict>& baseline,
                              const std::vector<SampleVerdict>& routed) {
    if (baseline.empty() || routed.empty())
        fail(ErrorKind::InvalidArgument, "calibration: empty verdict set");
    auto sorted = [](std::vector<SampleVerdict> v) {
        std::sort(v.begin(), v.end(), [](const SampleVerdict& a, const SampleVerdict& b) {
            return a.sample_id < b.sample_id;
        });
        return v;
    };
    const std::vector<SampleVerdict> base = sorted(baseline);
    const std::vector<SampleVerdict> rout = sorted(routed);
    if (base.size() != rout.size())
        fail(ErrorKind::InvalidArgument, "calibration: corpora cover different sample counts");
    CalibrationMatrix m;
    for (size_t i = 0; i < base.size(); ++i) {
        if (base[i].sample_id != rout[i].sample_id)
            fail(ErrorKind::InvalidArgument, "calibration: corpora cover different samples (\"" +
                                                 base[i].sample_id + "\" vs \"" +
                                                 rout[i].sample_id + "\")");
        if (base[i].correct) {
            (rout[i].correct ? m.tn : m.fp) += 1;
        } else {
            (rout[i].correct ? m.tp : m.fn) += 1;
        }
    }
    return m;
}

CalibrationScores calibration_scores(const CalibrationMatrix& m) {
    CalibrationScores s;
    const long fixable = m.tp + m.fn; // baseline errors
    const long flagged = m.tp + m.fp;
    if (fixable > 0) s.fix_rate = static_cast<double>(m.tp) / static_cast<double>(fixable);
    if (flagged > 0) s.precision = static_cast<double>(m.tp) / static_cast<double>(flagged);
    if (s.fix_rate && s.precision && *s.fix_rate + *s.precision > 0.0)
        s.f1 = 2.0 * *s.precision * *s.fix_rate / (*s.precision + *s.fix_rate);
    // Relative error reduction: (baseline errors - routed errors) / baseline
    // errors, which folds to (tp - fp) / (tp + fn). Negative when routing
    // introduces more errors than it fixes.
    if (fixable > 0) s.err = static_cast<double>(m.tp - m.fp) / static_cast<double>(fixable);
    return s;
}

// ============================================================
// CSV emitters
// ============================================================

namespace {

std::string opt_str(const std::optional<double>& v) {
    return v.has_value() ? fmt_double(*v) : "undefined";
}

const char* cohort_name(bool correct) { return correct ? "correct" : "incorrect"; }

} // namespace

std::string low_conf_sweep_csv(const std::vector<LowConfSweepRow>& rows) {
    std::string out = "tau,low_conf_ratio\n";
    for (const LowConfSweepRow& r : rows)
        out += fmt_double(r.tau) + "," + fmt_double(r.ratio) + "\n";
    return out;
}

std::string binned_csv(const BinnedSeries& series) {
    std::string out = "cohort,bin,count,low_conf,ratio\n";
    const auto emit = [&](const char* cohort, const std::array<BinCell, 100>& bins) {
        for (size_t b = 0; b < bins.size(); ++b) {
            const BinCell& cell = bins[b];
            const std::string ratio =
                cell.count > 0
                    ? fmt_double(static_cast<double>(cell.low_conf) / static_cast<double>(cell.count))
                    : "undefined";
            out += std::string(cohort) + "," + std::to_string(b) + "," +
                   std::to_string(cell.count) + "," + std::to_string(cell.low_conf) + "," + ratio +
                   "\n";
        }
    };
    emit("correct", series.correct);
    emit("incorrect", series.incorrect);
    return out;
}

std::string eot_window_csv(const std::vector<WindowRow>& rows) {
    std::string out = "stop_mode,cohort,offset,mean_p_max,count\n";
    for (const WindowRow& r : rows)
        out += std::string(stop_mode_name(r.stop_mode)) + "," + cohort_name(r.correct) + "," +
               std::to_string(r.offset) + "," + fmt_double(r.mean_p_max) + "," +
               std::to_string(r.count) + "\n";
    return out;
}

std::string stop_modes_csv(
    const std::vector<std::pair<std::string, std::vector<StopModeRow>>>& per_mode) {
    std::string out = "mode,stop_mode,fraction,count\n";
    for (const auto& [mode, rows] : per_mode)
        for (const StopModeRow& r : rows)
            out += mode + "," + stop_mode_name(r.stop_mode) + "," + fmt_double(r.fraction) + "," +
                   std::to_string(r.count) + "\n";
    return out;
}

std::string length_histogram_csv(const LengthHistogram& h) {
    std::string out = "cohort,bin_lo,bin_hi,count\n";
    for (const HistRow& r : h.rows)
        out += std::string(cohort_name(r.correct)) + "," + std::to_string(r.bin_lo) + "," +
               std::to_string(r.bin_lo + h.bin_width) + "," + std::to_string(r.count) + "\n";
    return out;
}

std::string lengths_summary_csv(const LengthHistogram& h) {
    std::string out = "cohort,runs,mean_length\n";
    out += "correct," + std::to_string(h.correct_runs) + "," + opt_str(h.correct_mean_length) + "\n";
    out += "incorrect," + std::to_string(h.incorrect_runs) + "," +
           opt_str(h.incorrect_mean_length) + "\n";
    return out;
}

std::string calibration_csv(const CalibrationMatrix& m, const CalibrationScores& s) {
    std::string out = "tn,fp,tp,fn,fix_rate,precision,f1,err\n";
    out += std::to_string(m.tn) + "," + std::to_string(m.fp) + "," + std::to_string(m.tp) + "," +
           std::to_string(m.fn) + "," + opt_str(s.fix_rate) + "," + opt_str(s.precision) + "," +
           opt_str(s.f1) + "," + opt_str(s.err) + "\n";
    return out;
}

} // namespace tr::analysis
