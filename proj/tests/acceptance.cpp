// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: ten end-to-end criteria, one pass/fail line each. This
// binary is intentionally independent of the unit-test framework — it is the
// go/no-go summary for the whole project, runnable on its own and scriptable
// by exit code (0 iff every criterion passes).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "core/analysis.hpp"
#include "core/engine.hpp"
#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/prob.hpp"
#include "core/rng.hpp"
#include "core/trace.hpp"
#include "harness/harness.hpp"

using namespace tr;

namespace {

// ============================================================
// Tiny check harness
// ============================================================

struct Criterion {
    std::vector<std::string> failures;
    void check(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void check_close(double got, double expect, double tol, const std::string& what) {
        if (!(std::abs(got - expect) <= tol))
            failures.push_back(what + " (got " + std::to_string(got) + ", want " +
                               std::to_string(expect) + ")");
    }
};

int g_failed = 0;

void run_criterion(int number, const std::string& title,
                   const std::function<void(Criterion&)>& body) {
    Criterion c;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("threw: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.failures.empty()) {
        std::printf("PASS  criterion %2d  %-58s (%.2fs)\n", number, title.c_str(), seconds);
    } else {
        ++g_failed;
        std::printf("FAIL  criterion %2d  %-58s (%.2fs)\n", number, title.c_str(), seconds);
        size_t shown = 0;
        for (const std::string& f : c.failures) {
            if (++shown > 5) {
                std::printf("      ... and %zu more\n", c.failures.size() - 5);
                break;
            }
            std::printf("      - %s\n", f.c_str());
        }
    }
    std::fflush(stdout);
}

// ============================================================
// Shared helpers
// ============================================================

ModelSpec toy_spec(int vocab = 24, int dim = 16, std::uint64_t seed = 11) {
    ModelSpec spec;
    spec.kind = ProviderKind::Toy;
    spec.vocab_size = vocab;
    spec.dim = dim;
    spec.eot_token_id = 0;
    spec.toy.seed = seed;
    return spec;
}

// Reference filter: direct transcription of the pipeline definition with a
// stable sort, kept deliberately separate from the production code path.
ProbVector reference_filter(const ProbVector& dist, const SamplingProfile& profile) {
    const int n = static_cast<int>(dist.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return a < b;
    });
    std::vector<bool> keep(n, true);
    if (profile.top_k > 0 && profile.top_k < n)
        for (int r = profile.top_k; r < n; ++r) keep[order[r]] = false;
    if (profile.top_p < 1.0) {
        double mass = 0.0;
        bool covered = false;
        for (int r = 0; r < n; ++r) {
            const int id = order[r];
            if (!keep[id]) continue;
            if (covered) {
                keep[id] = false;
                continue;
            }
            mass += dist[id];
            if (mass >= profile.top_p) covered = true; // the boundary token stays
        }
    }
    if (profile.min_p > 0.0) {
        double max_kept = 0.0;
        for (int i = 0; i < n; ++i)
            if (keep[i]) max_kept = std::max(max_kept, dist[i]);
        const double floor = profile.min_p * max_kept;
        for (int i = 0; i < n; ++i)
            if (keep[i] && dist[i] < floor) keep[i] = false;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        if (keep[i]) total += dist[i];
    ProbVector out(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (keep[i]) out[i] = dist[i] / total;
    return out;
}

ProbVector random_dist(Rng& rng, int n) {
    ProbVector dist(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = rng.next_double();
        if (rng.next_below(8) == 0) v = 0.0;               // exact zeros
        if (i > 0 && rng.next_below(6) == 0) v = dist[i - 1]; // exact ties
        dist[i] = v;
        total += v;
    }
    if (total == 0.0) {
        dist[0] = 1.0;
        return dist;
    }
    for (double& v : dist) v /= total;
    double sum = 0.0;
    int largest = 0;
    for (int i = 0; i < n; ++i) {
        sum += dist[i];
        if (dist[i] > dist[largest]) largest = i;
    }
    dist[largest] += 1.0 - sum; // force exact sum 1
    return dist;
}

int run_command(const std::string& command) { return std::system(command.c_str()); }

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream cs(line);
        std::string cell;
        while (std::getline(cs, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

// ============================================================
// Criteria 1-10
// ============================================================

void criterion_1_filter_oracle(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(20260819);
    int cases = 0;
    while (cases < 1200) {
        const int n = 2 + static_cast<int>(rng.next_below(63)); // |V| <= 64
        const ProbVector dist = random_dist(rng, n);
        SamplingProfile profile;
        profile.top_k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n + 1)));
        profile.top_p = rng.next_below(3) == 0 ? 1.0 : 0.05 + 0.95 * rng.next_double();
        profile.min_p = rng.next_below(3) == 0 ? 0.0 : rng.next_double() * 0.8;
        const ProbVector got = prob::sample_filter(dist, profile);
        const ProbVector want = reference_filter(dist, profile);
        for (int i = 0; i < n; ++i)
            if (std::abs(got[i] - want[i]) > 1e-12) {
                c.check(false, "case " + std::to_string(cases) + " token " + std::to_string(i) +
                                   ": |" + std::to_string(got[i]) + " - " +
                                   std::to_string(want[i]) + "| > 1e-12");
                break;
            }
        ++cases;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.check(seconds < 10.0, "filter oracle took " + std::to_string(seconds) + "s (budget 10s)");
}

void criterion_2_soft_embed_oracle(Criterion& c) {
    Rng rng(77);
    for (int cases = 0; cases < 1200; ++cases) {
        const int vocab = 4 + static_cast<int>(rng.next_below(28));
        const int dim = 1 + static_cast<int>(rng.next_below(64)); // d <= 64
        EmbeddingTable table;
        table.vocab_size = vocab;
        table.dim = dim;
        table.data.resize(static_cast<size_t>(vocab) * dim);
        for (double& v : table.data) v = 2.0 * rng.next_double() - 1.0;

        const int j = 1 + static_cast<int>(rng.next_below(6));
        SparseWeights weights;
        double total = 0.0;
        for (int k = 0; k < j && k < vocab; ++k) {
            const double w = 0.05 + rng.next_double();
            weights.entries.emplace_back(k * (vocab / j ? vocab / j : 1), w);
            total += w;
        }
        // ids must be distinct + ascending; normalize
        std::set<TokenId> ids;
        bool ok = true;
        for (auto& [id, w] : weights.entries) {
            if (!ids.insert(id).second || id >= vocab) ok = false;
            w /= total;
        }
        if (!ok) continue;

        const std::vector<double> got = soft_embed(weights, table);
        // long double accumulation as the independent reference
        for (int d = 0; d < dim; ++d) {
            long double acc = 0.0L;
            for (const auto& [id, w] : weights.entries)
                acc += static_cast<long double>(w) * table.row(id)[d];
            if (std::abs(got[d] - static_cast<double>(acc)) > 1e-9) {
                c.check(false, "case " + std::to_string(cases) + " dim " + std::to_string(d) +
                                   " deviates beyond 1e-9");
                return;
            }
        }
    }
}

void criterion_3_mode_collapse(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto model = std::make_shared<const Model>(toy_spec());
    Rng rng(5);
    int prompts = 0;
    for (int p = 0; p < 22; ++p) {
        std::vector<TokenId> prompt;
        const int len = 2 + static_cast<int>(rng.next_below(4));
        for (int i = 0; i < len; ++i)
            prompt.push_back(1 + static_cast<TokenId>(rng.next_below(23)));
        ++prompts;

        // tau = 0: every step routes latent -> bitwise soft_thinking
        RoutingConfig router = default_config(Mode::ThinkRouter);
        router.tau = 0.0;
        router.seed = 13;
        router.max_output_length = 48;
        RoutingConfig soft = default_config(Mode::SoftThinking);
        soft.tau = 0.0;
        soft.seed = 13;
        soft.max_output_length = 48;
        const RunTrace a = engine::run(model, prompt, router, "t");
        const RunTrace b = engine::run(model, prompt, soft, "t");
        if (!(a.steps == b.steps && a.answer_tokens == b.answer_tokens &&
              a.stop_mode == b.stop_mode)) {
            c.check(false, "tau=0 router != soft_thinking on prompt " + std::to_string(p));
            return;
        }

        // tau = 1.01 (p_max <= 1 < tau always) with Cold Stop off -> bitwise
        // cot_sampling
        RoutingConfig hard = default_config(Mode::ThinkRouter);
        hard.tau = 1.01;
        hard.cold_stop.enabled = false;
        hard.seed = 13;
        hard.max_output_length = 48;
        RoutingConfig cot = default_config(Mode::CotSampling);
        cot.tau = 1.01;
        cot.seed = 13;
        cot.max_output_length = 48;
        const RunTrace d = engine::run(model, prompt, hard, "t");
        const RunTrace e = engine::run(model, prompt, cot, "t");
        if (!(d.steps == e.steps && d.answer_tokens == e.answer_tokens &&
              d.stop_mode == e.stop_mode)) {
            c.check(false, "tau=1.01 router != cot_sampling on prompt " + std::to_string(p));
            return;
        }
    }
    c.check(prompts >= 20, "fewer than 20 prompts exercised");
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.check(seconds < 60.0, "mode collapse took " + std::to_string(seconds) + "s (budget 60s)");
}

void criterion_4_cold_stop_exact(Criterion& c) {
    // Scripted rows: "cold" rows have near-zero entropy (peaked far from the
    // terminator), the excursion row has entropy well above delta.
    const int vocab = 8;
    const TokenId eot = 0;
    const auto peaked = [&](TokenId argmax) {
        LogitVector row(vocab, -40.0);
        row[argmax] = 40.0;
        return row;
    };
    const auto excursion = [&] {
        LogitVector row(vocab, 0.0);
        row[1] = 0.1; // argmax 1, entropy ~ ln(8)
        return row;
    };

    for (const int window : {1, 3, 256}) {
        // exact trigger: `window` cold rows, then enough spare rows
        {
            ModelSpec spec;
            spec.kind = ProviderKind::Scripted;
            spec.vocab_size = vocab;
            spec.eot_token_id = eot;
            auto rows = std::make_shared<std::vector<LogitVector>>();
            for (int i = 0; i < window; ++i) rows->push_back(peaked(2));
            // the answer phase keeps consuming rows; park it on the terminator
            for (int i = 0; i < 8; ++i) rows->push_back(peaked(eot));
            spec.rows = std::shared_ptr<const std::vector<LogitVector>>(rows);

            RoutingConfig config = default_config(Mode::CotGreedy);
            config.cold_stop.enabled = true;
            config.cold_stop.delta = 0.01;
            config.cold_stop.window = window;
            config.max_output_length = window + 16;
            const RunTrace t = engine::run(spec, {1}, config, "cs");
            c.check(t.stop_mode == StopMode::ColdStop,
                    "window " + std::to_string(window) + ": expected a cold stop");
            c.check(static_cast<int>(t.steps.size()) == window,
                    "window " + std::to_string(window) + ": stopped after " +
                        std::to_string(t.steps.size()) + " steps, want exactly " +
                        std::to_string(window));
            if (!t.steps.empty()) {
                c.check(t.steps.back().cold_counter == window,
                        "window " + std::to_string(window) + ": final counter " +
                            std::to_string(t.steps.back().cold_counter));
                for (int i = 0; i < static_cast<int>(t.steps.size()); ++i)
                    c.check(t.steps[i].cold_counter == i + 1,
                            "window " + std::to_string(window) + ": counter at step " +
                                std::to_string(i));
            }
        }
        // one excursion at step window-1 prevents the trigger at `window`
        if (window > 1) {
            ModelSpec spec;
            spec.kind = ProviderKind::Scripted;
            spec.vocab_size = vocab;
            spec.eot_token_id = eot;
            auto rows = std::make_shared<std::vector<LogitVector>>();
            for (int i = 0; i < window - 1; ++i) rows->push_back(peaked(2));
            rows->push_back(excursion());
            for (int i = 0; i < 8; ++i) rows->push_back(peaked(eot));
            spec.rows = std::shared_ptr<const std::vector<LogitVector>>(rows);

            RoutingConfig config = default_config(Mode::CotGreedy);
            config.cold_stop.enabled = true;
            config.cold_stop.delta = 0.01;
            config.cold_stop.window = window;
            config.max_output_length = window + 3; // not enough to re-trigger
            const RunTrace t = engine::run(spec, {1}, config, "cs");
            c.check(t.stop_mode != StopMode::ColdStop,
                    "window " + std::to_string(window) +
                        ": the excursion should have prevented the cold stop");
        }
    }
}

void criterion_5_pass_at_k(Criterion& c) {
    for (int n = 1; n <= 8; ++n)
        for (int cc = 0; cc <= n; ++cc)
            for (int k = 1; k <= n; ++k) {
                long total = 0, hit = 0;
                for (unsigned mask = 0; mask < (1u << n); ++mask) {
                    if (__builtin_popcount(mask) != k) continue;
                    ++total;
                    if ((mask & ((1u << cc) - 1u)) != 0) ++hit;
                }
                const double want = static_cast<double>(hit) / static_cast<double>(total);
                const double got = metrics::pass_at_k(n, cc, k);
                if (got != want) {
                    c.check(false, "pass_at_k(" + std::to_string(n) + "," + std::to_string(cc) +
                                       "," + std::to_string(k) + ") != enumeration");
                    return;
                }
            }
    c.check(metrics::pass_at_k(3, 2, 1) == 2.0 / 3.0, "Pass@1 with n=3, c=2 must be exactly 2/3");
}

void criterion_6_calibration(Criterion& c) {
    for (long tn = 0; tn <= 3; ++tn)
        for (long fp = 0; fp <= 3; ++fp)
            for (long tp = 0; tp <= 3; ++tp)
                for (long fn = 0; fn <= 3; ++fn) {
                    const analysis::CalibrationMatrix m{tn, fp, tp, fn};
                    const analysis::CalibrationScores s = analysis::calibration_scores(m);
                    const std::string tag = std::to_string(tn) + "," + std::to_string(fp) + "," +
                                            std::to_string(tp) + "," + std::to_string(fn);
                    if (tp + fn > 0) {
                        c.check(s.fix_rate.has_value() &&
                                    *s.fix_rate == static_cast<double>(tp) / (tp + fn),
                                "fix_rate at " + tag);
                        c.check(s.err.has_value() &&
                                    *s.err == static_cast<double>(tp - fp) / (tp + fn),
                                "err at " + tag);
                    } else {
                        c.check(!s.fix_rate && !s.err, "undefined fix_rate/err at " + tag);
                    }
                    if (tp + fp > 0)
                        c.check(s.precision.has_value() &&
                                    *s.precision == static_cast<double>(tp) / (tp + fp),
                                "precision at " + tag);
                    else
                        c.check(!s.precision, "undefined precision at " + tag);
                    // the CSV spells the unset quotients out
                    const std::string csv = analysis::calibration_csv(m, s);
                    if (tp + fn == 0)
                        c.check(csv.find("undefined") != std::string::npos,
                                "CSV must print \"undefined\" at " + tag);
                }
}

void criterion_7_analysis_invariants(Criterion& c) {
    // A real corpus from a sweep feeds all three invariants.
    const harness::Experiment ex = harness::prepare(harness::parse_experiment(R"({
        "model": {"kind": "toy", "vocab_size": 24, "dim": 16, "eot_token_id": 0, "seed": 11},
        "tasks": {"count": 6, "seed": 1, "prompt_min": 2, "prompt_max": 4},
        "seeds": [0, 7],
        "routing": {"tau": 0.6, "max_output_length": 48},
        "workers": 2
    })"));
    const harness::SweepResult sweep = harness::run_sweep(ex);
    c.check(sweep.failures.empty(), "sweep reported failures");

    // (a) bin conservation: every thinking step lands in exactly one bin
    const analysis::BinnedSeries series = analysis::binned_low_conf(sweep.corpus, 0.6);
    long binned = 0;
    for (const analysis::BinCell& cell : series.correct) binned += cell.count;
    for (const analysis::BinCell& cell : series.incorrect) binned += cell.count;
    long steps = 0;
    for (const RunTrace& t : sweep.corpus) steps += static_cast<long>(t.steps.size());
    c.check(binned == steps, "binned " + std::to_string(binned) + " of " + std::to_string(steps) +
                                 " thinking steps");

    // (b) low_conf_ratio is monotone nondecreasing in tau
    const std::vector<double> pmax = analysis::collect_pmax(sweep.corpus);
    double prev = -1.0;
    for (double tau = 0.05; tau <= 1.0; tau += 0.05) {
        const double r = analysis::low_conf_ratio(pmax, tau);
        if (r < prev) {
            c.check(false, "low_conf_ratio decreased at tau " + std::to_string(tau));
            break;
        }
        prev = r;
    }

    // (c) stop fractions sum to 1 within 1e-12, per mode
    std::map<Mode, std::vector<RunTrace>> by_mode;
    for (const RunTrace& t : sweep.corpus) by_mode[t.config.mode].push_back(t);
    for (const auto& [mode, traces] : by_mode) {
        double sum = 0.0;
        for (const analysis::StopModeRow& row : analysis::stop_mode_table(traces))
            sum += row.fraction;
        c.check(std::abs(sum - 1.0) <= 1e-12,
                std::string("stop fractions for ") + mode_name(mode) + " sum to " +
                    std::to_string(sum));
    }
}

void criterion_8_replay_determinism(Criterion& c) {
    // 100 randomized toy runs; each serialized record must replay bitwise
    // from a freshly built model (fresh weights, fresh RNG) — the portable
    // stand-in for moving the file to another machine.
    Rng rng(31337);
    int verified = 0;
    for (int i = 0; i < 100; ++i) {
        const int vocab = 8 + static_cast<int>(rng.next_below(24));
        const int dim = 4 + static_cast<int>(rng.next_below(16));
        const ModelSpec spec = toy_spec(vocab, dim, rng.next_u64());

        RoutingConfig config = default_config(static_cast<Mode>(rng.next_below(5)));
        config.seed = rng.next_u64();
        config.tau = rng.next_double();
        config.max_output_length = 8 + static_cast<long>(rng.next_below(56));
        std::vector<TokenId> prompt;
        const int len = 1 + static_cast<int>(rng.next_below(5));
        for (int k = 0; k < len; ++k)
            prompt.push_back(static_cast<TokenId>(rng.next_below(static_cast<std::uint64_t>(vocab))));

        const RunTrace t = engine::run(spec, prompt, config, "r" + std::to_string(i));
        const std::string bytes = serialize_run(t);
        const RunTrace back = deserialize_run(bytes);
        if (serialize_run(back) != bytes) {
            c.check(false, "run " + std::to_string(i) + ": bytes changed across a round trip");
            return;
        }
        const engine::ReplayReport report = engine::replay_run(back);
        if (!report.pass) {
            c.check(false, "run " + std::to_string(i) + " diverged: " + report.detail);
            return;
        }
        ++verified;
    }
    c.check(verified == 100, "only " + std::to_string(verified) + " of 100 replays verified");
}

void criterion_9_remote_agreement(Criterion& c) {
    const auto dir = std::filesystem::temp_directory_path() / "tr_acceptance_remote";
    std::filesystem::create_directories(dir);
    const std::string model_file = (dir / "toy.json").string();
    {
        std::ofstream out(model_file, std::ios::binary);
        out << model_spec_to_json(toy_spec()) << "\n";
    }
    ModelSpec remote;
    remote.kind = ProviderKind::Remote;
    remote.vocab_size = 24;
    remote.dim = 16;
    remote.eot_token_id = 0;
    remote.remote_command = {TEST_MODELD_PATH, model_file};
    remote.remote_embedding.kind = RemoteEmbedding::Kind::Toy;
    remote.remote_embedding.toy = toy_spec().toy;

    const auto local_model = std::make_shared<const Model>(toy_spec());
    const auto remote_model = std::make_shared<const Model>(remote);

    // logit-level agreement within 1e-6 on mixed token/soft streams
    Session local(local_model, {3, 7});
    Session wire(remote_model, {3, 7});
    const LogitVector l0 = local.next_logits(std::nullopt);
    const LogitVector w0 = wire.next_logits(std::nullopt);
    for (size_t i = 0; i < l0.size(); ++i)
        if (std::abs(l0[i] - w0[i]) > 1e-6) {
            c.check(false, "prompt logits deviate at " + std::to_string(i));
            break;
        }
    Rng rng(4);
    for (int step = 0; step < 24; ++step) {
        InputElement element;
        if (rng.next_below(2) == 0) {
            element = InputElement::discrete(static_cast<TokenId>(rng.next_below(24)));
        } else {
            std::vector<double> vec(16);
            for (double& v : vec) v = rng.next_double();
            element = InputElement::soft(std::move(vec));
        }
        const LogitVector a = local.next_logits(element);
        const LogitVector b = wire.next_logits(element);
        for (size_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i] - b[i]) > 1e-6) {
                c.check(false, "step " + std::to_string(step) + " logit " + std::to_string(i) +
                                   " deviates by " + std::to_string(std::abs(a[i] - b[i])));
                return;
            }
    }

    // full runs agree end to end in every mode
    for (const Mode mode : {Mode::CotSampling, Mode::CotGreedy, Mode::SoftThinking,
                            Mode::RandomRouting, Mode::ThinkRouter}) {
        RoutingConfig config = default_config(mode);
        config.seed = 7;
        config.max_output_length = 32;
        const RunTrace a = engine::run(local_model, {2, 9, 4}, config, "m");
        const RunTrace b = engine::run(remote_model, {2, 9, 4}, config, "m");
        c.check(a.steps == b.steps && a.answer_tokens == b.answer_tokens &&
                    a.stop_mode == b.stop_mode,
                std::string("mode ") + mode_name(mode) + " diverges over the wire");
    }
    std::filesystem::remove_all(dir);
}

void criterion_10_end_to_end(Criterion& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto dir = std::filesystem::temp_directory_path() / "tr_acceptance_e2e";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    // Demo experiment: all five modes, three seeds, a tau grid on held-out
    // validation tasks.
    const std::string config_path = (dir / "experiment.json").string();
    {
        std::ofstream out(config_path, std::ios::binary);
        out << R"({
    "model": {"kind": "toy", "vocab_size": 24, "dim": 16, "eot_token_id": 0, "seed": 11},
    "tasks": {"count": 8, "seed": 1, "prompt_min": 2, "prompt_max": 5},
    "seeds": [0, 7, 42],
    "routing": {"tau": 0.6, "max_output_length": 64},
    "grid": {"tau_grid": [0.4, 0.6, 0.8], "validation_size": 3},
    "workers": 4
})";
    }
    const std::string out_dir = (dir / "out").string();
    const std::string cli = TEST_CLI_PATH;

    // sweep through the real CLI binary
    const int sweep_rc = run_command(cli + " sweep --config " + config_path + " --out " + out_dir +
                                     " > " + (dir / "sweep.log").string() + " 2>&1");
    c.check(sweep_rc == 0, "sweep exited " + std::to_string(sweep_rc));
    const std::string corpus = out_dir + "/corpus.ndjson";
    c.check(std::filesystem::exists(corpus), "sweep wrote no corpus");
    c.check(std::filesystem::exists(out_dir + "/tau_table.csv"), "sweep wrote no tau table");

    // main table: five modes, measurably different rows
    const std::string metrics_inline = slurp(out_dir + "/metrics.csv");
    const auto rows = csv_rows(metrics_inline);
    c.check(rows.size() == 6, "metrics.csv must have 5 mode rows and a header");
    std::set<std::string> modes;
    std::set<std::pair<std::string, std::string>> distinct;
    for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4) continue;
        modes.insert(rows[i][0]);
        distinct.insert({rows[i][2], rows[i][3]}); // (pass1, mean_length)
    }
    c.check(modes.size() == 5, "expected 5 distinct modes, got " + std::to_string(modes.size()));
    c.check(distinct.size() >= 3, "fewer than 3 measurably different (pass1, length) rows: " +
                                      std::to_string(distinct.size()));

    // analyses re-derive from the corpus through the CLI; metrics must be
    // byte-identical to the sweep's inline table
    const std::string reports = (dir / "reports").string();
    for (const char* analysis :
         {"metrics", "low-conf", "bins", "eot-window", "stop-modes", "lengths"}) {
        const int rc = run_command(cli + " analyze " + corpus + " --analysis " + analysis +
                                   " --out " + reports + " > /dev/null 2>&1");
        c.check(rc == 0, std::string("analyze ") + analysis + " exited " + std::to_string(rc));
    }
    c.check(slurp(reports + "/metrics.csv") == metrics_inline,
            "re-derived metrics.csv differs from the sweep's inline table");

    // confidence bins: the full 100-bin series for both cohorts
    const auto bin_rows = csv_rows(slurp(reports + "/confidence_bins.csv"));
    c.check(bin_rows.size() == 201, "confidence_bins.csv must carry 200 cells, got " +
                                        std::to_string(bin_rows.size() - 1));

    // stop-mode table: fractions sum to 1 per mode
    const auto stop_rows = csv_rows(slurp(reports + "/stop_modes.csv"));
    std::map<std::string, double> fraction_sums;
    for (size_t i = 1; i < stop_rows.size(); ++i)
        if (stop_rows[i].size() == 4) fraction_sums[stop_rows[i][0]] += std::stod(stop_rows[i][2]);
    c.check(fraction_sums.size() == 5, "stop_modes.csv must cover all 5 modes");
    for (const auto& [mode, sum] : fraction_sums)
        c.check(std::abs(sum - 1.0) <= 1e-12, "stop fractions for " + mode + " sum to " +
                                                  std::to_string(sum));

    // length histogram + summary exist and are CSV-shaped
    for (const char* name : {"length_histogram.csv", "lengths_summary.csv", "low_conf_sweep.csv",
                             "eot_window.csv"}) {
        const std::string content = slurp(reports + "/" + name);
        c.check(!content.empty() && content.find(',') != std::string::npos,
                std::string(name) + " is missing or empty");
    }

    // the corpus replays clean through the CLI
    const int replay_rc =
        run_command(cli + " replay " + corpus + " > " + (dir / "replay.log").string() + " 2>&1");
    c.check(replay_rc == 0, "replay exited " + std::to_string(replay_rc));

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.check(seconds < 300.0, "end-to-end took " + std::to_string(seconds) + "s (budget 300s)");
    std::filesystem::remove_all(dir);
}

} // namespace

int main() {
    std::printf("acceptance gate\n===============\n");
    run_criterion(1, "filter pipeline matches the brute-force oracle", criterion_1_filter_oracle);
    run_criterion(2, "soft embeddings match long-double accumulation", criterion_2_soft_embed_oracle);
    run_criterion(3, "router collapses to both baselines at tau extremes", criterion_3_mode_collapse);
    run_criterion(4, "cold stop triggers exactly at the window", criterion_4_cold_stop_exact);
    run_criterion(5, "Pass@k equals exhaustive subset enumeration", criterion_5_pass_at_k);
    run_criterion(6, "calibration scores exact on all small matrices", criterion_6_calibration);
    run_criterion(7, "analysis invariants hold on a real sweep corpus", criterion_7_analysis_invariants);
    run_criterion(8, "100 randomized runs replay bitwise from bytes", criterion_8_replay_determinism);
    run_criterion(9, "remote provider agrees with the in-process model", criterion_9_remote_agreement);
    run_criterion(10, "full CLI pipeline produces the report suite", criterion_10_end_to_end);
    if (g_failed == 0) {
        std::printf("===============\nall 10 criteria passed\n");
        return 0;
    }
    std::printf("===============\n%d criteria FAILED\n", g_failed);
    return 1;
}
