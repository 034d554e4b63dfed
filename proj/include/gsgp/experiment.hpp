#pragma once

/// @file experiment.hpp
/// Multi-run campaigns comparing selection strategies against the u:1
/// baseline (standard GSGP), with JSON/CSV outputs.
///
/// Run r of every strategy uses the same 70/30 split (paired design). Seeds
/// depend only on (base_seed, strategy label, run index), and results are
/// assembled in input order after all workers join, so outputs do not depend
/// on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsgp/data.hpp"
#include "gsgp/evolve.hpp"
#include "gsgp/selection.hpp"
#include "gsgp/stats.hpp"

namespace gsgp {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr double kSignificanceLevel = 0.05;

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::FriedmanLike;
    std::size_t rows = 500;
    std::size_t n_features = 5;
    double noise = 0.0;
    std::uint64_t seed = 1;
};

/// "<kind>[:rows[:features[:noise[:seed]]]]", kind = friedman | polynomial.
[[nodiscard]] inline SyntheticSpec parse_synthetic_spec(std::string_view text) {
    std::vector<std::string_view> parts;
    for (std::size_t start = 0;;) {
        const auto pos = text.find(':', start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    auto fail = [&](const char* why) {
        throw ParseError("invalid synthetic spec \"" + std::string(text) + "\": " + why);
    };
    if (parts.size() > 5) fail("too many fields");
    SyntheticSpec s;
    if (parts[0] == "friedman") {
        s.kind = SyntheticKind::FriedmanLike;
    } else if (parts[0] == "polynomial") {
        s.kind = SyntheticKind::Polynomial;
    } else {
        fail("kind must be friedman or polynomial");
    }
    auto parse = [&](std::string_view f, auto& out) {
        auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
        if (ec != std::errc{} || p != f.data() + f.size()) fail("bad number");
    };
    if (parts.size() > 1) parse(parts[1], s.rows);
    if (parts.size() > 2) parse(parts[2], s.n_features);
    if (parts.size() > 3) parse(parts[3], s.noise);
    if (parts.size() > 4) parse(parts[4], s.seed);
    if (s.rows < 2 || s.n_features < 1) fail("need rows >= 2 and features >= 1");
    return s;
}

struct DataSource {
    std::optional<std::filesystem::path> csv;
    bool has_header = false;
    std::optional<SyntheticSpec> synthetic;

    [[nodiscard]] Dataset load() const {
        detail::require(csv.has_value() != synthetic.has_value(), "DataSource: exactly one of csv or synthetic required");
        Dataset d = csv ? load_csv(*csv, has_header)
                        : synthetic_dataset(synthetic->kind, synthetic->rows, synthetic->n_features, synthetic->noise,
                                            synthetic->seed);
        d.validate();
        return d;
    }
};

struct Campaign {
    DataSource data;
    /// Compared strategies; u:1 is added at the front when absent.
    std::vector<SelectionDistribution> strategies;
    std::size_t runs = 100;
    std::uint64_t base_seed = 0;
    /// Evolution parameters shared by all runs; distribution and seed are set per run.
    EvolutionConfig evolution{};
    /// Files are written here when non-empty.
    std::filesystem::path output_dir;
    std::size_t jobs = 1;
};

struct RunRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    std::optional<RunResult> result;
    std::string error;
};

struct StrategyReport {
    std::string name;
    SelectionDistribution distribution;
    std::vector<RunRecord> runs;
    std::size_t completed = 0;
    std::optional<double> median_train_rmse;
    std::optional<double> median_test_rmse;
    /// Against the baseline on final test RMSE; empty for the baseline itself.
    std::optional<RankSumResult> vs_baseline;
    bool significant_improvement = false;
    std::vector<std::size_t> offset_histogram;

    [[nodiscard]] std::vector<double> final_test() const {
        std::vector<double> v;
        for (const auto& r : runs)
            if (r.result) v.push_back(r.result->final_test_rmse());
        return v;
    }
    [[nodiscard]] std::vector<double> final_train() const {
        std::vector<double> v;
        for (const auto& r : runs)
            if (r.result) v.push_back(r.result->final_train_rmse());
        return v;
    }
};

struct CampaignReport {
    std::string dataset_name;
    std::size_t rows = 0;
    std::size_t n_features = 0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t runs = 0;
    std::uint64_t base_seed = 0;
    EvolutionConfig evolution{};
    std::vector<StrategyReport> strategies; // baseline first unless given elsewhere in input order
    std::string baseline = "u:1";
    double total_seconds = 0.0;

    [[nodiscard]] bool complete() const {
        return std::all_of(strategies.begin(), strategies.end(), [&](const auto& s) { return s.completed == runs; });
    }
};

// ---------------------------------------------------------------------------
// Seeding

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// base_seed XOR hash(strategy, run).
[[nodiscard]] constexpr std::uint64_t run_seed(std::uint64_t base_seed, std::string_view strategy, std::size_t run) noexcept {
    return base_seed ^ splitmix64(fnv1a(strategy) ^ splitmix64(run));
}

/// Shared by all strategies for a given run index.
[[nodiscard]] constexpr std::uint64_t split_seed(std::uint64_t base_seed, std::size_t run) noexcept {
    return splitmix64(base_seed ^ splitmix64(run ^ 0x5851f42d4c957f2dULL));
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

inline nlohmann::json evolution_json(const EvolutionConfig& c) {
    return {{"population_size", c.population_size},
            {"generations", c.generations},
            {"crossover_rate", c.crossover_rate},
            {"mutation_rate", c.mutation_rate},
            {"mutation_step", c.mutation_step},
            {"tournament_size", c.tournament_size},
            {"elitism", c.elitism},
            {"mutation_form", c.mutation_form == MutationForm::BoundedTwoTree ? "bounded-two-tree" : "raw-single-tree"},
            {"max_initial_depth", c.tree_gen.max_depth},
            {"constant_range", {c.tree_gen.constant_min, c.tree_gen.constant_max}},
            {"p_constant", c.tree_gen.p_constant}};
}

} // namespace detail

enum class BoxplotSplit { Train, Test };

/// One column per strategy, one row per run, header = strategy names. Cells of
/// failed runs are left empty. Throws before writing if there are no strategies.
inline void emit_boxplot_data(const CampaignReport& report, const std::filesystem::path& path,
                              BoxplotSplit which = BoxplotSplit::Test) {
    detail::require(!report.strategies.empty(), "emit_boxplot_data: report has no strategies");
    auto out = detail::open_out(path);
    for (std::size_t s = 0; s < report.strategies.size(); ++s) {
        out << (s ? "," : "") << report.strategies[s].name;
    }
    out << '\n';
    std::size_t n_rows = 0;
    for (const auto& s : report.strategies) n_rows = std::max(n_rows, s.runs.size());
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t s = 0; s < report.strategies.size(); ++s) {
            if (s) out << ',';
            const auto& runs = report.strategies[s].runs;
            if (r < runs.size() && runs[r].result) {
                const auto& res = *runs[r].result;
                out << detail::fmt_double(which == BoxplotSplit::Test ? res.final_test_rmse() : res.final_train_rmse());
            }
        }
        out << '\n';
    }
}

/// Deterministic report body: no timings, no thread count.
[[nodiscard]] inline nlohmann::json report_to_json(const CampaignReport& report) {
    nlohmann::json strategies = nlohmann::json::array();
    for (const auto& s : report.strategies) {
        nlohmann::json js;
        js["name"] = s.name;
        js["completed_runs"] = s.completed;
        js["complete"] = s.completed == report.runs;
        js["median_train_rmse"] = s.median_train_rmse ? nlohmann::json(*s.median_train_rmse) : nlohmann::json();
        js["median_test_rmse"] = s.median_test_rmse ? nlohmann::json(*s.median_test_rmse) : nlohmann::json();
        if (s.vs_baseline) {
            js["vs_baseline"] = {{"u_statistic", s.vs_baseline->u_statistic},
                                 {"p_value", s.vs_baseline->p_value},
                                 {"method", s.vs_baseline->method == RankSumMethod::Exact ? "exact" : "normal-approx"},
                                 {"degenerate", s.vs_baseline->degenerate},
                                 {"significant_improvement", s.significant_improvement}};
        } else {
            js["vs_baseline"] = nullptr;
        }
        js["final_train_rmse"] = s.final_train();
        js["final_test_rmse"] = s.final_test();
        js["offset_histogram"] = s.offset_histogram;
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& r : s.runs) {
            if (!r.result) failures.push_back({{"run", r.run}, {"error", r.error}});
        }
        js["failures"] = std::move(failures);
        strategies.push_back(std::move(js));
    }
    return {{"schema_version", kReportSchemaVersion},
            {"dataset",
             {{"name", report.dataset_name},
              {"rows", report.rows},
              {"features", report.n_features},
              {"train_rows", report.train_rows},
              {"test_rows", report.test_rows}}},
            {"runs", report.runs},
            {"base_seed", report.base_seed},
            {"baseline", report.baseline},
            {"pairing", "same 70/30 split per run index across strategies"},
            {"significance_level", kSignificanceLevel},
            {"test", "two-sided Wilcoxon rank-sum on final test RMSE vs baseline"},
            {"evolution", detail::evolution_json(report.evolution)},
            {"complete", report.complete()},
            {"strategies", std::move(strategies)}};
}

/// Writes report.json, runs.csv, trajectories.csv, boxplot_train.csv,
/// boxplot_test.csv and metadata.json (timings only) into `dir`.
inline void write_report_files(const CampaignReport& report, const std::filesystem::path& dir, std::size_t jobs) {
    std::filesystem::create_directories(dir);
    {
        auto out = detail::open_out(dir / "report.json");
        out << report_to_json(report).dump(2) << '\n';
    }
    {
        auto out = detail::open_out(dir / "runs.csv");
        out << "strategy,run,seed,split_seed,status,final_train_rmse,final_test_rmse\n";
        for (const auto& s : report.strategies) {
            for (const auto& r : s.runs) {
                out << s.name << ',' << r.run << ',' << r.seed << ',' << r.split_seed << ',';
                if (r.result) {
                    out << "ok," << detail::fmt_double(r.result->final_train_rmse()) << ','
                        << detail::fmt_double(r.result->final_test_rmse()) << '\n';
                } else {
                    out << "failed,,\n";
                }
            }
        }
    }
    {
        auto out = detail::open_out(dir / "trajectories.csv");
        out << "strategy,run,generation,best_train_rmse,best_test_rmse\n";
        for (const auto& s : report.strategies) {
            for (const auto& r : s.runs) {
                if (!r.result) continue;
                for (std::size_t g = 0; g < r.result->best_train_rmse.size(); ++g) {
                    out << s.name << ',' << r.run << ',' << g << ',' << detail::fmt_double(r.result->best_train_rmse[g])
                        << ',' << detail::fmt_double(r.result->best_test_rmse[g]) << '\n';
                }
            }
        }
    }
    emit_boxplot_data(report, dir / "boxplot_train.csv", BoxplotSplit::Train);
    emit_boxplot_data(report, dir / "boxplot_test.csv", BoxplotSplit::Test);
    {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& s : report.strategies) {
            for (const auto& r : s.runs) {
                if (r.result) runs.push_back({{"strategy", s.name}, {"run", r.run}, {"seconds", r.result->seconds}});
            }
        }
        const auto now = std::chrono::system_clock::now();
        nlohmann::json meta = {
            {"written_at_unix", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()},
            {"jobs", jobs},
            {"total_seconds", report.total_seconds},
            {"run_seconds", std::move(runs)}};
        auto out = detail::open_out(dir / "metadata.json");
        out << meta.dump(2) << '\n';
    }
}

// ---------------------------------------------------------------------------

/// Executes runs x strategies seeded runs on up to `c.jobs` threads. A failed
/// run is recorded with its error and the campaign continues.
[[nodiscard]] inline CampaignReport run_campaign(const Campaign& c) {
    detail::require(!c.strategies.empty(), "run_campaign: at least one strategy required");
    detail::require(c.runs >= 1, "run_campaign: runs must be positive");
    for (const auto& s : c.strategies) validate(s);
    c.evolution.validate();
    const auto start = std::chrono::steady_clock::now();

    const Dataset data = c.data.load();

    CampaignReport report;
    report.dataset_name = data.name;
    report.rows = data.rows();
    report.n_features = data.n_features();
    report.train_rows = train_size_70(data.rows());
    report.test_rows = data.rows() - report.train_rows;
    report.runs = c.runs;
    report.base_seed = c.base_seed;
    report.evolution = c.evolution;

    std::vector<SelectionDistribution> strategies = c.strategies;
    const SelectionDistribution baseline = UniformLastK{1};
    if (std::find(strategies.begin(), strategies.end(), baseline) == strategies.end()) {
        strategies.insert(strategies.begin(), baseline);
    }
    for (const auto& d : strategies) {
        StrategyReport s;
        s.name = to_string(d);
        s.distribution = d;
        s.runs.resize(c.runs);
        for (std::size_t r = 0; r < c.runs; ++r) {
            s.runs[r].run = r;
            s.runs[r].seed = run_seed(c.base_seed, s.name, r);
            s.runs[r].split_seed = split_seed(c.base_seed, r);
        }
        report.strategies.push_back(std::move(s));
    }

    const std::size_t n_tasks = report.strategies.size() * c.runs;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) {
            StrategyReport& s = report.strategies[t / c.runs];
            RunRecord& rec = s.runs[t % c.runs];
            try {
                const SplitDataset split = split_70_30(data, rec.split_seed);
                EvolutionConfig cfg = c.evolution;
                cfg.distribution = s.distribution;
                cfg.seed = rec.seed;
                rec.result = run_evolution(cfg, split);
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(c.jobs, 1, n_tasks);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    const StrategyReport* base = nullptr;
    for (auto& s : report.strategies) {
        for (const auto& r : s.runs) {
            if (!r.result) continue;
            ++s.completed;
            const auto& h = r.result->offset_histogram;
            if (s.offset_histogram.size() < h.size()) s.offset_histogram.resize(h.size(), 0);
            for (std::size_t o = 0; o < h.size(); ++o) s.offset_histogram[o] += h[o];
        }
        if (s.completed > 0) {
            s.median_train_rmse = median(s.final_train());
            s.median_test_rmse = median(s.final_test());
        }
        if (s.distribution == baseline) base = &s;
    }
    for (auto& s : report.strategies) {
        if (&s == base || base->completed == 0 || s.completed == 0) continue;
        const auto a = s.final_test();
        const auto b = base->final_test();
        s.vs_baseline = rank_sum_test(a, b);
        s.significant_improvement =
            s.vs_baseline->p_value < kSignificanceLevel && *s.median_test_rmse < *base->median_test_rmse;
    }
    report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!c.output_dir.empty()) {
        write_report_files(report, c.output_dir, c.jobs);
    }
    return report;
}

} // namespace gsgp
