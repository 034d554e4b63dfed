// Command-line front end.
//
//   gsgp --dataset airfoil.csv --strategy u:5 --strategy g:0.25 --runs 30 --out results/
//   gsgp --synthetic friedman:500:5:0.1 --runs 10 --jobs 4 --out results/
//   gsgp trace --synthetic polynomial:50:2 --generations 5 --pop 8 --out archive.json
//
// Exit codes: 0 success, 1 configuration error, 2 some runs failed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsgp/gsgp.hpp"

namespace {

struct CommonOptions {
    std::string dataset;
    bool header = false;
    std::string synthetic;
    std::uint64_t seed = 0;
    std::size_t generations = 100;
    std::size_t pop = 100;
    std::string mutation_form = "bounded";
};

void add_common(CLI::App& app, CommonOptions& o) {
    auto* ds = app.add_option("--dataset", o.dataset, "CSV file, last column is the target");
    auto* syn = app.add_option("--synthetic", o.synthetic, "Synthetic data: <friedman|polynomial>[:rows[:features[:noise[:seed]]]]");
    ds->excludes(syn);
    app.add_flag("--header", o.header, "The CSV file starts with a header line");
    app.add_option("--seed", o.seed, "Base random seed")->capture_default_str();
    app.add_option("--generations", o.generations, "Generations after the initial population")->capture_default_str();
    app.add_option("--pop", o.pop, "Population size")->capture_default_str();
    app.add_option("--mutation-form", o.mutation_form, "bounded (two sigmoid-bounded trees) or raw (one unbounded tree)")
        ->check(CLI::IsMember({"bounded", "raw"}))
        ->capture_default_str();
}

gsgp::DataSource make_source(const CommonOptions& o) {
    gsgp::DataSource src;
    if (!o.dataset.empty()) {
        src.csv = o.dataset;
        src.has_header = o.header;
    } else if (!o.synthetic.empty()) {
        src.synthetic = gsgp::parse_synthetic_spec(o.synthetic);
    } else {
        throw gsgp::ParseError("one of --dataset or --synthetic is required");
    }
    return src;
}

gsgp::EvolutionConfig make_config(const CommonOptions& o) {
    gsgp::EvolutionConfig cfg;
    cfg.generations = o.generations;
    cfg.population_size = o.pop;
    cfg.mutation_form = o.mutation_form == "raw" ? gsgp::MutationForm::RawSingleTree : gsgp::MutationForm::BoundedTwoTree;
    return cfg;
}

void print_summary(const gsgp::CampaignReport& report) {
    std::cout << "dataset " << report.dataset_name << " (" << report.rows << " rows, " << report.n_features
              << " features), " << report.runs << " runs per strategy\n";
    for (const auto& s : report.strategies) {
        std::cout << "  " << s.name << ": completed " << s.completed << "/" << report.runs;
        if (s.median_test_rmse) {
            std::cout << ", median train " << *s.median_train_rmse << ", median test " << *s.median_test_rmse;
        }
        if (s.vs_baseline) {
            std::cout << ", p vs " << report.baseline << " = " << s.vs_baseline->p_value
                      << (s.significant_improvement ? " (improvement)" : "");
        }
        std::cout << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geometric semantic GP with multi-generational tournament selection"};
    app.require_subcommand(0, 1);

    CommonOptions common;
    add_common(app, common);
    std::vector<std::string> strategies;
    std::size_t runs = 100;
    std::string out_dir;
    std::size_t jobs = 1;
    app.add_option("--strategy", strategies, "Selection distribution u:<k> or g:<p> (repeatable); u:1 is always included");
    app.add_option("--runs", runs, "Runs per strategy")->capture_default_str();
    app.add_option("--out", out_dir, "Output directory for report.json and CSV files");
    app.add_option("--jobs", jobs, "Worker threads")->capture_default_str();

    auto* trace = app.add_subcommand("trace", "Run once and write the full archive as JSON");
    CommonOptions trace_opts;
    add_common(*trace, trace_opts);
    std::string trace_strategy = "u:1";
    std::string trace_out;
    trace->add_option("--strategy", trace_strategy, "Selection distribution")->capture_default_str();
    trace->add_option("--out", trace_out, "Archive JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*trace) {
            const gsgp::Dataset data = make_source(trace_opts).load();
            const gsgp::SplitDataset split = gsgp::split_70_30(data, gsgp::split_seed(trace_opts.seed, 0));
            gsgp::EvolutionConfig cfg = make_config(trace_opts);
            cfg.distribution = gsgp::parse_distribution(trace_strategy);
            cfg.seed = gsgp::run_seed(trace_opts.seed, gsgp::to_string(cfg.distribution), 0);
            gsgp::Archive archive;
            const auto result = gsgp::run_evolution(cfg, split, &archive);
            std::ofstream out(trace_out);
            if (!out) {
                std::cerr << "cannot write " << trace_out << '\n';
                return 1;
            }
            out << gsgp::archive_to_json(archive).dump() << '\n';
            std::cout << "final train " << result.final_train_rmse() << ", test " << result.final_test_rmse() << ", "
                      << gsgp::count_records(archive) << " records\n";
            return 0;
        }

        gsgp::Campaign c;
        c.data = make_source(common);
        for (const auto& s : strategies) c.strategies.push_back(gsgp::parse_distribution(s));
        if (c.strategies.empty()) c.strategies.push_back(gsgp::UniformLastK{1});
        c.runs = runs;
        c.base_seed = common.seed;
        c.evolution = make_config(common);
        c.output_dir = out_dir;
        c.jobs = jobs;
        const auto report = gsgp::run_campaign(c);
        print_summary(report);
        return report.complete() ? 0 : 2;
    } catch (const gsgp::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const gsgp::ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
