// rawa_sim: run experiments, sweeps and reports for the Vanilla/RaWa simulator.
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "rawa/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

void print_summary(const std::string& label, const json& s) {
    auto stat = [&](const char* key) {
        const auto& v = s.at(key);
        char buf[160];
        std::snprintf(buf, sizeof buf, "mean %.4f  median %.4f  p95 %.4f  (n=%d)",
                      v.at("mean").get<double>(), v.at("median").get<double>(),
                      v.at("p95").get<double>(), v.at("n").get<int>());
        return std::string(buf);
    };
    std::cout << label << "  runs=" << s.at("runs") << "\n";
    std::cout << "  precision  " << stat("precision") << "\n";
    std::cout << "  recall     " << stat("recall") << "\n";
    std::cout << "  ttfb_ms    " << stat("ttfb_ms") << "\n";
    std::cout << "  resolved   " << s.at("resolved_fraction").get<double>() << "\n";
    std::cout << "  msgs/run   " << s.at("msgs_total_mean").get<double>() << "\n";
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator for Bitswap content discovery with random-walk forwarding"};
    app.require_subcommand(1);

    std::string config_path, grid_path, out_dir, trace_path, in_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    unsigned jobs = default_jobs();
    bool force = false;

    auto* run = app.add_subcommand("run", "Run one configuration for N seeded runs");
    run->add_option("--config", config_path, "JSON configuration file")->required();
    run->add_option("--seed", seed, "Base seed override");
    run->add_option("--runs", runs, "Number of runs override");
    run->add_option("--out", out_dir, "Output directory (default: config output_dir)");
    run->add_option("--jobs", jobs, "Worker threads");
    run->add_option("--trace", trace_path, "Write the event trace of the first run to this file");
    run->add_flag("--force", force, "Overwrite existing result files");

    auto* sw = app.add_subcommand("sweep", "Run the cross product of a parameter grid");
    sw->add_option("--config", config_path, "Base JSON configuration")->required();
    sw->add_option("--grid", grid_path, "JSON object mapping keys to value arrays")->required();
    sw->add_option("--seed", seed, "Base seed override");
    sw->add_option("--runs", runs, "Number of runs override");
    sw->add_option("--out", out_dir, "Output directory");
    sw->add_option("--jobs", jobs, "Worker threads");
    sw->add_flag("--force", force, "Overwrite existing result files");

    auto* report = app.add_subcommand("report", "Print the summaries found in a results directory");
    report->add_option("--in", in_dir, "Results directory")->required();

    CLI11_PARSE(app, argc, argv);

    rawa::ExperimentConfig config;
    if (*run || *sw) {
        try {
            config = rawa::load_config(config_path);
            if (seed) config.base_seed = *seed;
            if (runs) config.runs = *runs;
            if (!out_dir.empty()) config.output_dir = out_dir;
            if (auto errors = config.validate(); !errors.empty()) throw rawa::ConfigError(errors);
        } catch (const rawa::ConfigError& e) {
            for (const auto& err : e.errors) std::cerr << "config error: " << err << "\n";
            return kConfigError;
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kConfigError;
        }
    }

    try {
        if (*run) {
            const std::string stem = fs::path(config_path).stem().string();
            rawa::check_writable(config.output_dir, stem, force);
            if (!trace_path.empty()) {
                std::ofstream trace(trace_path);
                if (!trace) throw std::runtime_error("cannot write trace file " + trace_path);
                rawa::RunContext ctx(config, 0);
                ctx.sim().set_trace_stream(&trace);
                (void)ctx.execute();
            }
            const auto results = rawa::run_experiment(config, jobs);
            for (const auto& r : results)
                if (r.livelock) std::cerr << "warning: run " << r.run_index << " hit the event cap\n";
            rawa::write_results(config.output_dir, stem, config, results, force);
            print_summary(stem, rawa::summary_json(config, results));
            return 0;
        }
        if (*sw) {
            std::ifstream in(grid_path);
            if (!in) {
                std::cerr << "config error: cannot read grid " << grid_path << "\n";
                return kConfigError;
            }
            rawa::SweepGrid grid;
            try {
                grid.axes = json::parse(in);
                (void)grid.combinations();
            } catch (const std::exception& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return kConfigError;
            }
            const auto entries = rawa::sweep(config, grid, jobs);
            int failures = 0;
            for (const auto& e : entries) {
                if (e.error) {
                    std::cerr << e.name << ": " << *e.error << "\n";
                    ++failures;
                    continue;
                }
                rawa::write_results(config.output_dir, e.name, e.config, e.results, force);
                print_summary(e.name, rawa::summary_json(e.config, e.results));
            }
            return failures == 0 ? 0 : kRuntimeError;
        }
        if (*report) {
            if (!fs::is_directory(in_dir)) {
                std::cerr << "no such directory: " << in_dir << "\n";
                return kRuntimeError;
            }
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(in_dir)) {
                const auto name = entry.path().filename().string();
                if (name.size() > 13 && name.ends_with(".summary.json")) files.push_back(entry.path());
            }
            std::ranges::sort(files);
            if (files.empty()) {
                std::cerr << "no summaries in " << in_dir << "\n";
                return kRuntimeError;
            }
            for (const auto& f : files) {
                std::ifstream in(f);
                const auto name = f.filename().string();
                print_summary(name.substr(0, name.size() - 13), json::parse(in));
            }
            return 0;
        }
    } catch (const rawa::ConfigError& e) {
        for (const auto& err : e.errors) std::cerr << "config error: " << err << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
