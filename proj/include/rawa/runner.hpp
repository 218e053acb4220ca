// Experiment orchestration: configuration, seeded runs, sweeps and result files.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rawa/dht.hpp"
#include "rawa/metrics.hpp"
#include "rawa/netsim.hpp"
#include "rawa/rawa.hpp"
#include "rawa/topology.hpp"
#include "rawa/vanilla.hpp"

namespace rawa {

enum class Protocol { Vanilla, RaWa };

[[nodiscard]] std::string_view to_string(Protocol protocol);

struct Departure {
    std::uint32_t node{0};
    Millis at{0};
};

struct ExperimentConfig {
    Protocol protocol{Protocol::RaWa};
    AdversaryKind adversary{AdversaryKind::None};
    std::size_t n_peers{50};
    std::size_t out_links{4};
    LinkSpec link{};
    double dial_rtt_multiplier{1.0};
    DhtConfig dht{};
    std::size_t block_size{1025};
    RaWaConfig rawa{};
    VanillaConfig vanilla{};
    bool fake_have_on_verify{true};
    std::size_t runs{100};
    std::uint64_t base_seed{1};
    std::vector<Departure> churn;
    bool fixed_topology{false};
    Millis stagger{0};
    std::uint64_t event_cap{10'000'000};
    std::string output_dir{"results"};

    [[nodiscard]] std::size_t honest_count() const;
    /// Every violated constraint, in field order. Empty means valid.
    [[nodiscard]] std::vector<std::string> validate() const;
    /// Hex prefix of a SHA-256 over the canonical JSON form.
    [[nodiscard]] std::string fingerprint() const;
};

/// Thrown for invalid configuration; `errors` lists every problem found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    std::vector<std::string> errors;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Missing keys keep their defaults. Throws ConfigError on malformed values.
void from_json(const nlohmann::json& j, ExperimentConfig& c);
/// Applies the keys of `overrides` on top of `base`.
[[nodiscard]] ExperimentConfig apply_overrides(const ExperimentConfig& base,
                                               const nlohmann::json& overrides);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

struct RunResult {
    std::string fingerprint;
    std::size_t run_index{0};
    std::uint64_t seed{0};
    RunMetrics metrics;
    std::uint64_t trace_hash{0};
    std::uint64_t events{0};
    bool livelock{false};
};

/// Everything assembled for one run, exposed for scenario-level tests.
class RunContext {
public:
    RunContext(const ExperimentConfig& config, std::size_t run_index);
    ~RunContext();

    /// Issues every request, runs to quiescence, classifies and scores.
    RunResult execute();

    [[nodiscard]] Simulator& sim() { return *sim_; }
    [[nodiscard]] const GroundTruth& truth() const { return truth_; }
    [[nodiscard]] const MetricsCollector& collector() const { return collector_; }
    [[nodiscard]] const ObservationLog* observations() const;
    [[nodiscard]] const std::vector<PeerId>& honest() const { return honest_; }
    [[nodiscard]] BitswapNode& engine(PeerId p);
    [[nodiscard]] SubgraphMap subgraph();
    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    ExperimentConfig config_;
    std::size_t run_index_;
    std::uint64_t seed_;
    DummyDht dht_;
    std::unique_ptr<Simulator> sim_;
    MetricsCollector collector_;
    std::unique_ptr<ObservationRecorder> recorder_;
    std::vector<PeerId> honest_;
    std::vector<BitswapNode*> engines_;
    GroundTruth truth_;
};

/// Runs `config.runs` runs with seeds base_seed + i. Results are ordered by
/// run index. Throws ConfigError before any run if the config is invalid.
[[nodiscard]] std::vector<RunResult> run_experiment(const ExperimentConfig& config,
                                                    unsigned jobs = 1);

struct SweepGrid {
    nlohmann::json axes;  // key -> array of values

    /// Cross product of every axis as override objects, in lexicographic axis order.
    [[nodiscard]] std::vector<nlohmann::json> combinations() const;
};

struct SweepEntry {
    std::string name;
    ExperimentConfig config;
    std::vector<RunResult> results;
    std::optional<std::string> error;
};

[[nodiscard]] std::vector<SweepEntry> sweep(const ExperimentConfig& base, const SweepGrid& grid,
                                            unsigned jobs = 1);

inline constexpr const char* kCsvHeader =
    "run,seed,protocol,adversary,p,eta,block_size,precision,recall,resolved_fraction,"
    "ttfb_mean_ms,ttfb_median_ms,ttfb_p95_ms,mean_walk_hops,msgs_total,bytes_total";

[[nodiscard]] std::string csv_row(const ExperimentConfig& config, const RunResult& result);
[[nodiscard]] std::string results_csv(const ExperimentConfig& config,
                                      const std::vector<RunResult>& results);
[[nodiscard]] nlohmann::json summary_json(const ExperimentConfig& config,
                                          const std::vector<RunResult>& results);

/// Throws std::runtime_error if the directory cannot be created or written, or
/// if target files exist and `force` is false.
void check_writable(const std::filesystem::path& dir, const std::string& stem, bool force);
/// Writes <stem>.runs.csv and <stem>.summary.json under `dir`.
void write_results(const std::filesystem::path& dir, const std::string& stem,
                   const ExperimentConfig& config, const std::vector<RunResult>& results,
                   bool force);

}  // namespace rawa
