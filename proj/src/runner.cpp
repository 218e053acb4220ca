#include "rawa/runner.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "rawa/adversary.hpp"

namespace rawa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sub-stream labels; each run derives independent streams from its seed.
constexpr std::uint64_t kTopologyStream = 1;
constexpr std::uint64_t kContentStream = 2;
constexpr std::uint64_t kProtocolStream = 3;
constexpr std::uint64_t kAnalysisStream = 4;

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
    return out;
}

json eta_to_json(std::size_t eta) {
    if (eta == kEtaMax) return "max";
    return eta;
}

std::size_t eta_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "max") return kEtaMax;
        throw std::invalid_argument("eta must be a positive integer or \"max\"");
    }
    const auto v = j.get<long long>();
    if (v < 1) throw std::invalid_argument("eta must be a positive integer or \"max\"");
    return static_cast<std::size_t>(v);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

json stats_json(const Stats& s) {
    return json{{"n", s.n},         {"mean", s.mean}, {"median", s.median},
                {"std", s.stddev},  {"p5", s.p5},     {"p95", s.p95}};
}

}  // namespace

std::string_view to_string(Protocol protocol) {
    return protocol == Protocol::Vanilla ? "vanilla" : "rawa";
}

ConfigError::ConfigError(std::vector<std::string> errs)
    : std::runtime_error("invalid configuration: " + join(errs, "; ")), errors(std::move(errs)) {}

std::size_t ExperimentConfig::honest_count() const {
    const auto adv = adversary_node_count(adversary);
    return n_peers > adv ? n_peers - adv : 0;
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    const auto adv = adversary_node_count(adversary);
    if (n_peers <= adv) errors.push_back("n_peers must exceed the adversary node count");
    else if (honest_count() <= out_links)
        errors.push_back("honest peer count must exceed out_links");
    if (honest_count() < 2) errors.push_back("need at least two honest peers");
    if ((adversary == AdversaryKind::Wfe || adversary == AdversaryKind::Sawfe) &&
        honest_count() != 40)
        errors.push_back("wfe/sawfe wiring needs exactly 40 honest peers (n_peers = 50)");
    try {
        link.validate();
    } catch (const std::exception& e) {
        errors.emplace_back(e.what());
    }
    if (dial_rtt_multiplier < 0) errors.push_back("dial_rtt_multiplier must be >= 0");
    if (!(dht.base_delay > 0)) errors.push_back("dht.base_delay must be positive");
    if (!(dht.delay_spread >= 0 && dht.delay_spread < 1))
        errors.push_back("dht.delay_spread must be in [0, 1)");
    if (block_size < 1) errors.push_back("block_size must be >= 1");
    if (protocol == Protocol::RaWa) {
        try {
            rawa.validate();
        } catch (const std::exception& e) {
            errors.emplace_back(std::string("rawa: ") + e.what());
        }
    }
    if (!(vanilla.t1 > 0)) errors.push_back("vanilla.t1 must be positive");
    if (runs < 1) errors.push_back("runs must be >= 1");
    if (stagger < 0) errors.push_back("stagger_ms must be >= 0");
    for (const auto& d : churn) {
        if (d.node >= honest_count())
            errors.push_back("churn node " + std::to_string(d.node) + " is not an honest peer");
        if (d.at < 0) errors.push_back("churn departure time must be >= 0");
    }
    if (output_dir.empty()) errors.push_back("output_dir must not be empty");
    return errors;
}

void to_json(json& j, const ExperimentConfig& c) {
    json churn = json::array();
    for (const auto& d : c.churn) churn.push_back({{"node", d.node}, {"at_ms", d.at}});
    j = json{
        {"protocol", to_string(c.protocol)},
        {"adversary", to_string(c.adversary)},
        {"n_peers", c.n_peers},
        {"out_links", c.out_links},
        {"link", {{"latency_ms", c.link.latency}, {"jitter_ms", c.link.jitter},
                  {"bandwidth_bps", c.link.bandwidth}}},
        {"dial_rtt_multiplier", c.dial_rtt_multiplier},
        {"dht", {{"base_delay_ms", c.dht.base_delay}, {"delay_spread", c.dht.delay_spread}}},
        {"block_size", c.block_size},
        {"rawa",
         {{"p", c.rawa.p},
          {"t0_ms", c.rawa.t0},
          {"t1_ms", c.rawa.t1},
          {"u_ms", c.rawa.u},
          {"eta", eta_to_json(c.rawa.eta)},
          {"r_ms", c.rawa.r},
          {"verify_provider", c.rawa.verify_provider},
          {"aggregation_window_ms", c.rawa.aggregation_window},
          {"relay_ttl_ms", c.rawa.relay_ttl},
          {"give_up_ms", c.rawa.give_up},
          {"exchange_timeout_ms", c.rawa.exchange_timeout}}},
        {"vanilla",
         {{"t1_ms", c.vanilla.t1},
          {"give_up_ms", c.vanilla.give_up},
          {"immediate_block_limit", c.vanilla.immediate_block_limit}}},
        {"fake_have_on_verify", c.fake_have_on_verify},
        {"runs", c.runs},
        {"base_seed", c.base_seed},
        {"churn", churn},
        {"fixed_topology", c.fixed_topology},
        {"stagger_ms", c.stagger},
        {"event_cap", c.event_cap},
        {"output_dir", c.output_dir},
    };
}

void from_json(const json& j, ExperimentConfig& c) {
    std::vector<std::string> errors;
    auto field = [&](const json& obj, const char* key, auto& target) {
        if (!obj.contains(key)) return;
        try {
            obj.at(key).get_to(target);
        } catch (const std::exception& e) {
            errors.push_back(std::string(key) + ": " + e.what());
        }
    };
    if (!j.is_object()) throw ConfigError({"config must be a JSON object"});

    if (j.contains("protocol")) {
        const auto p = j.at("protocol").get<std::string>();
        if (p == "vanilla") c.protocol = Protocol::Vanilla;
        else if (p == "rawa") c.protocol = Protocol::RaWa;
        else errors.push_back("protocol must be \"vanilla\" or \"rawa\"");
    }
    if (j.contains("adversary")) {
        try {
            c.adversary = parse_adversary(j.at("adversary").get<std::string>());
        } catch (const std::exception& e) {
            errors.emplace_back(e.what());
        }
    }
    field(j, "n_peers", c.n_peers);
    field(j, "out_links", c.out_links);
    if (j.contains("link")) {
        const auto& l = j.at("link");
        field(l, "latency_ms", c.link.latency);
        field(l, "jitter_ms", c.link.jitter);
        field(l, "bandwidth_bps", c.link.bandwidth);
    }
    field(j, "dial_rtt_multiplier", c.dial_rtt_multiplier);
    if (j.contains("dht")) {
        field(j.at("dht"), "base_delay_ms", c.dht.base_delay);
        field(j.at("dht"), "delay_spread", c.dht.delay_spread);
    }
    field(j, "block_size", c.block_size);
    if (j.contains("rawa")) {
        const auto& r = j.at("rawa");
        field(r, "p", c.rawa.p);
        field(r, "t0_ms", c.rawa.t0);
        field(r, "t1_ms", c.rawa.t1);
        field(r, "u_ms", c.rawa.u);
        if (r.contains("eta")) {
            try {
                c.rawa.eta = eta_from_json(r.at("eta"));
            } catch (const std::exception& e) {
                errors.push_back(std::string("eta: ") + e.what());
            }
        }
        field(r, "r_ms", c.rawa.r);
        field(r, "verify_provider", c.rawa.verify_provider);
        field(r, "aggregation_window_ms", c.rawa.aggregation_window);
        field(r, "relay_ttl_ms", c.rawa.relay_ttl);
        field(r, "give_up_ms", c.rawa.give_up);
        field(r, "exchange_timeout_ms", c.rawa.exchange_timeout);
    }
    if (j.contains("vanilla")) {
        field(j.at("vanilla"), "t1_ms", c.vanilla.t1);
        field(j.at("vanilla"), "give_up_ms", c.vanilla.give_up);
        field(j.at("vanilla"), "immediate_block_limit", c.vanilla.immediate_block_limit);
    }
    field(j, "fake_have_on_verify", c.fake_have_on_verify);
    field(j, "runs", c.runs);
    field(j, "base_seed", c.base_seed);
    if (j.contains("churn")) {
        c.churn.clear();
        for (const auto& d : j.at("churn")) {
            Departure dep;
            field(d, "node", dep.node);
            field(d, "at_ms", dep.at);
            c.churn.push_back(dep);
        }
    }
    field(j, "fixed_topology", c.fixed_topology);
    field(j, "stagger_ms", c.stagger);
    field(j, "event_cap", c.event_cap);
    field(j, "output_dir", c.output_dir);
    if (!errors.empty()) throw ConfigError(std::move(errors));
}

ExperimentConfig apply_overrides(const ExperimentConfig& base, const json& overrides) {
    json merged = base;
    merged.merge_patch(overrides);
    ExperimentConfig out;
    from_json(merged, out);
    return out;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read config file " + path.string()});
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({"config parse error: " + std::string(e.what())});
    }
    ExperimentConfig c;
    from_json(j, c);
    return c;
}

std::string ExperimentConfig::fingerprint() const {
    const std::string canonical = json(*this).dump();
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), digest.data());
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < 8; ++i) {
        out.push_back(kDigits[digest[i] >> 4]);
        out.push_back(kDigits[digest[i] & 0x0f]);
    }
    return out;
}

// ---- single run ------------------------------------------------------------

RunContext::RunContext(const ExperimentConfig& config, std::size_t run_index)
    : config_(config), run_index_(run_index), seed_(config.base_seed + run_index), dht_(config.dht) {
    auto topo_rng = RngStream::derive(config.fixed_topology ? config.base_seed : seed_, kTopologyStream);
    auto content_rng = RngStream::derive(seed_, kContentStream);

    Topology topology = build_honest_topology(config.honest_count(), config.out_links, topo_rng);
    topology = wire_adversary(std::move(topology), config.adversary, topo_rng);
    honest_ = topology.nodes_with_role(NodeRole::Honest);
    const auto adversaries = topology.nodes_with_role(NodeRole::Adversary);

    sim_ = std::make_unique<Simulator>(
        SimConfig{config.link, config.dial_rtt_multiplier, config.event_cap}, topology,
        RngStream::derive(seed_, kProtocolStream));
    sim_->set_dht(&dht_);
    sim_->add_observer(&collector_);
    if (!adversaries.empty()) {
        recorder_ = std::make_unique<ObservationRecorder>(
            std::set<PeerId>(adversaries.begin(), adversaries.end()));
        sim_->add_observer(recorder_.get());
    }

    engines_.resize(topology.size(), nullptr);
    const bool exploiter =
        config.adversary == AdversaryKind::Wfe || config.adversary == AdversaryKind::Sawfe;
    const ExploiterConfig xcfg{config.fake_have_on_verify};
    for (std::uint32_t i = 0; i < topology.size(); ++i) {
        const PeerId p{i};
        const bool malicious = topology.role(p) == NodeRole::Adversary && exploiter;
        std::unique_ptr<BitswapNode> node;
        if (config.protocol == Protocol::Vanilla) {
            if (malicious)
                node = std::make_unique<Exploiter<VanillaEngine>>(*sim_, p, xcfg, config.vanilla);
            else
                node = std::make_unique<VanillaEngine>(*sim_, p, config.vanilla);
        } else {
            if (malicious)
                node = std::make_unique<Exploiter<RaWaEngine>>(*sim_, p, xcfg, config.rawa);
            else
                node = std::make_unique<RaWaEngine>(*sim_, p, config.rawa);
        }
        engines_[i] = node.get();
        sim_->attach(p, std::move(node));
    }

    // Interests first, so they do not depend on the block size.
    std::vector<std::size_t> wants(honest_.size());
    for (std::size_t i = 0; i < honest_.size(); ++i) {
        auto j = static_cast<std::size_t>(content_rng.below(honest_.size() - 1));
        wants[i] = j >= i ? j + 1 : j;
    }

    // One unique random block per honest peer, all registered with the DHT.
    std::vector<Cid> cids;
    cids.reserve(honest_.size());
    for (const auto& p : honest_) {
        std::vector<std::uint8_t> bytes(config.block_size);
        for (std::size_t k = 0; k < bytes.size(); k += 8) {
            const auto word = content_rng.next_u64();
            for (std::size_t b = 0; b < 8 && k + b < bytes.size(); ++b)
                bytes[k + b] = static_cast<std::uint8_t>(word >> (8 * b));
        }
        const Cid cid = engines_[p.index]->store().put(Block(std::move(bytes)));
        if (std::ranges::find(cids, cid) != cids.end())
            throw std::runtime_error("CID collision between generated blocks");
        cids.push_back(cid);
        dht_.provide(cid, p);
    }
    for (std::size_t i = 0; i < honest_.size(); ++i) truth_.interests.emplace(honest_[i], cids[wants[i]]);

    for (auto* e : engines_) e->start();
    for (const auto& d : config.churn) sim_->schedule_departure(honest_.at(d.node), d.at);
}

RunContext::~RunContext() = default;

const ObservationLog* RunContext::observations() const {
    return recorder_ ? &recorder_->log() : nullptr;
}

BitswapNode& RunContext::engine(PeerId p) { return *engines_.at(p.index); }

SubgraphMap RunContext::subgraph() {
    SubgraphMap out;
    for (auto* e : engines_)
        if (auto* r = dynamic_cast<RaWaEngine*>(e)) out[e->id()] = r->forward_graph().successors;
    return out;
}

RunResult RunContext::execute() {
    for (std::size_t i = 0; i < honest_.size(); ++i) {
        const PeerId p = honest_[i];
        const Cid cid = truth_.interests.at(p);
        if (config_.stagger > 0)
            sim_->schedule_call(config_.stagger * static_cast<double>(i),
                                [this, p, cid] { engines_[p.index]->request(cid); });
        else
            engines_[p.index]->request(cid);
    }
    const RunStats stats = sim_->run();

    RunResult result;
    result.fingerprint = config_.fingerprint();
    result.run_index = run_index_;
    result.seed = seed_;
    result.metrics = collector_.finish();
    result.trace_hash = sim_->trace_hash();
    result.events = stats.events;
    result.livelock = stats.livelock;

    if (recorder_) {
        auto analysis = RngStream::derive(seed_, kAnalysisStream);
        const auto& log = recorder_->log();
        const auto observed = observed_cids(log);
        Prediction prediction;
        switch (config_.adversary) {
            case AdversaryKind::Fse: prediction = fse_classify(log, honest_, observed, analysis); break;
            case AdversaryKind::Wfe: prediction = wfe_classify(log, honest_, observed, analysis); break;
            case AdversaryKind::Sawfe:
                prediction = sawfe_classify(log, subgraph(), honest_, observed, analysis);
                break;
            case AdversaryKind::None: break;
        }
        const auto pr = precision_recall(prediction, truth_);
        result.metrics.precision = pr.precision;
        result.metrics.recall = pr.recall;
    }
    return result;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config, unsigned jobs) {
    if (auto errors = config.validate(); !errors.empty()) throw ConfigError(std::move(errors));
    std::vector<RunResult> results(config.runs);
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(config.runs)));

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t i = next++; i < config.runs; i = next++) {
            try {
                RunContext ctx(config, i);
                results[i] = ctx.execute();
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return results;
}

// ---- sweeps -----------------------------------------------------------------

std::vector<json> SweepGrid::combinations() const {
    std::vector<json> combos{json::object()};
    if (!axes.is_object()) throw ConfigError({"grid must be a JSON object of arrays"});
    for (const auto& [key, values] : axes.items()) {
        if (!values.is_array() || values.empty())
            throw ConfigError({"grid axis '" + key + "' must be a non-empty array"});
        std::vector<json> next;
        for (const auto& c : combos) {
            for (const auto& v : values) {
                json o = c;
                // Dotted keys address nested config objects, e.g. "rawa.p".
                json* slot = &o;
                std::string path = key;
                if (key == "p" || key == "eta") path = "rawa." + key;
                std::size_t pos;
                while ((pos = path.find('.')) != std::string::npos) {
                    slot = &(*slot)[path.substr(0, pos)];
                    path = path.substr(pos + 1);
                }
                (*slot)[path] = v;
                next.push_back(std::move(o));
            }
        }
        combos = std::move(next);
    }
    return combos;
}

namespace {

std::string combo_name(const json& overrides) {
    std::string name;
    std::function<void(const json&, const std::string&)> walk = [&](const json& j,
                                                                     const std::string& prefix) {
        for (const auto& [k, v] : j.items()) {
            if (v.is_object()) {
                walk(v, prefix + k + ".");
                continue;
            }
            std::string val = v.is_string() ? v.get<std::string>() : v.dump();
            name += (name.empty() ? "" : "_") + k + "-" + val;
        }
    };
    walk(overrides, "");
    return name.empty() ? "base" : name;
}

}  // namespace

std::vector<SweepEntry> sweep(const ExperimentConfig& base, const SweepGrid& grid, unsigned jobs) {
    std::vector<SweepEntry> out;
    for (const auto& overrides : grid.combinations()) {
        SweepEntry entry;
        entry.name = combo_name(overrides);
        try {
            entry.config = apply_overrides(base, overrides);
            entry.results = run_experiment(entry.config, jobs);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

// ---- result files -------------------------------------------------------------

std::string csv_row(const ExperimentConfig& config, const RunResult& r) {
    const auto& m = r.metrics;
    const bool rawa = config.protocol == Protocol::RaWa;
    const auto ttfb = m.resolved_ttfb();
    std::optional<double> ttfb_mean, ttfb_median, ttfb_p95, walk;
    if (!ttfb.empty()) {
        const auto s = summarize(ttfb);
        ttfb_mean = s.mean;
        ttfb_median = s.median;
        ttfb_p95 = s.p95;
    }
    if (!m.walk_lengths.empty()) {
        double sum = 0;
        for (auto h : m.walk_lengths) sum += h;
        walk = sum / static_cast<double>(m.walk_lengths.size());
    }
    std::ostringstream os;
    os << r.run_index << ',' << r.seed << ',' << to_string(config.protocol) << ','
       << to_string(config.adversary) << ',' << (rawa ? fmt_double(config.rawa.p) : "") << ','
       << (rawa ? (config.rawa.eta == kEtaMax ? std::string("max") : std::to_string(config.rawa.eta))
                : "")
       << ',' << config.block_size << ',' << fmt_opt(m.precision) << ',' << fmt_opt(m.recall)
       << ',' << fmt_double(m.resolved_fraction()) << ',' << fmt_opt(ttfb_mean) << ','
       << fmt_opt(ttfb_median) << ',' << fmt_opt(ttfb_p95) << ',' << fmt_opt(walk) << ','
       << m.msgs_total() << ',' << m.bytes_total;
    return os.str();
}

std::string results_csv(const ExperimentConfig& config, const std::vector<RunResult>& results) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : results) out += csv_row(config, r) + "\n";
    return out;
}

json summary_json(const ExperimentConfig& config, const std::vector<RunResult>& results) {
    std::vector<RunMetrics> metrics;
    for (const auto& r : results) metrics.push_back(r.metrics);
    const Summary s = aggregate(metrics);
    json hist = json::object();
    for (const auto& [hops, n] : s.walk_histogram) hist[std::to_string(hops)] = n;
    return json{{"config", config},
                {"fingerprint", config.fingerprint()},
                {"runs", s.runs},
                {"precision", stats_json(s.precision)},
                {"recall", stats_json(s.recall)},
                {"ttfb_ms", stats_json(s.ttfb)},
                {"resolved_fraction", s.resolved_fraction},
                {"walk_hops_histogram", hist},
                {"msgs_total_mean", s.msgs_mean},
                {"bytes_total_mean", s.bytes_mean}};
}

void check_writable(const fs::path& dir, const std::string& stem, bool force) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    for (const auto& name : {stem + ".runs.csv", stem + ".summary.json"}) {
        if (fs::exists(dir / name) && !force)
            throw std::runtime_error((dir / name).string() + " exists (use --force to overwrite)");
    }
    const auto probe = dir / ".write-probe";
    {
        std::ofstream out(probe);
        if (!out) throw std::runtime_error("output directory " + dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

void write_results(const fs::path& dir, const std::string& stem, const ExperimentConfig& config,
                   const std::vector<RunResult>& results, bool force) {
    if (results.empty()) throw std::invalid_argument("no results to write");
    check_writable(dir, stem, force);
    {
        std::ofstream csv(dir / (stem + ".runs.csv"), std::ios::binary);
        csv << results_csv(config, results);
    }
    std::ofstream js(dir / (stem + ".summary.json"), std::ios::binary);
    js << summary_json(config, results).dump(2) << "\n";
}

}  // namespace rawa
