// selfprior: run discrete experiments, collect continuous episodes, serve the
// environment gateway, and turn traces into CSV.

#include "selfprior/collection.hpp"
#include "selfprior/experiment.hpp"
#include "selfprior/gateway.hpp"
#include "selfprior/report.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace sp = selfprior;
namespace h = selfprior::harness;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kTrace = 3, kStartup = 4, kUsage = 64 };

struct StartupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed_model;
    std::optional<std::uint64_t> seed_env;
    std::string out;
    bool freeze = false;
    std::optional<std::size_t> probe_window;
};

h::ExperimentConfig load(const Overrides& o, const std::string& kind) {
    h::ExperimentConfig cfg;
    cfg.kind = kind;
    if (!o.config_path.empty()) cfg = h::load_config(o.config_path);
    if (cfg.kind != kind) throw h::ConfigError("config kind is \"" + cfg.kind + "\", this subcommand needs \"" + kind + "\"");
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.seed_model) cfg.discrete.seed_model = cfg.collection.seed_model = *o.seed_model;
    if (o.seed_env) cfg.discrete.seed_env = cfg.collection.seed_env = *o.seed_env;
    if (o.freeze) cfg.discrete.freeze_self_prior = true;
    if (o.probe_window) cfg.discrete.probe_window = *o.probe_window;
    if (kind == "discrete") h::validate(cfg.discrete);
    else h::validate(cfg.collection);
    return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--seed-model", o.seed_model, "model / agent seed");
    cmd->add_option("--seed-env", o.seed_env, "environment seed");
    cmd->add_option("--out", o.out, "output directory");
}

std::string latency_text(const h::ProbeResult& p) { return p.latency ? std::to_string(*p.latency) : "inf"; }

int discrete_exp(const Overrides& o, std::size_t seeds) {
    const auto cfg = load(o, "discrete");
    if (seeds > 1) {
        const auto summaries = h::run_seed_sweep(cfg.discrete, seeds);
        std::filesystem::create_directories(cfg.output_dir);
        nlohmann::json all = nlohmann::json::array();
        for (const auto& s : summaries) all.push_back(h::to_json(s));
        std::ofstream(cfg.output_dir / "sweep.json") << all.dump(1) << '\n';
        std::cout << "wrote " << seeds << " run summaries to " << (cfg.output_dir / "sweep.json").string() << '\n';
        return kOk;
    }
    const auto run = h::run_discrete_experiment(cfg.discrete);
    h::write_run(run, cfg.output_dir);
    for (const auto& p : run.summary.probes)
        std::cout << p.phase << "  latency " << latency_text(p) << "  attach spread " << p.attach_spread
                  << "  mean spread " << p.mean_spread << '\n';
    std::cout << "trace: " << (cfg.output_dir / "trace.ndjson").string() << '\n';
    return kOk;
}

int collect(const Overrides& o, std::optional<std::size_t> episodes, const std::string& endpoint) {
    auto cfg = load(o, "continuous");
    if (episodes) cfg.collection.episodes = *episodes;
    if (!endpoint.empty()) cfg.collection.policy_endpoint = endpoint;
    h::validate(cfg.collection);
    const auto result = h::run_continuous_collection(cfg.collection, cfg.output_dir, std::cerr);
    std::cout << "episodes written " << result.episodes.size() << ", retained " << result.retained.size()
              << ", fallbacks " << result.fallbacks << '\n';
    return kOk;
}

int serve(const std::string& kind_name, const std::string& host, std::uint16_t port, std::uint64_t seed, bool stdio) {
    const auto kind = sp::gateway::parse_kind(kind_name);
    if (stdio) {
        sp::gateway::serve_stream(std::cin, std::cout, sp::gateway::Session(kind, seed));
        return kOk;
    }
    std::optional<sp::gateway::Server> server;
    try {
        server.emplace(host, port, [kind, seed] { return sp::gateway::Session(kind, seed); });
    } catch (const std::exception& e) {
        throw StartupError(e.what());
    }
    std::cerr << "listening on " << host << ":" << server->port() << " (" << kind_name << ")\n";
    server->run();
    return kOk;
}

int report(const std::vector<std::string>& paths, const std::string& out) {
    std::vector<sp::Trace> traces;
    for (const auto& p : paths) traces.push_back(sp::read_trace(p));
    const std::filesystem::path dir = out.empty() ? "report" : out;
    const auto files = traces.size() == 1 ? h::emit_report(traces.front(), dir) : h::emit_aggregate_report(traces, dir);
    for (const auto& f : files.files) std::cout << f.string() << '\n';
    return kOk;
}

int fail(const char* error_class, const std::exception& e, int code) {
    std::cerr << "error[" << error_class << "]: " << e.what() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-prior active inference experiments"};
    app.require_subcommand(1);

    Overrides o;
    std::size_t seeds = 1;
    auto* dx = app.add_subcommand("discrete-exp", "run the discrete arm protocol (trace.ndjson, summary.json)");
    add_common(dx, o);
    dx->add_flag("--freeze-self-prior", o.freeze, "keep C fixed during probes");
    dx->add_option("--probe-window", o.probe_window, "steps per sticker probe")->check(CLI::PositiveNumber);
    dx->add_option("--seeds", seeds, "run this many seeds in parallel and write sweep.json")->check(CLI::PositiveNumber);

    std::optional<std::size_t> episodes;
    std::string endpoint;
    auto* col = app.add_subcommand("collect", "collect continuous episodes");
    add_common(col, o);
    col->add_option("--episodes", episodes, "number of episodes");
    col->add_option("--policy-endpoint", endpoint, "host:port of an action server");

    std::string kind = "continuous";
    std::string host = "127.0.0.1";
    std::uint16_t port = 5555;
    std::uint64_t serve_seed = 0;
    bool stdio = false;
    auto* sv = app.add_subcommand("serve", "serve the NDJSON environment gateway");
    sv->add_option("--kind", kind, "discrete or continuous")->check(CLI::IsMember({"discrete", "continuous"}));
    sv->add_option("--host", host, "IPv4 address to bind");
    sv->add_option("--port", port, "TCP port, 0 for any free port");
    sv->add_option("--seed-env", serve_seed, "session seed");
    sv->add_flag("--stdio", stdio, "serve one session on stdin/stdout instead of TCP");

    std::vector<std::string> traces;
    std::string report_out;
    auto* rp = app.add_subcommand("report", "CSV + manifest from one trace, or an aggregate over several");
    rp->add_option("traces", traces, "trace files")->required();
    rp->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("UsageError", e, kUsage);
    }

    try {
        if (dx->parsed()) return discrete_exp(o, seeds);
        if (col->parsed()) return collect(o, episodes, endpoint);
        if (sv->parsed()) return serve(kind, host, port, serve_seed, stdio);
        if (rp->parsed()) return report(traces, report_out);
    } catch (const h::ConfigError& e) {
        return fail("ConfigError", e, kConfig);
    } catch (const sp::TraceError& e) {
        return fail("TraceError", e, kTrace);
    } catch (const h::ReportError& e) {
        return fail("ReportError", e, kTrace);
    } catch (const StartupError& e) {
        return fail("StartupError", e, kStartup);
    } catch (const std::exception& e) {
        return fail("RuntimeError", e, kFailure);
    }
    return kFailure;
}
