#include "simulst/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "simulst/adapters.hpp"
#include "simulst/attention.hpp"
#include "simulst/harness.hpp"
#include "simulst/report.hpp"
#include "simulst/trace_io.hpp"

namespace simulst::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Raised inside a command; turned into the error JSON and an exit code.
struct CommandFailure {
    int code;
    Json error;
};

[[noreturn]] void failure(int code, const std::string& kind, const std::string& message, Json violations = nullptr) {
    Json error;
    error["kind"] = kind;
    error["message"] = message;
    if (!violations.is_null()) error["violations"] = std::move(violations);
    throw CommandFailure{code, std::move(error)};
}

std::string format_number(double value) {
    char buffer[64];
    if (value == std::floor(value) && std::abs(value) < 1e15) {
        std::snprintf(buffer, sizeof buffer, "%.0f", value);
    } else {
        std::snprintf(buffer, sizeof buffer, "%.9g", value);
    }
    return buffer;
}

std::ofstream open_output(const std::string& path) {
    if (path.empty()) failure(kUsageError, "usage", "an output path is required (--out)");
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) failure(kInvalidInput, "io", "cannot write " + path);
    return out;
}

// ---------------------------------------------------------------------------
// Trace loading and validation

struct Checked {
    std::vector<UtteranceTrace> traces;
    Json violations = Json::array();
    std::size_t records = 0;
};

Checked check_trace_file(const std::string& path) {
    Checked checked;
    std::ifstream in(path, std::ios::binary);
    if (!in) failure(kInvalidInput, "io", "cannot open trace file " + path);
    const auto file = read_traces(in);
    checked.records = file.traces.size() + file.errors.size();
    for (const auto& e : file.errors) {
        checked.violations.push_back({{"line", e.line}, {"invariant", "parse error"}, {"detail", e.message}});
    }
    for (std::size_t t = 0; t < file.traces.size(); ++t) {
        for (const auto& v : validate_trace(file.traces[t])) {
            Json item;
            item["line"] = file.trace_lines[t];
            item["utterance"] = v.utterance;
            if (v.step) item["step"] = *v.step;
            item["invariant"] = v.invariant;
            item["detail"] = v.detail;
            checked.violations.push_back(std::move(item));
        }
    }
    if (checked.records == 0) {
        checked.violations.push_back({{"line", 0}, {"invariant", "non-empty file"}, {"detail", "no trace records"}});
    }
    checked.traces = file.traces;
    return checked;
}

std::vector<UtteranceTrace> load_valid_traces(const std::string& path) {
    auto checked = check_trace_file(path);
    if (!checked.violations.empty()) {
        failure(kInvalidInput, "validation", path + " failed validation", std::move(checked.violations));
    }
    return std::move(checked.traces);
}

// ---------------------------------------------------------------------------
// Shared flags

struct PolicyFlags {
    std::string policy = "edatt";
    double alpha = 0.2;
    int lambda = 2;
    int layer = 4;
    std::string head = "averaged";
    int k = 3;
    double segment_ms = 800;
    bool unfiltered = false;
};

struct CostFlags {
    double a = 0;
    double b = 0;
    int jobs = 1;
};

void add_policy_flags(CLI::App* cmd, PolicyFlags& flags, bool with_values) {
    cmd->add_option("--policy", flags.policy, "edatt, la or waitk")->capture_default_str();
    if (with_values) {
        cmd->add_option("--alpha", flags.alpha, "attention threshold in (0, 1)")->capture_default_str();
        cmd->add_option("--lambda", flags.lambda, "number of trailing frames summed")->capture_default_str();
        cmd->add_option("--layer", flags.layer, "decoder layer providing attention")->capture_default_str();
        cmd->add_option("--head", flags.head, "\"averaged\" or a head index")->capture_default_str();
        cmd->add_option("--k", flags.k, "wait-k lag in source words")->capture_default_str();
    }
    cmd->add_option("--segment-ms", flags.segment_ms, "speech segment size")->capture_default_str();
    cmd->add_flag("--unfiltered", flags.unfiltered, "apply the threshold to raw rows (keep the last frame)");
}

void add_cost_flags(CLI::App* cmd, CostFlags& flags) {
    cmd->add_option("--cost-a", flags.a, "fixed compute cost per query (ms)")->capture_default_str();
    cmd->add_option("--cost-b", flags.b, "compute cost per ms of prefix")->capture_default_str();
    cmd->add_option("--jobs", flags.jobs, "parallel utterance workers")->capture_default_str();
}

PolicyConfig to_config(const PolicyFlags& flags) {
    PolicyConfig cfg;
    try {
        cfg.kind = parse_policy_kind(flags.policy);
        cfg.head = HeadSpec::parse(flags.head);
    } catch (const Error& e) {
        failure(kUsageError, "domain", e.what());
    }
    cfg.alpha = flags.alpha;
    cfg.lambda = flags.lambda;
    cfg.layer = flags.layer;
    cfg.k = flags.k;
    cfg.segment_ms = flags.segment_ms;
    cfg.unfiltered = flags.unfiltered;
    try {
        cfg.check();
    } catch (const Error& e) {
        failure(kUsageError, e.kind(), e.what());
    }
    return cfg;
}

CostModel to_cost(const CostFlags& flags) {
    if (!(flags.a >= 0.0) || !(flags.b >= 0.0)) failure(kUsageError, "domain", "compute costs must be non-negative");
    if (flags.jobs < 1) failure(kUsageError, "domain", "--jobs must be >= 1");
    if (flags.a == 0.0 && flags.b == 0.0) return zero_cost();
    return linear_query_cost(flags.a, flags.b);
}

void check_segment(const std::vector<UtteranceTrace>& traces, const PolicyConfig& cfg) {
    for (const auto& t : traces) {
        if (std::abs(t.segment_ms - cfg.segment_ms) > kTimeTolerance) {
            failure(kUsageError, "config",
                    "utterance " + t.id + " was recorded with " + format_number(t.segment_ms) +
                        " ms segments but --segment-ms is " + format_number(cfg.segment_ms));
        }
    }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string trace;
    std::string out;
    std::string report;
    PolicyFlags policy;
    CostFlags cost;
};

int simulate(const SimulateArgs& args, std::ostream& out) {
    const auto cfg = to_config(args.policy);
    const auto cost = to_cost(args.cost);
    const auto traces = load_valid_traces(args.trace);
    check_segment(traces, cfg);

    const auto run = run_corpus(traces, cfg, cost, args.cost.jobs);
    {
        auto log = open_output(args.out);
        for (const auto& result : run.results) {
            if (result.ok()) log << serialize_delay_log(to_delay_log(result)) << '\n';
        }
    }
    const auto report = report_to_json(run.report).dump(2);
    if (args.report.empty()) {
        out << report << '\n';
    } else {
        open_output(args.report) << report << '\n';
    }
    return run.report.failures.empty() ? kOk : kInvalidInput;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string trace;
    std::string out;
    std::string policy = "edatt";
    std::vector<double> alphas{0.6, 0.4, 0.2, 0.1, 0.05, 0.03};
    std::vector<int> lambdas{2};
    std::vector<int> layers{4};
    std::vector<std::string> heads{"averaged"};
    std::vector<int> ks{1, 2, 3, 4, 5};
    double segment_ms = 800;
    bool unfiltered = false;
    CostFlags cost;
};

int sweep(const SweepArgs& args, std::ostream& out) {
    PolicyFlags base;
    base.policy = args.policy;
    base.segment_ms = args.segment_ms;
    base.unfiltered = args.unfiltered;
    const auto kind = to_config(base).kind;

    std::vector<PolicyConfig> grid;
    auto add = [&](PolicyFlags flags) { grid.push_back(to_config(flags)); };
    if (kind == PolicyKind::edatt) {
        for (double alpha : args.alphas)
            for (int lambda : args.lambdas)
                for (int layer : args.layers)
                    for (const auto& head : args.heads) {
                        auto flags = base;
                        flags.alpha = alpha;
                        flags.lambda = lambda;
                        flags.layer = layer;
                        flags.head = head;
                        add(flags);
                    }
    } else if (kind == PolicyKind::waitk) {
        for (int k : args.ks) {
            auto flags = base;
            flags.k = k;
            add(flags);
        }
    } else {
        add(base);
    }
    auto key = [](const PolicyConfig& c) { return std::make_tuple(c.alpha, c.lambda, c.layer, c.head, c.k); };
    std::sort(grid.begin(), grid.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    grid.erase(std::unique(grid.begin(), grid.end(), [&](const auto& a, const auto& b) { return key(a) == key(b); }),
               grid.end());

    const auto cost = to_cost(args.cost);
    const auto traces = load_valid_traces(args.trace);
    if (!grid.empty()) check_segment(traces, grid.front());

    std::ostringstream table;
    table << "policy\talpha\tlambda\tlayer\thead\tk\t" << scores_tsv_header() << '\n';
    bool all_ok = true;
    for (const auto& cfg : grid) {
        const auto run = run_corpus(traces, cfg, cost, args.cost.jobs);
        all_ok = all_ok && run.report.failures.empty();
        const bool edatt = cfg.kind == PolicyKind::edatt;
        table << to_string(cfg.kind) << '\t' << (edatt ? format_number(cfg.alpha) : "-") << '\t'
              << (edatt ? std::to_string(cfg.lambda) : "-") << '\t' << (edatt ? std::to_string(cfg.layer) : "-")
              << '\t' << (edatt ? cfg.head.to_string() : "-") << '\t'
              << (cfg.kind == PolicyKind::waitk ? std::to_string(cfg.k) : "-") << '\t'
              << scores_tsv_row(run.report.corpus) << '\n';
    }
    if (args.out.empty()) {
        out << table.str();
    } else {
        open_output(args.out) << table.str();
    }
    return all_ok ? kOk : kInvalidInput;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
    std::string log;
    std::string refs;
    std::string out;
    std::string tsv;
};

int metrics_command(const MetricsArgs& args, std::ostream& out) {
    std::ifstream log_in(args.log, std::ios::binary);
    if (!log_in) failure(kInvalidInput, "io", "cannot open delay log " + args.log);
    std::vector<DelayLog> logs;
    try {
        logs = read_delay_logs(log_in);
    } catch (const Error& e) {
        failure(kInvalidInput, e.kind(), e.what());
    }
    std::ifstream ref_in(args.refs, std::ios::binary);
    if (!ref_in) failure(kInvalidInput, "io", "cannot open reference file " + args.refs);
    std::vector<std::string> references;
    for (std::string line; std::getline(ref_in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        references.push_back(line);
    }
    MetricReport report;
    try {
        report = compute_report(logs, references);
    } catch (const Error& e) {
        failure(kInvalidInput, e.kind(), e.what());
    }
    const auto json = report_to_json(report).dump(2);
    const auto tsv = scores_tsv_header() + "\n" + scores_tsv_row(report.corpus) + "\n";
    if (args.out.empty()) {
        out << json << '\n';
    } else {
        open_output(args.out) << json << '\n';
    }
    if (!args.tsv.empty()) open_output(args.tsv) << tsv;
    return kOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string config;
    std::string out;
    int count = 1;
    SyntheticSpec spec;
};

SyntheticSpec spec_from_json(const Json& doc, SyntheticSpec spec) {
    auto take = [&](const char* key, auto& field) {
        if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("id", spec.id);
    take("n_target_tokens", spec.n_target_tokens);
    take("frames_per_segment", spec.frames_per_segment);
    take("slope", spec.slope);
    take("tail_mass_beta", spec.tail_mass_beta);
    take("spread", spec.spread);
    take("seed", spec.seed);
    take("segment_ms", spec.segment_ms);
    take("source_duration_ms", spec.source_duration_ms);
    take("source_words", spec.source_words);
    take("layer", spec.layer);
    return spec;
}

int synth(SynthArgs args, const CLI::App& cmd, std::ostream& out) {
    SyntheticSpec spec = args.spec;
    if (!args.config.empty()) {
        std::ifstream in(args.config, std::ios::binary);
        if (!in) failure(kInvalidInput, "io", "cannot open synthetic config " + args.config);
        try {
            spec = spec_from_json(Json::parse(in), SyntheticSpec{});
        } catch (const Json::exception& e) {
            failure(kInvalidInput, "parse", std::string("bad synthetic config: ") + e.what());
        }
        // Flags given explicitly override the config file.
        auto overrides = [&](const char* flag, auto& field, const auto& value) {
            if (cmd.count(flag) > 0) field = value;
        };
        overrides("--id", spec.id, args.spec.id);
        overrides("--tokens", spec.n_target_tokens, args.spec.n_target_tokens);
        overrides("--frames-per-segment", spec.frames_per_segment, args.spec.frames_per_segment);
        overrides("--slope", spec.slope, args.spec.slope);
        overrides("--beta", spec.tail_mass_beta, args.spec.tail_mass_beta);
        overrides("--spread", spec.spread, args.spec.spread);
        overrides("--seed", spec.seed, args.spec.seed);
        overrides("--segment-ms", spec.segment_ms, args.spec.segment_ms);
        overrides("--duration-ms", spec.source_duration_ms, args.spec.source_duration_ms);
        overrides("--source-words", spec.source_words, args.spec.source_words);
        overrides("--layer", spec.layer, args.spec.layer);
    }
    if (args.count < 1) failure(kUsageError, "domain", "--count must be >= 1");
    try {
        spec.check();
    } catch (const Error& e) {
        failure(kUsageError, e.kind(), e.what());
    }

    std::vector<UtteranceTrace> traces;
    for (int i = 0; i < args.count; ++i) {
        auto s = spec;
        s.seed = spec.seed + static_cast<std::uint64_t>(i);
        if (args.count > 1) s.id = spec.id + "-" + std::to_string(i);
        traces.push_back(synthetic_trace(s));
    }
    if (args.out.empty()) {
        write_traces(out, traces);
    } else {
        auto file = open_output(args.out);
        write_traces(file, traces);
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// validate

int validate(const std::string& path, std::ostream& out) {
    auto checked = check_trace_file(path);
    Json report;
    report["file"] = path;
    report["utterances"] = checked.traces.size();
    report["valid"] = checked.violations.empty();
    report["violations"] = std::move(checked.violations);
    out << report.dump(2) << '\n';
    return report["valid"].get<bool>() ? kOk : kInvalidInput;
}

// ---------------------------------------------------------------------------
// dump-attention

struct DumpArgs {
    std::string trace;
    std::string out;
    bool filtered = false;
    bool raw = false;
    int band = 1;
};

std::string file_safe(std::string text) {
    for (char& c : text) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        if (!keep) c = '_';
    }
    return text;
}

void write_matrix_tsv(const fs::path& path, const AttentionMatrix& m) {
    std::ofstream file(path, std::ios::binary);
    if (!file) failure(kInvalidInput, "io", "cannot write " + path.string());
    char buffer[32];
    for (const auto& row : m.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buffer, sizeof buffer, "%.9g", row[i]);
            file << (i ? "\t" : "") << buffer;
        }
        file << '\n';
    }
}

int dump_attention(const DumpArgs& args, std::ostream& out) {
    if (args.band < 0) failure(kUsageError, "domain", "--band must be >= 0");
    if (args.out.empty()) failure(kUsageError, "usage", "an output directory is required (--out)");
    const auto traces = load_valid_traces(args.trace);
    const bool want_raw = args.raw || !args.filtered;
    const bool want_filtered = args.filtered || !args.raw;

    const fs::path dir(args.out);
    fs::create_directories(dir);
    std::ostringstream table;
    table << "id\tprefix_ms\tlayer\thead\tvariant\trows\tframes\tdiagonality\n";

    for (const auto& trace : traces) {
        for (const auto& step : trace.steps) {
            if (step.hypothesis.empty()) continue;
            for (const auto& layer : step.attention) {
                std::vector<AttentionMatrix> views = layer.matrices;
                if (layer.per_head) views.push_back(attention::average_heads(layer.matrices));
                for (const auto& view : views) {
                    std::vector<std::pair<std::string, AttentionMatrix>> variants;
                    if (want_raw) variants.emplace_back("raw", view);
                    if (want_filtered && view.n_frames >= 2) variants.emplace_back("filtered", attention::filtered_copy(view));
                    for (const auto& [variant, m] : variants) {
                        const auto stem = file_safe(trace.id) + "_" + format_number(step.prefix_ms) + "ms_L" +
                                          std::to_string(m.layer_index) + "_H" + m.head.to_string() + "_" + variant;
                        write_matrix_tsv(dir / (stem + ".tsv"), m);
                        char score[32];
                        std::snprintf(score, sizeof score, "%.6f", attention::diagonality_score(m, args.band));
                        table << trace.id << '\t' << format_number(step.prefix_ms) << '\t' << m.layer_index << '\t'
                              << m.head.to_string() << '\t' << variant << '\t' << m.rows.size() << '\t'
                              << m.n_frames << '\t' << score << '\n';
                    }
                }
            }
        }
    }
    open_output((dir / "diagonality.tsv").string()) << table.str();
    out << table.str();
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simultaneous speech translation policy simulator and latency benchmark", "simulst"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    app.add_flag("--version", show_version, "print the version and exit");

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "run a policy over a trace file");
    simulate_cmd->add_option("--trace", sim.trace, "trace JSONL")->required();
    simulate_cmd->add_option("--out", sim.out, "delay log JSONL to write")->required();
    simulate_cmd->add_option("--report", sim.report, "metric report JSON (default: stdout)");
    add_policy_flags(simulate_cmd, sim.policy, true);
    add_cost_flags(simulate_cmd, sim.cost);

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a hyper-parameter grid, one TSV row per point");
    sweep_cmd->add_option("--trace", sw.trace, "trace JSONL")->required();
    sweep_cmd->add_option("--out", sw.out, "TSV to write (default: stdout)");
    sweep_cmd->add_option("--policy", sw.policy, "edatt, la or waitk")->capture_default_str();
    sweep_cmd->add_option("--alphas", sw.alphas, "comma-separated alpha grid")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--lambdas", sw.lambdas, "comma-separated lambda grid")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--layers", sw.layers, "comma-separated layer grid")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--heads", sw.heads, "comma-separated heads (\"averaged\" or indices)")
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->add_option("--ks", sw.ks, "comma-separated wait-k grid")->delimiter(',')->capture_default_str();
    sweep_cmd->add_option("--segment-ms", sw.segment_ms, "speech segment size")->capture_default_str();
    sweep_cmd->add_flag("--unfiltered", sw.unfiltered, "apply the threshold to raw rows");
    add_cost_flags(sweep_cmd, sw.cost);

    MetricsArgs met;
    auto* metrics_cmd = app.add_subcommand("metrics", "score a delay log against references");
    metrics_cmd->add_option("--log", met.log, "delay log JSONL")->required();
    metrics_cmd->add_option("--refs", met.refs, "references, one sentence per line")->required();
    metrics_cmd->add_option("--out", met.out, "report JSON (default: stdout)");
    metrics_cmd->add_option("--tsv", met.tsv, "one-row TSV of corpus scores");

    SynthArgs syn;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic pseudo-diagonal traces");
    synth_cmd->add_option("--config", syn.config, "JSON file with SyntheticSpec fields");
    synth_cmd->add_option("--out", syn.out, "trace JSONL (default: stdout)");
    synth_cmd->add_option("--count", syn.count, "utterances to generate (seeds seed..seed+count-1)")->capture_default_str();
    synth_cmd->add_option("--id", syn.spec.id)->capture_default_str();
    synth_cmd->add_option("--tokens", syn.spec.n_target_tokens, "target tokens")->capture_default_str();
    synth_cmd->add_option("--frames-per-segment", syn.spec.frames_per_segment)->capture_default_str();
    synth_cmd->add_option("--slope", syn.spec.slope, "frames per target token")->capture_default_str();
    synth_cmd->add_option("--beta", syn.spec.tail_mass_beta, "mass on the final frame")->capture_default_str();
    synth_cmd->add_option("--spread", syn.spec.spread, "kernel half-width in frames")->capture_default_str();
    synth_cmd->add_option("--seed", syn.spec.seed)->capture_default_str();
    synth_cmd->add_option("--segment-ms", syn.spec.segment_ms)->capture_default_str();
    synth_cmd->add_option("--duration-ms", syn.spec.source_duration_ms)->capture_default_str();
    synth_cmd->add_option("--source-words", syn.spec.source_words)->capture_default_str();
    synth_cmd->add_option("--layer", syn.spec.layer)->capture_default_str();

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "check a trace file against every invariant");
    validate_cmd->add_option("trace", validate_path, "trace JSONL")->required();

    DumpArgs dump;
    auto* dump_cmd = app.add_subcommand("dump-attention", "write attention matrices and diagonality tables as TSV");
    dump_cmd->add_option("--trace", dump.trace, "trace JSONL")->required();
    dump_cmd->add_option("--out", dump.out, "output directory")->required();
    dump_cmd->add_flag("--filtered", dump.filtered, "only last-frame-filtered matrices");
    dump_cmd->add_flag("--raw", dump.raw, "only raw matrices");
    dump_cmd->add_option("--band", dump.band, "diagonal band half-width")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();  // program name
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << Json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
        return kUsageError;
    }

    try {
        if (show_version) {
            out << "simulst " << kVersion << '\n';
            return kOk;
        }
        if (simulate_cmd->parsed()) return simulate(sim, out);
        if (sweep_cmd->parsed()) return sweep(sw, out);
        if (metrics_cmd->parsed()) return metrics_command(met, out);
        if (synth_cmd->parsed()) return synth(syn, *synth_cmd, out);
        if (validate_cmd->parsed()) return validate(validate_path, out);
        if (dump_cmd->parsed()) return dump_attention(dump, out);
        out << app.help();
        return kUsageError;
    } catch (const CommandFailure& f) {
        err << Json{{"error", f.error}}.dump() << '\n';
        return f.code;
    } catch (const Error& e) {
        err << Json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump() << '\n';
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << Json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << '\n';
        return kInvalidInput;
    }
}

}  // namespace simulst::cli
