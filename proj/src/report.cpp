#include "simulst/report.hpp"

#include <atomic>
#include <cstdio>
#include <istream>
#include <sstream>
#include <thread>

#include "simulst/adapters.hpp"
#include "simulst/bleu.hpp"
#include "simulst/latency.hpp"

namespace simulst {

using Json = nlohmann::ordered_json;

DelayLog to_delay_log(const RunResult& result) {
    DelayLog log;
    log.id = result.id;
    log.source_duration_ms = result.source_duration_ms;
    log.tokens = result.output;
    for (const auto& d : result.delays) {
        log.ideal_delays_ms.push_back(d.ideal_delay_ms);
        log.ca_delays_ms.push_back(d.ca_delay_ms);
    }
    return log;
}

std::string serialize_delay_log(const DelayLog& log) {
    Json doc;
    doc["id"] = log.id;
    doc["source_duration_ms"] = log.source_duration_ms;
    doc["tokens"] = log.tokens;
    doc["ideal_delays_ms"] = log.ideal_delays_ms;
    doc["ca_delays_ms"] = log.ca_delays_ms;
    return doc.dump();
}

DelayLog parse_delay_log(const std::string& json_line) {
    try {
        const auto doc = Json::parse(json_line);
        DelayLog log;
        log.id = doc.at("id").get<std::string>();
        log.source_duration_ms = doc.at("source_duration_ms").get<double>();
        log.tokens = doc.at("tokens").get<Tokens>();
        log.ideal_delays_ms = doc.at("ideal_delays_ms").get<std::vector<double>>();
        log.ca_delays_ms = doc.at("ca_delays_ms").get<std::vector<double>>();
        if (log.ideal_delays_ms.size() != log.tokens.size() || log.ca_delays_ms.size() != log.tokens.size()) {
            throw Error("parse", "delay series and tokens differ in length");
        }
        return log;
    } catch (const Json::exception& e) {
        throw Error("parse", std::string("malformed delay log: ") + e.what());
    }
}

std::vector<DelayLog> read_delay_logs(std::istream& in) {
    std::vector<DelayLog> logs;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            logs.push_back(parse_delay_log(line));
        } catch (const Error& e) {
            throw Error("parse", "line " + std::to_string(number) + ": " + e.what());
        }
    }
    return logs;
}

std::size_t word_count(const std::string& text) {
    std::istringstream words(text);
    std::size_t n = 0;
    for (std::string w; words >> w;) ++n;
    return n;
}

UtteranceMetrics score_utterance(const DelayLog& log, const std::string& reference) {
    UtteranceMetrics m;
    m.id = log.id;
    m.hyp_len = log.tokens.size();
    m.ref_len = word_count(reference);
    m.scores.bleu = metrics::bleu_from_stats(metrics::sentence_stats(metrics::detokenize(log.tokens), reference));
    if (log.tokens.empty() || m.ref_len == 0) return m;

    metrics::LatencyInput ideal;
    ideal.delays = log.ideal_delays_ms;
    ideal.source_duration_ms = log.source_duration_ms;
    ideal.ref_len = m.ref_len;
    const auto ca =
        metrics::computation_aware_input(log.ideal_delays_ms, log.ca_delays_ms, log.source_duration_ms, m.ref_len);

    m.has_latency = true;
    m.scores.al = metrics::average_lagging(ideal);
    m.scores.al_ca = metrics::average_lagging(ca);
    m.scores.laal = metrics::laal(ideal);
    m.scores.laal_ca = metrics::laal(ca);
    m.scores.dal = metrics::dal(ideal);
    m.scores.dal_ca = metrics::dal(ca);
    return m;
}

MetricReport compute_report(std::span<const DelayLog> logs, std::span<const std::string> references) {
    if (logs.size() != references.size()) {
        throw Error("metrics", std::to_string(logs.size()) + " delay logs but " + std::to_string(references.size()) +
                                   " references");
    }
    MetricReport report;
    report.utterances = logs.size();
    if (logs.empty()) return report;
    report.no_data = false;

    std::vector<std::string> hypotheses;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        report.per_utterance.push_back(score_utterance(logs[i], references[i]));
        hypotheses.push_back(metrics::detokenize(logs[i].tokens));
    }
    report.corpus.bleu = metrics::corpus_bleu(hypotheses, references);

    Scores sum;
    for (const auto& m : report.per_utterance) {
        if (!m.has_latency) continue;
        ++report.latency_scored;
        sum.al += m.scores.al;
        sum.al_ca += m.scores.al_ca;
        sum.laal += m.scores.laal;
        sum.laal_ca += m.scores.laal_ca;
        sum.dal += m.scores.dal;
        sum.dal_ca += m.scores.dal_ca;
    }
    if (report.latency_scored > 0) {
        const double n = static_cast<double>(report.latency_scored);
        report.corpus.al = sum.al / n;
        report.corpus.al_ca = sum.al_ca / n;
        report.corpus.laal = sum.laal / n;
        report.corpus.laal_ca = sum.laal_ca / n;
        report.corpus.dal = sum.dal / n;
        report.corpus.dal_ca = sum.dal_ca / n;
    }
    return report;
}

CorpusRun run_corpus(std::span<const UtteranceTrace> traces, const PolicyConfig& cfg, const CostModel& cost,
                     int jobs) {
    CorpusRun run;
    run.results.resize(traces.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < traces.size(); i = next++) {
            const ScriptedAdapter adapter(traces[i]);
            run.results[i] = run_utterance(adapter, cfg, cost);
        }
    };
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || traces.size() < 2) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, traces.size()); ++w) pool.emplace_back(worker);
    }

    std::vector<DelayLog> logs;
    std::vector<std::string> references;
    for (const auto& result : run.results) {
        if (!result.ok()) continue;
        logs.push_back(to_delay_log(result));
        references.push_back(result.reference);
    }
    run.report = compute_report(logs, references);
    run.report.utterances = run.results.size();
    for (const auto& result : run.results) {
        if (!result.ok()) run.report.failures.emplace_back(result.id, *result.error);
    }
    return run;
}

namespace {

Json scores_json(const Scores& s, bool with_latency = true) {
    Json out;
    out["BLEU"] = s.bleu;
    if (!with_latency) return out;
    out["AL"] = s.al;
    out["AL_CA"] = s.al_ca;
    out["LAAL"] = s.laal;
    out["LAAL_CA"] = s.laal_ca;
    out["DAL"] = s.dal;
    out["DAL_CA"] = s.dal_ca;
    return out;
}

}  // namespace

Json report_to_json(const MetricReport& report) {
    Json out;
    out["no_data"] = report.no_data;
    out["utterances"] = report.utterances;
    out["latency_scored"] = report.latency_scored;
    out["corpus"] = report.no_data ? Json::object() : scores_json(report.corpus, report.latency_scored > 0);
    Json rows = Json::array();
    for (const auto& m : report.per_utterance) {
        Json row;
        row["id"] = m.id;
        row["hyp_len"] = m.hyp_len;
        row["ref_len"] = m.ref_len;
        row["scores"] = scores_json(m.scores, m.has_latency);
        rows.push_back(std::move(row));
    }
    out["per_utterance"] = std::move(rows);
    Json failures = Json::array();
    for (const auto& [id, message] : report.failures) failures.push_back({{"id", id}, {"error", message}});
    out["failures"] = std::move(failures);
    return out;
}

std::string scores_tsv_header() { return "BLEU\tAL\tAL_CA\tLAAL\tLAAL_CA\tDAL\tDAL_CA"; }

std::string scores_tsv_row(const Scores& s) {
    char buffer[256];
    std::snprintf(buffer, sizeof buffer, "%.2f\t%.3f\t%.3f\t%.3f\t%.3f\t%.3f\t%.3f", s.bleu, s.al, s.al_ca, s.laal,
                  s.laal_ca, s.dal, s.dal_ca);
    return buffer;
}

}  // namespace simulst
