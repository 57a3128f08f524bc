#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "simulst/core.hpp"
#include "simulst/harness.hpp"

namespace simulst {

/// One line of the delay-log JSONL written by the harness and read by the
/// metrics command.
struct DelayLog {
    std::string id;
    Millis source_duration_ms = 0;
    Tokens tokens;
    std::vector<Millis> ideal_delays_ms;
    std::vector<Millis> ca_delays_ms;

    friend bool operator==(const DelayLog&, const DelayLog&) = default;
};

DelayLog to_delay_log(const RunResult& result);
std::string serialize_delay_log(const DelayLog& log);
/// Throws Error("parse").
DelayLog parse_delay_log(const std::string& json_line);
/// Throws Error("parse") naming the offending line.
std::vector<DelayLog> read_delay_logs(std::istream& in);

struct Scores {
    double bleu = 0;
    double al = 0, al_ca = 0;
    double laal = 0, laal_ca = 0;
    double dal = 0, dal_ca = 0;
};

struct UtteranceMetrics {
    std::string id;
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    // Latency is undefined for an empty output; such utterances only count
    // towards BLEU.
    bool has_latency = false;
    Scores scores;
};

struct MetricReport {
    bool no_data = true;
    std::size_t utterances = 0;
    std::size_t latency_scored = 0;
    Scores corpus;  // BLEU over the corpus, latencies as unweighted means
    std::vector<UtteranceMetrics> per_utterance;
    std::vector<std::pair<std::string, std::string>> failures;  // (id, message)
};

/// Number of whitespace-separated words.
std::size_t word_count(const std::string& text);

/// Scores one delay log against its reference.
UtteranceMetrics score_utterance(const DelayLog& log, const std::string& reference);

/// Scores aligned logs and references. Throws Error("metrics") when the counts differ.
MetricReport compute_report(std::span<const DelayLog> logs, std::span<const std::string> references);

struct CorpusRun {
    std::vector<RunResult> results;
    MetricReport report;
};

/// Runs every trace (in parallel across `jobs` workers) and scores the
/// successful runs. Results keep the input order regardless of job count.
CorpusRun run_corpus(std::span<const UtteranceTrace> traces, const PolicyConfig& cfg,
                     const CostModel& cost = zero_cost(), int jobs = 1);

nlohmann::ordered_json report_to_json(const MetricReport& report);

/// "BLEU\tAL\tAL_CA\tLAAL\tLAAL_CA\tDAL\tDAL_CA"
std::string scores_tsv_header();
std::string scores_tsv_row(const Scores& scores);

}  // namespace simulst
