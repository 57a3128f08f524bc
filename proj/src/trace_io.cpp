#include "simulst/trace_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace simulst {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error("parse", path + ": " + what);
}

const Json& field(const Json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing field");
    return *it;
}

double number(const Json& value, const std::string& path) {
    if (!value.is_number()) fail(path, "expected a number");
    return value.get<double>();
}

long long integer(const Json& value, const std::string& path) {
    if (!value.is_number_integer()) fail(path, "expected an integer");
    return value.get<long long>();
}

std::string text(const Json& value, const std::string& path) {
    if (!value.is_string()) fail(path, "expected a string");
    return value.get<std::string>();
}

std::vector<AttentionRow> rows_from(const Json& value, const std::string& path) {
    if (!value.is_array()) fail(path, "expected an array of rows");
    std::vector<AttentionRow> rows;
    rows.reserve(value.size());
    for (std::size_t j = 0; j < value.size(); ++j) {
        const auto row_path = path + "[" + std::to_string(j) + "]";
        const auto& row = value[j];
        if (!row.is_array()) fail(row_path, "expected an array of weights");
        AttentionRow weights;
        weights.reserve(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) {
            weights.push_back(number(row[i], row_path + "[" + std::to_string(i) + "]"));
        }
        rows.push_back(std::move(weights));
    }
    return rows;
}

LayerAttention layer_from(const Json& value, std::size_t n_frames, const std::string& path) {
    LayerAttention layer;
    layer.layer_index = static_cast<int>(integer(field(value, "layer", path), path + ".layer"));
    const auto heads = text(field(value, "heads", path), path + ".heads");
    if (heads == "averaged") {
        layer.per_head = false;
        AttentionMatrix m;
        m.rows = rows_from(field(value, "rows", path), path + ".rows");
        m.n_frames = n_frames;
        m.layer_index = layer.layer_index;
        m.head = HeadSpec::averaged();
        layer.matrices.push_back(std::move(m));
    } else if (heads == "per_head") {
        layer.per_head = true;
        const auto& stack = field(value, "stack", path);
        if (!stack.is_array()) fail(path + ".stack", "expected an array of matrices");
        for (std::size_t h = 0; h < stack.size(); ++h) {
            AttentionMatrix m;
            m.rows = rows_from(stack[h], path + ".stack[" + std::to_string(h) + "]");
            m.n_frames = n_frames;
            m.layer_index = layer.layer_index;
            m.head = HeadSpec::head(static_cast<int>(h) + 1);
            layer.matrices.push_back(std::move(m));
        }
    } else {
        fail(path + ".heads", "expected \"averaged\" or \"per_head\"");
    }
    return layer;
}

Json rows_to_json(const std::vector<AttentionRow>& rows) {
    Json out = Json::array();
    for (const auto& row : rows) out.push_back(row);
    return out;
}

}  // namespace

UtteranceTrace parse_trace(const std::string& json_line) {
    Json doc;
    try {
        doc = Json::parse(json_line);
    } catch (const Json::parse_error& e) {
        throw Error("parse", std::string("invalid JSON: ") + e.what());
    }
    const std::string root = "$";
    if (!doc.is_object()) fail(root, "expected an object");

    const auto schema = integer(field(doc, "schema", root), "$.schema");
    if (schema != kTraceSchemaVersion) {
        fail("$.schema", "unsupported schema version " + std::to_string(schema));
    }

    UtteranceTrace trace;
    trace.id = text(field(doc, "id", root), "$.id");
    trace.source_duration_ms = number(field(doc, "source_duration_ms", root), "$.source_duration_ms");
    if (doc.contains("segment_ms")) trace.segment_ms = number(doc["segment_ms"], "$.segment_ms");
    trace.reference = text(field(doc, "reference", root), "$.reference");
    if (doc.contains("n_layers")) trace.n_layers = static_cast<int>(integer(doc["n_layers"], "$.n_layers"));
    if (doc.contains("n_heads")) trace.n_heads = static_cast<int>(integer(doc["n_heads"], "$.n_heads"));

    const auto& steps = field(doc, "steps", root);
    if (!steps.is_array()) fail("$.steps", "expected an array");
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const auto path = "$.steps[" + std::to_string(s) + "]";
        const auto& js = steps[s];
        PrefixStep step;
        step.prefix_ms = number(field(js, "prefix_ms", path), path + ".prefix_ms");
        const auto frames = integer(field(js, "n_frames", path), path + ".n_frames");
        if (frames < 0) fail(path + ".n_frames", "must be non-negative");
        step.n_frames = static_cast<std::size_t>(frames);
        step.detected_words = static_cast<int>(integer(field(js, "detected_words", path), path + ".detected_words"));
        const auto& hyp = field(js, "hypothesis", path);
        if (!hyp.is_array()) fail(path + ".hypothesis", "expected an array of tokens");
        for (std::size_t j = 0; j < hyp.size(); ++j) {
            step.hypothesis.push_back(text(hyp[j], path + ".hypothesis[" + std::to_string(j) + "]"));
        }
        const auto& attention = field(js, "attention", path);
        if (!attention.is_array()) fail(path + ".attention", "expected an array of layers");
        for (std::size_t l = 0; l < attention.size(); ++l) {
            step.attention.push_back(
                layer_from(attention[l], step.n_frames, path + ".attention[" + std::to_string(l) + "]"));
        }
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

std::string serialize_trace(const UtteranceTrace& trace) {
    Json doc;
    doc["schema"] = kTraceSchemaVersion;
    doc["id"] = trace.id;
    doc["source_duration_ms"] = trace.source_duration_ms;
    doc["segment_ms"] = trace.segment_ms;
    doc["reference"] = trace.reference;
    doc["n_layers"] = trace.n_layers;
    doc["n_heads"] = trace.n_heads;
    Json steps = Json::array();
    for (const auto& step : trace.steps) {
        Json js;
        js["prefix_ms"] = step.prefix_ms;
        js["n_frames"] = step.n_frames;
        js["detected_words"] = step.detected_words;
        js["hypothesis"] = step.hypothesis;
        Json layers = Json::array();
        for (const auto& layer : step.attention) {
            Json jl;
            jl["layer"] = layer.layer_index;
            if (layer.per_head) {
                jl["heads"] = "per_head";
                Json stack = Json::array();
                for (const auto& m : layer.matrices) stack.push_back(rows_to_json(m.rows));
                jl["stack"] = std::move(stack);
            } else {
                jl["heads"] = "averaged";
                jl["rows"] = layer.matrices.empty() ? Json::array() : rows_to_json(layer.matrices.front().rows);
            }
            layers.push_back(std::move(jl));
        }
        js["attention"] = std::move(layers);
        steps.push_back(std::move(js));
    }
    doc["steps"] = std::move(steps);
    // nlohmann prints doubles in shortest round-trip form, so no precision is lost.
    return doc.dump();
}

TraceFile read_traces(std::istream& in) {
    TraceFile file;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            file.traces.push_back(parse_trace(line));
            file.trace_lines.push_back(number);
        } catch (const Error& e) {
            file.errors.push_back({number, e.what()});
        } catch (const std::exception& e) {
            file.errors.push_back({number, std::string("unexpected value: ") + e.what()});
        }
    }
    return file;
}

TraceFile read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open trace file " + path.string());
    return read_traces(in);
}

void write_traces(std::ostream& out, const std::vector<UtteranceTrace>& traces) {
    for (const auto& trace : traces) out << serialize_trace(trace) << '\n';
}

}  // namespace simulst
