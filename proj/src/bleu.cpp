#include "simulst/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "simulst/core.hpp"

namespace simulst::metrics {

namespace {

// UTF-8 <-> code points. Invalid bytes decode to their byte value.
std::u32string decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t extra = 0;
        char32_t cp = lead;
        if (lead >= 0xC0 && lead < 0xE0) {
            extra = 1;
            cp = lead & 0x1F;
        } else if (lead >= 0xE0 && lead < 0xF0) {
            extra = 2;
            cp = lead & 0x0F;
        } else if (lead >= 0xF0 && lead < 0xF8) {
            extra = 3;
            cp = lead & 0x07;
        }
        bool valid = extra > 0 && i + extra < text.size();
        for (std::size_t k = 1; valid && k <= extra; ++k) {
            const auto cont = static_cast<unsigned char>(text[i + k]);
            valid = (cont & 0xC0) == 0x80;
            cp = (cp << 6) | (cont & 0x3F);
        }
        if (valid) {
            out.push_back(cp);
            i += extra + 1;
        } else {
            out.push_back(lead);
            ++i;
        }
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Unicode whitespace as understood by Python's str.split().
bool is_space(char32_t c) {
    return (c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x20) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F ||
           c == 0x3000;
}

bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_period_or_comma(char32_t c) { return c == U'.' || c == U','; }

// ASCII symbols split off unconditionally: { | } ~ [ \ ] ^ _ ` space ! " # $ % &
// ( ) * + : ; < = > ? @ /
bool is_split_symbol(char32_t c) {
    return (c >= 0x7B && c <= 0x7E) || (c >= 0x5B && c <= 0x60) || (c >= 0x20 && c <= 0x26) ||
           (c >= 0x28 && c <= 0x2B) || (c >= 0x3A && c <= 0x40) || c == 0x2F;
}

void replace_all(std::u32string& s, std::u32string_view from, std::u32string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::u32string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

// Left-to-right, non-overlapping rewrite of two-character matches (the
// semantics of re.sub for a two-character pattern). A match gets a space
// between its characters and optionally one before or after.
template <typename First, typename Second>
std::u32string rewrite_pairs(const std::u32string& s, First first, Second second, bool space_before,
                             bool space_after) {
    std::u32string out;
    out.reserve(s.size() * 2);
    std::size_t i = 0;
    while (i < s.size()) {
        if (i + 1 < s.size() && first(s[i]) && second(s[i + 1])) {
            if (space_before) out.push_back(U' ');
            out.push_back(s[i]);
            out.push_back(U' ');
            out.push_back(s[i + 1]);
            if (space_after) out.push_back(U' ');
            i += 2;
        } else {
            out.push_back(s[i]);
            ++i;
        }
    }
    return out;
}

std::string rstrip(std::string_view text) {
    auto cps = decode(text);
    while (!cps.empty() && is_space(cps.back())) cps.pop_back();
    std::string out;
    for (char32_t c : cps) append_utf8(out, c);
    return out;
}

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens) {
    NgramCounts counts;
    for (int n = 1; n <= kMaxNgramOrder; ++n) {
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
            std::string key = std::to_string(n);
            for (int k = 0; k < n; ++k) {
                key.push_back(' ');
                key += tokens[i + static_cast<std::size_t>(k)];
            }
            ++counts[key];
        }
    }
    return counts;
}

}  // namespace

std::vector<std::string> tokenize_13a(std::string_view text) {
    auto s = decode(text);
    replace_all(s, U"<skipped>", U"");
    replace_all(s, U"-\n", U"");
    replace_all(s, U"\n", U" ");
    replace_all(s, U"&quot;", U"\"");
    replace_all(s, U"&amp;", U"&");
    replace_all(s, U"&lt;", U"<");
    replace_all(s, U"&gt;", U">");

    std::u32string padded;
    padded.reserve(s.size() * 3 + 2);
    padded.push_back(U' ');
    for (char32_t c : s) {
        if (is_split_symbol(c)) {
            padded.push_back(U' ');
            padded.push_back(c);
            padded.push_back(U' ');
        } else {
            padded.push_back(c);
        }
    }
    padded.push_back(U' ');

    auto not_digit = [](char32_t c) { return !is_digit(c); };
    padded = rewrite_pairs(padded, not_digit, is_period_or_comma, false, true);
    padded = rewrite_pairs(padded, is_period_or_comma, not_digit, true, false);
    padded = rewrite_pairs(padded, is_digit, [](char32_t c) { return c == U'-'; }, false, true);

    std::vector<std::string> tokens;
    std::string current;
    for (char32_t c : padded) {
        if (is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            append_utf8(current, c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
    for (int n = 0; n < kMaxNgramOrder; ++n) {
        correct[n] += other.correct[n];
        total[n] += other.total[n];
    }
    sys_len += other.sys_len;
    ref_len += other.ref_len;
    return *this;
}

BleuStats sentence_stats(std::string_view hypothesis, std::string_view reference) {
    const auto hyp = tokenize_13a(rstrip(hypothesis));
    const auto ref = tokenize_13a(rstrip(reference));
    BleuStats stats;
    stats.sys_len = hyp.size();
    stats.ref_len = ref.size();
    const auto ref_counts = count_ngrams(ref);
    for (const auto& [ngram, count] : count_ngrams(hyp)) {
        const auto order = static_cast<std::size_t>(ngram[0] - '1');
        stats.total[order] += count;
        const auto it = ref_counts.find(ngram);
        if (it != ref_counts.end()) stats.correct[order] += std::min(count, it->second);
    }
    return stats;
}

double bleu_from_stats(const BleuStats& stats) {
    if (std::all_of(stats.correct.begin(), stats.correct.end(), [](std::size_t c) { return c == 0; })) {
        return 0.0;
    }
    double brevity = 1.0;
    if (stats.sys_len < stats.ref_len) {
        brevity = stats.sys_len > 0
                      ? std::exp(1.0 - static_cast<double>(stats.ref_len) / static_cast<double>(stats.sys_len))
                      : 0.0;
    }
    // Orders without any hypothesis n-grams keep precision 0, which floors the
    // log and drives the score to 0.
    std::array<double, kMaxNgramOrder> precision{};
    double smooth = 1.0;
    for (int n = 0; n < kMaxNgramOrder; ++n) {
        if (stats.total[n] == 0) break;
        if (stats.correct[n] == 0) {
            smooth *= 2.0;
            precision[n] = 100.0 / (smooth * static_cast<double>(stats.total[n]));
        } else {
            precision[n] = 100.0 * static_cast<double>(stats.correct[n]) / static_cast<double>(stats.total[n]);
        }
    }
    double log_sum = 0.0;
    for (double p : precision) log_sum += p == 0.0 ? -9999999999.0 : std::log(p);
    return brevity * std::exp(log_sum / kMaxNgramOrder);
}

double corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references) {
    if (hypotheses.empty()) throw Error("metrics", "BLEU of an empty corpus is undefined");
    if (hypotheses.size() != references.size()) {
        throw Error("metrics", "hypothesis and reference counts differ (" + std::to_string(hypotheses.size()) +
                                   " vs " + std::to_string(references.size()) + ")");
    }
    BleuStats total;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) total += sentence_stats(hypotheses[i], references[i]);
    return bleu_from_stats(total);
}

std::string detokenize(std::span<const std::string> tokens) {
    static const std::string marker = "\xE2\x96\x81";  // U+2581
    const bool pieces = std::any_of(tokens.begin(), tokens.end(),
                                    [](const std::string& t) { return t.rfind(marker, 0) == 0; });
    std::string out;
    if (!pieces) {
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) out.push_back(' ');
            out += tokens[i];
        }
        return out;
    }
    for (const auto& token : tokens) {
        if (token.rfind(marker, 0) == 0) {
            if (!out.empty()) out.push_back(' ');
            out += token.substr(marker.size());
        } else {
            out += token;
        }
    }
    return out;
}

}  // namespace simulst::metrics
