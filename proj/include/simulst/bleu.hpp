#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simulst::metrics {

inline constexpr int kMaxNgramOrder = 4;

/// mteval-v13a tokenization: punctuation split off, periods and commas
/// separated unless adjacent to digits, whitespace collapsed. Case preserved.
std::vector<std::string> tokenize_13a(std::string_view text);

struct BleuStats {
    std::array<std::size_t, kMaxNgramOrder> correct{};
    std::array<std::size_t, kMaxNgramOrder> total{};
    std::size_t sys_len = 0;
    std::size_t ref_len = 0;

    BleuStats& operator+=(const BleuStats& other);
};

/// Clipped n-gram matches of one hypothesis against one reference (raw text;
/// tokenized internally).
BleuStats sentence_stats(std::string_view hypothesis, std::string_view reference);

/// Score in [0, 100] with exponential smoothing of zero-match orders and the
/// brevity penalty.
double bleu_from_stats(const BleuStats& stats);

/// Corpus BLEU over aligned hypothesis/reference lines. Throws
/// simulst::Error("metrics") on an empty corpus or a length mismatch.
double corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references);

/// Joins output tokens into a sentence. SentencePiece pieces ("▁" word
/// markers) are merged; plain word tokens are joined by single spaces.
std::string detokenize(std::span<const std::string> tokens);

}  // namespace simulst::metrics
