#pragma once

#include "storyaug/corpus.hpp"

#include <cstdint>
#include <string>

namespace storyaug {

enum class SynthStyle { stories, transcripts };

/// One raw synthetic document (curly quotes, blank-line paragraphs) in the given style.
std::string synth_raw_document(SynthStyle style, std::uint64_t seed);

/// Normalized synthetic documents until at least target_words words. Deterministic in
/// (style, target_words, seed). Ids are "<prefix>-<index>".
Corpus synth_corpus(SynthStyle style, std::int64_t target_words, std::uint64_t seed, const std::string &prefix);

} // namespace storyaug
