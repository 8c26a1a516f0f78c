#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cipherscale/vocab.hpp"

namespace cipherscale {

class NGramModel;

// A normalized line contains only 'a'..'z' and single interior spaces.
using NormalizedLine = std::string;

// Lowercase ASCII letters pass through, everything else becomes a space,
// space runs collapse, result trimmed. Idempotent.
NormalizedLine normalize(std::string_view raw);

// [BOS] + character IDs + [EOS], payload truncated so the total length
// stays <= max_len. EOS is always present.
TokenSeq encode(const NormalizedLine& line, const Vocab& vocab,
                int max_len = kMaxSeqLen);

// Inverse of encode for untruncated lines; strips BOS/EOS.
std::string decode(const TokenSeq& seq, const Vocab& vocab);

// Deterministic corpus sampled from a character n-gram model. Line lengths
// are uniform in [40, 510]; emitted lines satisfy the NormalizedLine
// invariants (no leading/trailing/double spaces).
std::vector<NormalizedLine> synth_corpus(std::uint64_t seed, int n_lines,
                                         const NGramModel& lm);

// One document per line, UTF-8. Raw loader does no normalization.
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path,
                 const std::vector<std::string>& lines);

// Built-in English sample used to seed reference n-gram models when no
// external corpus is supplied.
std::string_view builtin_seed_text();

}  // namespace cipherscale
