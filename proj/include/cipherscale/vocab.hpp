#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cipherscale {

// Fixed 29-symbol vocabulary: 0 = BOS, 1 = EOS, 2 = space, 3..28 = 'a'..'z'.
inline constexpr int kBosId = 0;
inline constexpr int kEosId = 1;
inline constexpr int kSpaceId = 2;
inline constexpr int kVocabSize = 29;
// Content symbols are the 27 cipherable IDs 2..28 (space + letters).
inline constexpr int kNumContent = 27;
inline constexpr int kFirstContentId = 2;
inline constexpr int kMaxSeqLen = 512;

using TokenSeq = std::vector<std::int32_t>;

struct Vocab {
  static constexpr int size = kVocabSize;

  // Full symbol table; BOS/EOS have named symbols, content IDs map to
  // their single character.
  std::string_view symbol_of(int id) const {
    static constexpr std::string_view table[kVocabSize] = {
        "<bos>", "<eos>", " ", "a", "b", "c", "d", "e", "f", "g",
        "h",     "i",     "j", "k", "l", "m", "n", "o", "p", "q",
        "r",     "s",     "t", "u", "v", "w", "x", "y", "z"};
    if (id < 0 || id >= kVocabSize) throw std::out_of_range("symbol_of: bad id");
    return table[id];
  }

  int id_of(std::string_view symbol) const {
    if (symbol == "<bos>") return kBosId;
    if (symbol == "<eos>") return kEosId;
    if (symbol.size() == 1) return content_id(symbol[0]);
    throw std::invalid_argument("id_of: unknown symbol");
  }

  // ' ' -> 2, 'a'..'z' -> 3..28.
  static int content_id(char c) {
    if (c == ' ') return kSpaceId;
    if (c >= 'a' && c <= 'z') return 3 + (c - 'a');
    throw std::invalid_argument("content_id: character outside alphabet");
  }

  static char content_char(int id) {
    if (id == kSpaceId) return ' ';
    if (id >= 3 && id < kVocabSize) return static_cast<char>('a' + (id - 3));
    throw std::out_of_range("content_char: not a content id");
  }
};

inline bool is_content_id(int id) {
  return id >= kFirstContentId && id < kVocabSize;
}

}  // namespace cipherscale
