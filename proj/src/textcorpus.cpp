#include "cipherscale/textcorpus.hpp"

#include <fstream>
#include <stdexcept>

#include "cipherscale/ngram.hpp"
#include "cipherscale/rng.hpp"

namespace cipherscale {

NormalizedLine normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char uc : raw) {
    char c = static_cast<char>(uc);
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c >= 'a' && c <= 'z') {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    } else {
      pending_space = true;  // any non-letter byte acts as a space
    }
  }
  return out;
}

TokenSeq encode(const NormalizedLine& line, const Vocab& vocab, int max_len) {
  if (max_len < 2) throw std::invalid_argument("encode: max_len must be >= 2");
  const std::size_t payload =
      std::min(line.size(), static_cast<std::size_t>(max_len - 2));
  TokenSeq seq;
  seq.reserve(payload + 2);
  seq.push_back(kBosId);
  for (std::size_t i = 0; i < payload; ++i) {
    seq.push_back(vocab.content_id(line[i]));  // throws on out-of-alphabet
  }
  seq.push_back(kEosId);
  return seq;
}

std::string decode(const TokenSeq& seq, const Vocab& vocab) {
  std::string out;
  out.reserve(seq.size());
  for (int id : seq) {
    if (id == kBosId || id == kEosId) continue;
    out.push_back(vocab.content_char(id));  // throws on out-of-range
  }
  return out;
}

std::vector<NormalizedLine> synth_corpus(std::uint64_t seed, int n_lines,
                                         const NGramModel& lm) {
  std::vector<NormalizedLine> lines;
  lines.reserve(std::max(n_lines, 0));
  Rng rng(hash64(seed, 0x53594e5448ull));  // "SYNTH"
  std::vector<int> recent;
  for (int i = 0; i < n_lines; ++i) {
    const int len = 40 + static_cast<int>(rng.next_below(510 - 40 + 1));
    std::string line;
    line.reserve(len);
    recent.clear();
    for (int p = 0; p < len; ++p) {
      const bool at_edge = p == 0 || p == len - 1;
      const bool after_space = !recent.empty() && recent.back() == kSpaceId;
      const int id = lm.sample(recent, rng, !(at_edge || after_space));
      recent.push_back(id);
      line.push_back(Vocab::content_char(id));
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const std::string& line : lines) out << line << '\n';
}

std::string_view builtin_seed_text() {
  static constexpr std::string_view text =
      "the harbour town woke early and the market square filled with carts "
      "before the sun had cleared the rooftops. fishermen hauled their boxes "
      "of silver fish up from the quay while bakers stacked warm loaves in "
      "the windows and the smell of bread drifted over the cobbles. a young "
      "clerk hurried past with a bundle of letters under one arm, dodging "
      "between barrels of apples and crates of green vegetables that the "
      "farmers had carried in from the valley. by midmorning the square was "
      "loud with bargaining, and every stall keeper had a story about the "
      "weather, the roads, or the strange lights people claimed to have "
      "seen over the northern hills. "
      "in the workshop behind the clock tower an old engineer adjusted the "
      "teeth of a brass gear with a small file and held it up to the light. "
      "the mechanism had kept the town's time for sixty years and she knew "
      "every spring and lever of it by heart. her apprentice swept the "
      "floor, asked questions about escapements and pendulums, and wrote "
      "the answers in a worn notebook. when the bells finally rang at noon "
      "the sound rolled down the narrow streets, over the bridge, and out "
      "across the water where the ferry was just leaving for the far shore. "
      "travellers on the deck watched the gulls wheel and dive, and a boy "
      "counted the waves until he lost track somewhere past a hundred. "
      "the library at the top of the hill stayed open late in summer. "
      "students came to copy maps, sailors came to read about distant "
      "ports, and the librarian knew which shelf held the answer to almost "
      "any question worth asking. one evening a geographer unrolled a chart "
      "of the coast and marked the places where the tide ran fastest, "
      "explaining to a circle of listeners how the moon pulled the sea into "
      "long slow hills that travelled around the world. outside the window "
      "the lighthouse began its steady blinking, and far below the town "
      "settled into the quiet rhythm of lamps being lit one by one. "
      "winter brought deep snow and the children dragged sleds to the top "
      "of the orchard slope. the blacksmith fixed runners and sharpened "
      "skates, joking that he earned half his living from frozen ponds. in "
      "the long evenings families gathered near the stove to mend nets, "
      "carve small toys, and tell the old stories about foxes that "
      "outwitted wolves and ships that sailed beyond the maps. a quiet "
      "excitement always returned with the first thaw, when the river "
      "cracked and boomed and the first barges pushed north loaded with "
      "salt, timber, wax, quartz, and jars of dark honey from the "
      "beekeepers in the south. "
      "the observatory on the ridge measured the sky every clear night. "
      "the astronomer logged each passing satellite and compared the "
      "brightness of variable stars against her charts, humming to herself "
      "while the dome motors buzzed and clicked. numbers filled her "
      "ledgers, column after column, and from the numbers came patterns, "
      "and from the patterns came predictions that the almanac printed "
      "each spring. people trusted the almanac for planting dates and "
      "high tides, though the astronomer always reminded them that every "
      "prediction carries a margin of error, and that honest uncertainty "
      "is worth more than confident guessing. "
      "a traveling judge held court in the town hall twice a year, and the "
      "disputes were mostly small, a fence moved a few feet, a debt paid "
      "in eggs instead of coin, a quarrel over the right to gather "
      "mushrooms in the oak woods. the judge listened carefully, asked "
      "short questions, and wrote his rulings in plain language so that "
      "everyone could follow the reasoning. justice, he liked to say, is "
      "mostly the patience to hear the whole story before deciding how it "
      "ends.";
  return text;
}

}  // namespace cipherscale
