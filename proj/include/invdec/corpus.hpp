#ifndef INVDEC_CORPUS_HPP
#define INVDEC_CORPUS_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "invdec/rng.hpp"

namespace invdec {

// Token inventory with dense ids. Ids are assigned by descending count,
// ties broken lexicographically, so the mapping is reproducible.
struct Vocabulary {
    std::unordered_map<std::string, int> token_to_id;
    std::vector<std::string> tokens;       // id -> token
    std::vector<std::uint64_t> counts;     // id -> corpus count

    int size() const { return static_cast<int>(tokens.size()); }

    // FNV-1a over "token\0count\0" in id order; stored in checkpoints so a
    // model is never paired with the wrong vocabulary.
    std::uint64_t hash() const;

    // Drops the given ids and re-densifies the remaining ones, preserving
    // relative order. Used when pretrained vectors are missing for a token.
    void remove_ids(const std::vector<int>& ids_to_remove);
};

// Lowercase + whitespace split; drops tokens absent from the vocabulary.
std::vector<int> tokenize_line(const std::string& line, const Vocabulary& vocab);

Vocabulary build_vocabulary(const std::string& corpus_path, std::uint64_t min_count);

// Negative-sampling distribution: probs[i] proportional to counts[i]^0.75.
struct NoiseTable {
    std::vector<double> probs;
    std::vector<double> cumulative;

    int sample(Rng& rng) const;
};

NoiseTable noise_distribution(const Vocabulary& vocab);

std::vector<int> sample_negatives(const NoiseTable& noise, int k, Rng& rng);

// Adjacent in-document sentence pair; `current` is the encoder input and
// `next` holds the prediction targets.
struct SentencePair {
    std::vector<int> current;
    std::vector<int> next;
};

// Streams pairs from adjacent lines in file order. A blank line is a
// document boundary; pairs never cross it. Pairs where either side becomes
// empty after OOV filtering are skipped.
class SentencePairReader {
  public:
    SentencePairReader(const std::string& corpus_path, const Vocabulary& vocab);

    std::optional<SentencePair> next();

  private:
    std::ifstream in_;
    const Vocabulary* vocab_;
    std::vector<int> prev_;
    bool have_prev_ = false;
};

std::vector<SentencePair> read_sentence_pairs(const std::string& corpus_path,
                                              const Vocabulary& vocab);

}  // namespace invdec

#endif  // INVDEC_CORPUS_HPP
