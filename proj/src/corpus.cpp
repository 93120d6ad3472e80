#include "invdec/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "invdec/errors.hpp"

namespace invdec {

namespace {

std::vector<std::string> split_lowercase(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_blank(const std::string& line) {
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const char* data, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 0x100000001b3ULL;
        }
    };
    for (int i = 0; i < size(); ++i) {
        feed(tokens[i].data(), tokens[i].size());
        feed("\0", 1);
        std::uint64_t c = counts[i];
        feed(reinterpret_cast<const char*>(&c), sizeof(c));
    }
    return h;
}

void Vocabulary::remove_ids(const std::vector<int>& ids_to_remove) {
    std::vector<bool> drop(tokens.size(), false);
    for (int id : ids_to_remove) drop[static_cast<std::size_t>(id)] = true;
    std::vector<std::string> new_tokens;
    std::vector<std::uint64_t> new_counts;
    new_tokens.reserve(tokens.size());
    new_counts.reserve(counts.size());
    token_to_id.clear();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (drop[i]) continue;
        token_to_id[tokens[i]] = static_cast<int>(new_tokens.size());
        new_tokens.push_back(std::move(tokens[i]));
        new_counts.push_back(counts[i]);
    }
    tokens = std::move(new_tokens);
    counts = std::move(new_counts);
}

std::vector<int> tokenize_line(const std::string& line, const Vocabulary& vocab) {
    std::vector<int> ids;
    for (const auto& tok : split_lowercase(line)) {
        auto it = vocab.token_to_id.find(tok);
        if (it != vocab.token_to_id.end()) ids.push_back(it->second);
    }
    return ids;
}

Vocabulary build_vocabulary(const std::string& corpus_path, std::uint64_t min_count) {
    std::ifstream in(corpus_path);
    if (!in) throw DataError("cannot open corpus file: " + corpus_path);

    std::unordered_map<std::string, std::uint64_t> raw_counts;
    std::string line;
    while (std::getline(in, line)) {
        for (auto& tok : split_lowercase(line)) ++raw_counts[tok];
    }

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(raw_counts.size());
    for (auto& [tok, count] : raw_counts) {
        if (count >= min_count) kept.emplace_back(tok, count);
    }
    if (kept.empty()) throw DataError("empty vocabulary after filtering: " + corpus_path);

    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.tokens.reserve(kept.size());
    vocab.counts.reserve(kept.size());
    for (auto& [tok, count] : kept) {
        vocab.token_to_id[tok] = static_cast<int>(vocab.tokens.size());
        vocab.tokens.push_back(std::move(tok));
        vocab.counts.push_back(count);
    }
    return vocab;
}

int NoiseTable::sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<int>(it - cumulative.begin());
}

NoiseTable noise_distribution(const Vocabulary& vocab) {
    if (vocab.size() == 0) throw DataError("noise_distribution: empty vocabulary");
    NoiseTable table;
    table.probs.resize(vocab.counts.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.counts.size(); ++i) {
        table.probs[i] = std::pow(static_cast<double>(vocab.counts[i]), 0.75);
        total += table.probs[i];
    }
    table.cumulative.resize(table.probs.size());
    double running = 0.0;
    for (std::size_t i = 0; i < table.probs.size(); ++i) {
        table.probs[i] /= total;
        running += table.probs[i];
        table.cumulative[i] = running;
    }
    return table;
}

std::vector<int> sample_negatives(const NoiseTable& noise, int k, Rng& rng) {
    std::vector<int> out(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = noise.sample(rng);
    return out;
}

SentencePairReader::SentencePairReader(const std::string& corpus_path,
                                       const Vocabulary& vocab)
    : in_(corpus_path), vocab_(&vocab) {
    if (!in_) throw DataError("cannot open corpus file: " + corpus_path);
}

std::optional<SentencePair> SentencePairReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        if (is_blank(line)) {
            have_prev_ = false;
            continue;
        }
        std::vector<int> ids = tokenize_line(line, *vocab_);
        if (ids.empty()) {
            // Sentence vanished after OOV filtering: it cannot participate
            // in a pair, and it breaks adjacency with the next line.
            have_prev_ = false;
            continue;
        }
        if (have_prev_) {
            SentencePair pair{std::move(prev_), ids};
            prev_ = std::move(ids);
            return pair;
        }
        prev_ = std::move(ids);
        have_prev_ = true;
    }
    return std::nullopt;
}

std::vector<SentencePair> read_sentence_pairs(const std::string& corpus_path,
                                              const Vocabulary& vocab) {
    SentencePairReader reader(corpus_path, vocab);
    std::vector<SentencePair> pairs;
    while (auto pair = reader.next()) pairs.push_back(std::move(*pair));
    return pairs;
}

}  // namespace invdec
