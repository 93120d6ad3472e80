// Shared fixtures: temp directories, synthetic corpora and word vectors.
#ifndef INVDEC_TESTS_SUPPORT_HPP
#define INVDEC_TESTS_SUPPORT_HPP

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "invdec/model.hpp"
#include "invdec/rng.hpp"

namespace testsupport {

// Fills the (zero-initialized) coupling net output layers with bounded random
// values so tests exercise genuinely nonlinear couplings. `scale` controls
// the typical |s| magnitude.
template <typename Real>
void randomize_coupling_nets(invdec::Model<Real>& model, invdec::Rng& rng,
                             double scale) {
    for (auto& layer : model.decoder.couplings) {
        for (auto* net : {&layer.s, &layer.t}) {
            for (auto* m : {&net->w1, &net->b1, &net->w2, &net->b2}) {
                for (Eigen::Index i = 0; i < m->size(); ++i)
                    (*m)(i) = static_cast<Real>(rng.uniform(-scale, scale));
            }
        }
    }
}

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("invdec_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

struct TopicCorpus {
    std::string corpus_path;
    std::string vectors_path;
    int vocab_size = 0;
    std::vector<int> topic_of_sentence;  // by corpus line, -1 for blank lines
};

// Corpus of documents drawn from disjoint per-topic sub-vocabularies, plus a
// matching random word-vector file. Documents stay within one topic, so
// adjacent-sentence pairs always share a topic.
inline TopicCorpus make_topic_corpus(const TempDir& dir, int n_topics,
                                     int words_per_topic, int n_documents,
                                     int sentences_per_document, int words_per_sentence,
                                     int d_v, std::uint64_t seed,
                                     const std::string& prefix = "topic") {
    invdec::Rng rng(seed);
    TopicCorpus out;
    out.vocab_size = n_topics * words_per_topic;
    out.corpus_path = dir.file(prefix + "_corpus.txt");
    out.vectors_path = dir.file(prefix + "_vectors.txt");

    auto word = [&](int topic, int index) {
        return "t" + std::to_string(topic) + "w" + std::to_string(index);
    };

    std::ofstream corpus(out.corpus_path);
    for (int doc = 0; doc < n_documents; ++doc) {
        const int topic = doc % n_topics;
        for (int s = 0; s < sentences_per_document; ++s) {
            for (int w = 0; w < words_per_sentence; ++w) {
                const int index = static_cast<int>(
                    rng.next_u64() % static_cast<std::uint64_t>(words_per_topic));
                corpus << (w == 0 ? "" : " ") << word(topic, index);
            }
            corpus << '\n';
            out.topic_of_sentence.push_back(topic);
        }
        corpus << '\n';
        out.topic_of_sentence.push_back(-1);
    }
    corpus.close();

    std::ofstream vectors(out.vectors_path);
    for (int topic = 0; topic < n_topics; ++topic) {
        for (int index = 0; index < words_per_topic; ++index) {
            vectors << word(topic, index);
            for (int j = 0; j < d_v; ++j) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f", rng.gaussian() * 0.5);
                vectors << ' ' << buf;
            }
            vectors << '\n';
        }
    }
    return out;
}

}  // namespace testsupport

#endif  // INVDEC_TESTS_SUPPORT_HPP
