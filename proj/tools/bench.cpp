// Benchmarks the OpenMP batch-gradient and dataset-encoding kernels against
// their serial reference paths.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "invdec/represent.hpp"
#include "invdec/train.hpp"

namespace {

using namespace invdec;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

struct Fixture {
    std::vector<SentencePair> pairs;
    Mat<float> embeddings;
    NoiseTable noise;
    Model<float> model;
    int k = 5;
};

Fixture make_fixture(int n_pairs, int vocab, int d, int d_v, int sentence_len,
                     DecoderKind kind) {
    Fixture f;
    Rng rng(7);
    f.embeddings.resize(vocab, d_v);
    for (Eigen::Index i = 0; i < f.embeddings.size(); ++i)
        f.embeddings(i) = static_cast<float>(rng.gaussian() * 0.5);

    Vocabulary v;
    for (int i = 0; i < vocab; ++i) {
        v.tokens.push_back("w" + std::to_string(i));
        v.counts.push_back(static_cast<std::uint64_t>(1 + (rng.next_u64() % 50)));
        v.token_to_id[v.tokens.back()] = i;
    }
    f.noise = noise_distribution(v);

    f.pairs.resize(static_cast<std::size_t>(n_pairs));
    for (auto& pair : f.pairs) {
        pair.current.resize(static_cast<std::size_t>(sentence_len));
        pair.next.resize(static_cast<std::size_t>(sentence_len));
        for (auto& id : pair.current) id = static_cast<int>(rng.next_u64() % vocab);
        for (auto& id : pair.next) id = static_cast<int>(rng.next_u64() % vocab);
    }

    ModelDims dims{d, d_v, 0};
    f.model = init_model<float>(dims, kind, 0.01f, 11);
    return f;
}

void bench_batch(const Fixture& f, const std::vector<int>& thread_counts) {
    std::span<const SentencePair> batch(f.pairs.data(), f.pairs.size());
    Model<float> grads = zero_clone(f.model);

    auto t0 = std::chrono::steady_clock::now();
    accumulate_batch_serial(f.model, f.embeddings, batch, f.noise, f.k, 1, 0, grads);
    const double serial = seconds_since(t0);
    std::printf("  serial reference        %8.3f s  (%.0f pairs/s)\n", serial,
                static_cast<double>(f.pairs.size()) / serial);

    for (int threads : thread_counts) {
        grads = zero_clone(f.model);
        t0 = std::chrono::steady_clock::now();
        accumulate_batch_parallel(f.model, f.embeddings, batch, f.noise, f.k, 1, 0,
                                  grads, threads);
        const double elapsed = seconds_since(t0);
        std::printf("  openmp x%-2d              %8.3f s  (%.0f pairs/s, %.2fx)\n",
                    threads, elapsed, static_cast<double>(f.pairs.size()) / elapsed,
                    serial / elapsed);
    }
}

void bench_encode(const Fixture& f, const std::vector<int>& thread_counts) {
    Checkpoint cp;
    cp.model = f.model;
    cp.table.matrix = f.embeddings;
    for (std::size_t i = 0; i < static_cast<std::size_t>(f.embeddings.rows()); ++i) {
        cp.vocab.tokens.push_back("w" + std::to_string(i));
        cp.vocab.counts.push_back(1);
        cp.vocab.token_to_id[cp.vocab.tokens.back()] = static_cast<int>(i);
    }
    const InferenceModel im = make_inference_model(cp);

    std::vector<std::vector<int>> sentences;
    sentences.reserve(f.pairs.size());
    for (const auto& pair : f.pairs) sentences.push_back(pair.current);

    RepOptions options;
    options.source = RepSource::kEnsembleAvg;
    options.pooling = Pooling::kMean;

    options.threads = 1;
    auto t0 = std::chrono::steady_clock::now();
    represent_dataset(im, sentences, options);
    const double serial = seconds_since(t0);
    std::printf("  serial reference        %8.3f s  (%.0f sentences/s)\n", serial,
                static_cast<double>(sentences.size()) / serial);

    for (int threads : thread_counts) {
        options.threads = threads;
        t0 = std::chrono::steady_clock::now();
        represent_dataset(im, sentences, options);
        const double elapsed = seconds_since(t0);
        std::printf("  openmp x%-2d              %8.3f s  (%.0f sentences/s, %.2fx)\n",
                    threads, elapsed, static_cast<double>(sentences.size()) / elapsed,
                    serial / elapsed);
    }
}

}  // namespace

int main(int argc, char** argv) {
    int n_pairs = 2000;
    int d = 32;
    int d_v = 32;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        const int value = std::atoi(argv[i + 1]);
        if (flag == "--pairs") n_pairs = value;
        else if (flag == "--d") d = value;
        else if (flag == "--dv") d_v = value;
    }
    std::vector<int> thread_counts = {2};
    if (omp_get_max_threads() >= 4) thread_counts.push_back(4);

    std::printf("batch gradient accumulation (%d pairs, d=%d, d_v=%d, linear)\n",
                n_pairs, d, d_v);
    Fixture linear = make_fixture(n_pairs, 200, d, d_v, 8, DecoderKind::kLinear);
    bench_batch(linear, thread_counts);

    std::printf("batch gradient accumulation (%d pairs, d=%d, d_v=%d, bijective)\n",
                n_pairs, d, d_v);
    Fixture bijective = make_fixture(n_pairs, 200, d, d_v, 8, DecoderKind::kBijective);
    bench_batch(bijective, thread_counts);

    std::printf("dataset encoding (%d sentences, ensemble-avg)\n", n_pairs);
    bench_encode(bijective, thread_counts);
    return 0;
}
