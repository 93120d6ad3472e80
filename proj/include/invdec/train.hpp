#ifndef INVDEC_TRAIN_HPP
#define INVDEC_TRAIN_HPP

#include <omp.h>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "invdec/adam.hpp"
#include "invdec/corpus.hpp"
#include "invdec/embeddings.hpp"
#include "invdec/loss.hpp"
#include "invdec/model.hpp"

namespace invdec {

struct TrainingConfig {
    int batch_size = 512;
    int d = 16;
    int k_negatives = 5;
    int epochs = 1;
    int coupling_hidden = 0;  // 0 -> d_v
    float learning_rate = 5e-4f;
    float beta = 0.01f;
    float grad_clip_norm = 5.0f;
    std::uint64_t min_count = 1;
    std::uint64_t seed = 1;
    DecoderKind decoder_kind = DecoderKind::kLinear;
    bool parseval_enabled = true;
    int threads = 1;
};

// Mean pair loss over a contiguous slice of pairs; per-pair gradients of the
// mean are added into `grads`. Every pair draws its negatives from a stream
// derived from (seed, global pair index), so results do not depend on how
// the batch is scheduled.
template <typename Real>
Real accumulate_batch_serial(const Model<Real>& model, const Mat<Real>& embeddings,
                             std::span<const SentencePair> batch,
                             const NoiseTable& noise, int k_negatives,
                             std::uint64_t seed, std::size_t first_pair_index,
                             Model<Real>& grads) {
    Tape<Real> tape;
    Model<Real> pair_grads = zero_clone(model);
    Real total = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Rng rng(Rng::mix(seed, first_pair_index + i));
        const auto negatives =
            draw_negatives(noise, batch[i].next.size(), k_negatives, rng);
        total += pair_loss_and_grad(model, embeddings, batch[i], negatives, tape,
                                    &pair_grads);
    }
    const Real inv = Real(1) / static_cast<Real>(batch.size());
    auto gs = collect_params(grads);
    auto pg = collect_params(pair_grads);
    for (std::size_t i = 0; i < gs.size(); ++i) *gs[i].tensor += inv * *pg[i].tensor;
    return total * inv;
}

// OpenMP variant: threads accumulate into private buffers over static
// contiguous chunks, and the buffers are combined in thread order, so the
// result is reproducible for a fixed thread count.
template <typename Real>
Real accumulate_batch_parallel(const Model<Real>& model, const Mat<Real>& embeddings,
                               std::span<const SentencePair> batch,
                               const NoiseTable& noise, int k_negatives,
                               std::uint64_t seed, std::size_t first_pair_index,
                               Model<Real>& grads, int threads) {
    if (threads <= 1 || batch.size() < 2)
        return accumulate_batch_serial(model, embeddings, batch, noise, k_negatives,
                                       seed, first_pair_index, grads);
    const int nt = std::min<int>(threads, static_cast<int>(batch.size()));
    std::vector<Model<Real>> thread_grads(static_cast<std::size_t>(nt));
    std::vector<Real> thread_loss(static_cast<std::size_t>(nt), Real(0));

#pragma omp parallel num_threads(nt)
    {
        const int tid = omp_get_thread_num();
        Model<Real> local = zero_clone(model);
        Tape<Real> tape;
        Real loss_sum = 0;
        // Contiguous chunks: thread t owns [t*chunk, min((t+1)*chunk, n)).
        const std::size_t n = batch.size();
        const std::size_t chunk = (n + static_cast<std::size_t>(nt) - 1) /
                                  static_cast<std::size_t>(nt);
        const std::size_t begin = static_cast<std::size_t>(tid) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(Rng::mix(seed, first_pair_index + i));
            const auto negatives =
                draw_negatives(noise, batch[i].next.size(), k_negatives, rng);
            loss_sum += pair_loss_and_grad(model, embeddings, batch[i], negatives,
                                           tape, &local);
        }
        thread_grads[static_cast<std::size_t>(tid)] = std::move(local);
        thread_loss[static_cast<std::size_t>(tid)] = loss_sum;
    }

    const Real inv = Real(1) / static_cast<Real>(batch.size());
    Real total = 0;
    auto gs = collect_params(grads);
    for (int t = 0; t < nt; ++t) {
        total += thread_loss[static_cast<std::size_t>(t)];
        auto tg = collect_params(thread_grads[static_cast<std::size_t>(t)]);
        for (std::size_t i = 0; i < gs.size(); ++i) *gs[i].tensor += inv * *tg[i].tensor;
    }
    return total * inv;
}

struct TrainResult {
    Model<float> model;
    std::vector<double> batch_losses;
};

template <typename Real>
bool params_finite(Model<Real>& model) {
    for (auto& p : collect_params(model))
        if (!p.tensor->allFinite()) return false;
    return true;
}

// One pass (or `epochs` passes) over the pairs in file order: accumulate the
// batch gradient, clip, Adam step, then the Parseval retraction on W. Word
// vectors are never updated. Throws NumericError naming the batch if the
// loss or an update stops being finite.
inline TrainResult train(const TrainingConfig& config,
                         const std::vector<SentencePair>& pairs,
                         const WordEmbeddingTable& table, const NoiseTable& noise) {
    if (pairs.empty()) throw DataError("train: corpus yields no sentence pairs");

    ModelDims dims;
    dims.d = config.d;
    dims.d_v = table.dim();
    dims.coupling_hidden = config.coupling_hidden;

    TrainResult result;
    result.model = init_model<float>(dims, config.decoder_kind, config.beta, config.seed);
    AdamState<float> adam = init_adam(result.model);
    const Mat<float>& embeddings = table.matrix;

    std::size_t global_pair_index = 0;
    std::size_t batch_index = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::size_t offset = 0;
        while (offset < pairs.size()) {
            const std::size_t size =
                std::min<std::size_t>(static_cast<std::size_t>(config.batch_size),
                                      pairs.size() - offset);
            std::span<const SentencePair> batch(pairs.data() + offset, size);

            Model<float> grads = zero_clone(result.model);
            const float loss = accumulate_batch_parallel(
                result.model, embeddings, batch, noise, config.k_negatives,
                config.seed, global_pair_index, grads, config.threads);
            if (!std::isfinite(loss))
                throw NumericError("train: non-finite loss at batch " +
                                   std::to_string(batch_index));

            clip_gradients(grads, config.grad_clip_norm);
            adam_step(result.model, grads, adam, config.learning_rate);
            if (config.parseval_enabled)
                parseval_update(result.model.decoder.linear.w, config.beta);
            if (!params_finite(result.model))
                throw NumericError("train: non-finite parameter after batch " +
                                   std::to_string(batch_index));

            result.batch_losses.push_back(static_cast<double>(loss));
            offset += size;
            global_pair_index += size;
            ++batch_index;
        }
    }
    return result;
}

}  // namespace invdec

#endif  // INVDEC_TRAIN_HPP
