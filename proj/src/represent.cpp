#include "invdec/represent.hpp"

#include <omp.h>

#include "invdec/embeddings.hpp"

namespace invdec {

namespace {

Eigen::MatrixXd sentence_rows(const InferenceModel& im, std::span<const int> ids) {
    return embed_sentence<double>(im.embeddings, ids);
}

int single_source_width(const InferenceModel& im, RepSource source, Pooling pooling) {
    if (source == RepSource::kProjected) return im.model.d_v();
    return (pooling == Pooling::kMean ? 1 : 3) * im.model.d_z();
}

// Per-source encoders used by the dataset pipeline. Rows are disjoint, so
// the parallel loop is bit-deterministic for any thread count.
Eigen::MatrixXd encode_all(const InferenceModel& im,
                           const std::vector<std::vector<int>>& sentences,
                           RepSource source, Pooling pooling, int threads) {
    const Eigen::Index n = static_cast<Eigen::Index>(sentences.size());
    Eigen::MatrixXd out(n, single_source_width(im, source, pooling));
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& ids = sentences[static_cast<std::size_t>(i)];
        switch (source) {
            case RepSource::kEncoder:
                out.row(i) = encode_en(im, ids, pooling).transpose();
                break;
            case RepSource::kDecoderInverse:
                out.row(i) = encode_de(im, ids, pooling).transpose();
                break;
            case RepSource::kProjected:
                out.row(i) = encode_projected(im, ids).transpose();
                break;
            default:
                break;
        }
    }
    return out;
}

Eigen::MatrixXd wordvec_average_all(const InferenceModel& im,
                                    const std::vector<std::vector<int>>& sentences) {
    const Eigen::Index n = static_cast<Eigen::Index>(sentences.size());
    Eigen::MatrixXd out(n, im.embeddings.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::MatrixXd rows =
            sentence_rows(im, sentences[static_cast<std::size_t>(i)]);
        out.row(i) = average_vectors<double>(rows).transpose();
    }
    return out;
}

}  // namespace

InferenceModel make_inference_model(const Checkpoint& checkpoint) {
    InferenceModel im;
    im.model = cast_model<double>(checkpoint.model);
    im.embeddings = checkpoint.table.matrix.cast<double>();
    im.vocab = checkpoint.vocab;
    return im;
}

Eigen::VectorXd encode_en(const InferenceModel& im, std::span<const int> ids,
                          Pooling pooling) {
    const Eigen::MatrixXd states =
        encode_bidirectional(im.model.encoder, sentence_rows(im, ids));
    return pool<double>(states, pooling);
}

Eigen::VectorXd encode_de(const InferenceModel& im, std::span<const int> ids,
                          Pooling pooling) {
    if (ids.empty()) throw DataError("encode_de: empty sentence");
    const Eigen::MatrixXd rows = sentence_rows(im, ids);
    Eigen::MatrixXd states(rows.rows(), im.model.d_z());
    for (Eigen::Index t = 0; t < rows.rows(); ++t)
        states.row(t) =
            decoder_inverse(im.model.decoder, Eigen::MatrixXd(rows.row(t).transpose()))
                .col(0)
                .transpose();
    return pool<double>(states, pooling);
}

Eigen::VectorXd encode_projected(const InferenceModel& im, std::span<const int> ids) {
    const Eigen::MatrixXd states =
        encode_bidirectional(im.model.encoder, sentence_rows(im, ids));
    const Eigen::VectorXd z = pool<double>(states, Pooling::kMean);
    return decoder_forward(im.model.decoder, Eigen::MatrixXd(z)).col(0);
}

void remove_top_component(Eigen::MatrixXd& rows) {
    if (rows.rows() == 0 || rows.isZero(0.0)) return;
    // First right singular vector = top eigenvector of the Gram matrix.
    const Eigen::MatrixXd gram = rows.transpose() * rows;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    const Eigen::VectorXd u = solver.eigenvectors().col(gram.cols() - 1);
    rows -= (rows * u) * u.transpose();
}

Eigen::VectorXd ensemble(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                         EnsembleMode mode) {
    if (mode == EnsembleMode::kAvg) {
        if (a.size() != b.size())
            throw DataError("ensemble: averaging requires equal lengths");
        return 0.5 * (a + b);
    }
    Eigen::VectorXd out(a.size() + b.size());
    out.head(a.size()) = a;
    out.tail(b.size()) = b;
    return out;
}

Eigen::MatrixXd represent_dataset(const InferenceModel& im,
                                  const std::vector<std::vector<int>>& sentences,
                                  const RepOptions& options) {
    for (std::size_t i = 0; i < sentences.size(); ++i)
        if (sentences[i].empty())
            throw DataError("represent_dataset: sentence " + std::to_string(i + 1) +
                            " is empty after vocabulary filtering");

    switch (options.source) {
        case RepSource::kEncoder:
        case RepSource::kDecoderInverse: {
            Eigen::MatrixXd reps = encode_all(im, sentences, options.source,
                                              options.pooling, options.threads);
            if (options.remove_top) remove_top_component(reps);
            return reps;
        }
        case RepSource::kEnsembleAvg:
        case RepSource::kEnsembleConcat: {
            Eigen::MatrixXd en = encode_all(im, sentences, RepSource::kEncoder,
                                            options.pooling, options.threads);
            Eigen::MatrixXd de = encode_all(im, sentences, RepSource::kDecoderInverse,
                                            options.pooling, options.threads);
            if (options.remove_top) {
                remove_top_component(en);
                remove_top_component(de);
            }
            if (options.source == RepSource::kEnsembleAvg) return 0.5 * (en + de);
            Eigen::MatrixXd out(en.rows(), en.cols() + de.cols());
            out.leftCols(en.cols()) = en;
            out.rightCols(de.cols()) = de;
            return out;
        }
        case RepSource::kProjected: {
            // Learnt d_v-dimensional projection averaged with the word-vector
            // baseline; the post-processing applies to each part individually.
            Eigen::MatrixXd learnt = encode_all(im, sentences, RepSource::kProjected,
                                                options.pooling, options.threads);
            Eigen::MatrixXd wordvec = wordvec_average_all(im, sentences);
            if (options.remove_top) {
                remove_top_component(learnt);
                remove_top_component(wordvec);
            }
            return 0.5 * (learnt + wordvec);
        }
    }
    throw NumericError("represent_dataset: unreachable");
}

}  // namespace invdec
