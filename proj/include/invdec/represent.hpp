#ifndef INVDEC_REPRESENT_HPP
#define INVDEC_REPRESENT_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "invdec/checkpoint.hpp"
#include "invdec/model.hpp"

namespace invdec {

enum class RepSource { kEncoder, kDecoderInverse, kEnsembleAvg, kEnsembleConcat, kProjected };
enum class EnsembleMode { kAvg, kConcat };

struct RepOptions {
    RepSource source = RepSource::kEncoder;
    Pooling pooling = Pooling::kMean;
    bool remove_top = false;  // top-principal-component post-processing
    int threads = 1;
};

// Inference-side view of a checkpoint: parameters and word vectors cast to
// double once, shared read-only across threads.
struct InferenceModel {
    Model<double> model;
    Eigen::MatrixXd embeddings;
    Vocabulary vocab;
};

InferenceModel make_inference_model(const Checkpoint& checkpoint);

// Pooled encoder representation of one sentence.
Eigen::VectorXd encode_en(const InferenceModel& im, std::span<const int> ids,
                          Pooling pooling);

// Pooled inverse-decoder representation: f_de^{-1} applied to each word
// vector in the sentence, then pooled over timesteps.
Eigen::VectorXd encode_de(const InferenceModel& im, std::span<const int> ids,
                          Pooling pooling);

// f_de applied to the mean-pooled encoder states; lands in word-vector space.
Eigen::VectorXd encode_projected(const InferenceModel& im, std::span<const int> ids);

// Removes the first right singular direction of the raw matrix (no mean
// subtraction) from every row. All-zero input is returned unchanged.
void remove_top_component(Eigen::MatrixXd& rows);

Eigen::VectorXd ensemble(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                         EnsembleMode mode);

// Dataset-level pipeline: encodes every sentence with the requested source,
// applying the top-component removal per source individually before any
// ensembling. Row i corresponds to sentences[i].
Eigen::MatrixXd represent_dataset(const InferenceModel& im,
                                  const std::vector<std::vector<int>>& sentences,
                                  const RepOptions& options);

}  // namespace invdec

#endif  // INVDEC_REPRESENT_HPP
