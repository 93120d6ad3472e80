#ifndef INVDEC_EVALUATE_HPP
#define INVDEC_EVALUATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "invdec/represent.hpp"

namespace invdec {

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// Sample Pearson correlation; requires length >= 2 and nonzero variance on
// both sides.
double pearson(std::span<const double> preds, std::span<const double> golds);

// TSV "sentenceA<TAB>sentenceB<TAB>score".
struct SimilarityDataset {
    std::vector<std::string> sent_a;
    std::vector<std::string> sent_b;
    std::vector<double> gold;

    std::size_t size() const { return gold.size(); }
};

SimilarityDataset load_similarity_tsv(const std::string& path);

// TSV "label<TAB>sentence".
struct LabeledDataset {
    std::vector<int> labels;
    std::vector<std::string> sentences;
    int num_classes = 0;
};

LabeledDataset load_labeled_tsv(const std::string& path);

// Encodes both columns with the chosen source (post-processing, when on, is
// fit over all encoded sentences of the dataset per source) and returns the
// Pearson correlation of pair cosines against the gold scores.
double eval_similarity(const InferenceModel& im, const SimilarityDataset& dataset,
                       const RepOptions& options);

// concat(|u - v|, u .* v) feature composition for pair tasks.
Eigen::VectorXd pair_features(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

struct ProbeConfig {
    double l2 = 1e-4;
    int epochs = 500;
};

// Multinomial logistic regression trained by full-batch gradient descent on
// standardized features. Deterministic: zero initialization, step size from
// a curvature bound on the standardized design.
struct LogisticProbe {
    Eigen::MatrixXd weights;  // classes x (dim + 1), last column is the bias
    Eigen::VectorXd mean;     // feature standardization, fit on training data
    Eigen::VectorXd scale;
};

LogisticProbe fit_logistic_probe(const Eigen::MatrixXd& features,
                                 const std::vector<int>& labels, int num_classes,
                                 const ProbeConfig& config = {});

std::vector<int> probe_predict(const LogisticProbe& probe,
                               const Eigen::MatrixXd& features);

double probe_accuracy(const LogisticProbe& probe, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels);

// Regularized mean NLL and its gradient on an already-standardized design
// matrix (bias column included); exposed for gradient checking.
double probe_loss_and_grad(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                           const std::vector<int>& labels, double l2,
                           Eigen::MatrixXd* grad);

// Representation -> 80/20 split by seeded shuffle -> probe accuracy on the
// held-out split.
double eval_classification(const InferenceModel& im, const LabeledDataset& dataset,
                           const RepOptions& options, std::uint64_t split_seed,
                           const ProbeConfig& probe_config = {});

}  // namespace invdec

#endif  // INVDEC_EVALUATE_HPP
