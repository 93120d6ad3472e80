#include "invdec/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "invdec/corpus.hpp"

namespace invdec {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::vector<std::vector<int>> tokenize_all(const InferenceModel& im,
                                           const std::vector<std::string>& sentences) {
    std::vector<std::vector<int>> out(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        out[i] = tokenize_line(sentences[i], im.vocab);
        if (out[i].empty())
            throw DataError("sentence " + std::to_string(i + 1) +
                            " is empty after vocabulary filtering");
    }
    return out;
}

Eigen::MatrixXd standardized_design(const Eigen::MatrixXd& features,
                                    const Eigen::VectorXd& mean,
                                    const Eigen::VectorXd& scale) {
    Eigen::MatrixXd design(features.rows(), features.cols() + 1);
    design.leftCols(features.cols()) =
        (features.rowwise() - mean.transpose()).array().rowwise() *
        scale.transpose().array();
    design.col(features.cols()).setOnes();
    return design;
}

// Row-wise softmax of logits, numerically shifted.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp();
    return p.array().colwise() / p.rowwise().sum().array();
}

}  // namespace

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0)
        throw DataError("cosine_similarity: zero vector");
    return u.dot(v) / (nu * nv);
}

double pearson(std::span<const double> preds, std::span<const double> golds) {
    if (preds.size() != golds.size() || preds.size() < 2)
        throw DataError("pearson: need two equal-length samples of size >= 2");
    const double n = static_cast<double>(preds.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        mx += preds[i];
        my += golds[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double dx = preds[i] - mx;
        const double dy = golds[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

SimilarityDataset load_similarity_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open similarity dataset: " + path);
    SimilarityDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3)
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected sentenceA<TAB>sentenceB<TAB>score");
        double gold;
        const char* begin = fields[2].data();
        const char* end = begin + fields[2].size();
        auto [ptr, ec] = std::from_chars(begin, end, gold);
        if (ec != std::errc() || ptr != end)
            throw DataError(path + ":" + std::to_string(line_no) + ": bad score field");
        ds.sent_a.push_back(fields[0]);
        ds.sent_b.push_back(fields[1]);
        ds.gold.push_back(gold);
    }
    if (ds.size() < 2)
        throw DataError(path + ": need at least two items for a Pearson score");
    return ds;
}

LabeledDataset load_labeled_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open labeled dataset: " + path);
    LabeledDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2)
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected label<TAB>sentence");
        int label;
        const char* begin = fields[0].data();
        const char* end = begin + fields[0].size();
        auto [ptr, ec] = std::from_chars(begin, end, label);
        if (ec != std::errc() || ptr != end || label < 0)
            throw DataError(path + ":" + std::to_string(line_no) + ": bad label field");
        ds.labels.push_back(label);
        ds.sentences.push_back(fields[1]);
        ds.num_classes = std::max(ds.num_classes, label + 1);
    }
    if (ds.labels.empty()) throw DataError(path + ": empty dataset");
    return ds;
}

double eval_similarity(const InferenceModel& im, const SimilarityDataset& dataset,
                       const RepOptions& options) {
    const std::size_t m = dataset.size();
    std::vector<std::vector<int>> sentences = tokenize_all(im, dataset.sent_a);
    {
        auto b = tokenize_all(im, dataset.sent_b);
        sentences.insert(sentences.end(), std::make_move_iterator(b.begin()),
                         std::make_move_iterator(b.end()));
    }
    const Eigen::MatrixXd reps = represent_dataset(im, sentences, options);
    std::vector<double> cosines(m);
    for (std::size_t i = 0; i < m; ++i) {
        cosines[i] =
            cosine_similarity(reps.row(static_cast<Eigen::Index>(i)).transpose(),
                              reps.row(static_cast<Eigen::Index>(i + m)).transpose());
    }
    return pearson(cosines, dataset.gold);
}

Eigen::VectorXd pair_features(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw DataError("pair_features: length mismatch");
    Eigen::VectorXd out(2 * u.size());
    out.head(u.size()) = (u - v).cwiseAbs();
    out.tail(u.size()) = u.cwiseProduct(v);
    return out;
}

double probe_loss_and_grad(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                           const std::vector<int>& labels, double l2,
                           Eigen::MatrixXd* grad) {
    const Eigen::Index m = design.rows();
    const Eigen::MatrixXd probs = softmax_rows(design * weights.transpose());
    double nll = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        nll -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), 1e-300));
    nll /= static_cast<double>(m);

    // Bias column is exempt from the penalty.
    Eigen::MatrixXd penalized = weights;
    penalized.col(weights.cols() - 1).setZero();
    const double loss = nll + 0.5 * l2 * penalized.squaredNorm();

    if (grad) {
        Eigen::MatrixXd delta = probs;
        for (Eigen::Index i = 0; i < m; ++i)
            delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
        *grad = delta.transpose() * design / static_cast<double>(m) + l2 * penalized;
    }
    return loss;
}

LogisticProbe fit_logistic_probe(const Eigen::MatrixXd& features,
                                 const std::vector<int>& labels, int num_classes,
                                 const ProbeConfig& config) {
    if (num_classes < 2) throw DataError("fit_logistic_probe: need at least 2 classes");
    bool multiple = false;
    for (int y : labels)
        if (y != labels.front()) multiple = true;
    if (!multiple) throw DataError("fit_logistic_probe: single-class input");

    LogisticProbe probe;
    probe.mean = features.colwise().mean();
    Eigen::VectorXd var =
        (features.rowwise() - probe.mean.transpose()).array().square().colwise().mean();
    probe.scale = (var.array() > 0.0).select(var.array().rsqrt(), 1.0);

    const Eigen::MatrixXd design = standardized_design(features, probe.mean, probe.scale);

    // Constant step from the softmax smoothness bound 0.25 * lambda_max of
    // the second-moment matrix; keeps full-batch descent stable for any
    // representation scale.
    const Eigen::MatrixXd second_moment =
        design.transpose() * design / static_cast<double>(design.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(second_moment);
    const double lambda_max = solver.eigenvalues().maxCoeff();
    const double lr = 1.0 / (0.25 * lambda_max + config.l2 + 1e-3);

    probe.weights = Eigen::MatrixXd::Zero(num_classes, design.cols());
    Eigen::MatrixXd grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        probe_loss_and_grad(probe.weights, design, labels, config.l2, &grad);
        probe.weights -= lr * grad;
    }
    return probe;
}

std::vector<int> probe_predict(const LogisticProbe& probe,
                               const Eigen::MatrixXd& features) {
    const Eigen::MatrixXd design = standardized_design(features, probe.mean, probe.scale);
    const Eigen::MatrixXd logits = design * probe.weights.transpose();
    std::vector<int> preds(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best;
        logits.row(i).maxCoeff(&best);
        preds[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return preds;
}

double probe_accuracy(const LogisticProbe& probe, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels) {
    const auto preds = probe_predict(probe, features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double eval_classification(const InferenceModel& im, const LabeledDataset& dataset,
                           const RepOptions& options, std::uint64_t split_seed,
                           const ProbeConfig& probe_config) {
    const auto sentences = tokenize_all(im, dataset.sentences);
    const Eigen::MatrixXd reps = represent_dataset(im, sentences, options);

    const std::size_t m = sentences.size();
    if (m < 5) throw DataError("eval_classification: need at least 5 items");
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    Rng rng(Rng::mix(split_seed, 0x73706c6974ULL));
    for (std::size_t i = m - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(order[i], order[j]);
    }
    const std::size_t test_count = std::max<std::size_t>(1, m / 5);
    const std::size_t train_count = m - test_count;

    Eigen::MatrixXd train_x(train_count, reps.cols());
    Eigen::MatrixXd test_x(test_count, reps.cols());
    std::vector<int> train_y(train_count), test_y(test_count);
    for (std::size_t i = 0; i < train_count; ++i) {
        train_x.row(static_cast<Eigen::Index>(i)) =
            reps.row(static_cast<Eigen::Index>(order[i]));
        train_y[i] = dataset.labels[order[i]];
    }
    for (std::size_t i = 0; i < test_count; ++i) {
        test_x.row(static_cast<Eigen::Index>(i)) =
            reps.row(static_cast<Eigen::Index>(order[train_count + i]));
        test_y[i] = dataset.labels[order[train_count + i]];
    }

    const LogisticProbe probe =
        fit_logistic_probe(train_x, train_y, dataset.num_classes, probe_config);
    return probe_accuracy(probe, test_x, test_y);
}

}  // namespace invdec
