#ifndef INVDEC_EMBEDDINGS_HPP
#define INVDEC_EMBEDDINGS_HPP

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>

#include "invdec/corpus.hpp"
#include "invdec/errors.hpp"

namespace invdec {

// Fixed pretrained word vectors, row i aligned with vocabulary id i.
// Immutable once loaded; training never touches it.
struct WordEmbeddingTable {
    Eigen::MatrixXf matrix;

    int dim() const { return static_cast<int>(matrix.cols()); }
    int size() const { return static_cast<int>(matrix.rows()); }
};

// Parses a word-vector text file: optional "count dim" header, then one
// token and dim decimal floats per line, single-space separated.
// Vocabulary entries missing from the file are removed from `vocab`
// (the count of removed entries is written to *dropped when given).
WordEmbeddingTable load_word_vectors(const std::string& path, Vocabulary& vocab,
                                     std::size_t* dropped = nullptr);

// Order-preserving row lookup; result row t is the vector of ids[t].
template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> embed_sentence(
    const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& table,
    std::span<const int> ids) {
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> rows(ids.size(), table.cols());
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || ids[t] >= table.rows())
            throw DataError("embed_sentence: token id out of range");
        rows.row(static_cast<Eigen::Index>(t)) = table.row(ids[t]);
    }
    return rows;
}

template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> average_vectors(
    const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& rows) {
    if (rows.rows() == 0) throw DataError("average_vectors: empty input");
    return rows.colwise().mean().transpose();
}

}  // namespace invdec

#endif  // INVDEC_EMBEDDINGS_HPP
