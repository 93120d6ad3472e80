#include "invdec/embeddings.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

namespace invdec {

namespace {

// Splits on single spaces, per the interchange format. Consecutive spaces
// yield empty fields, which are rejected by the float parser below.
std::vector<std::string_view> split_fields(const std::string& line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t pos = line.find(' ', start);
        if (pos == std::string::npos) pos = line.size();
        fields.emplace_back(line.data() + start, pos - start);
        start = pos + 1;
    }
    if (!fields.empty() && fields.back().empty()) fields.pop_back();
    return fields;
}

bool parse_float(std::string_view field, float& out) {
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end;
}

bool looks_like_header(const std::vector<std::string_view>& fields) {
    if (fields.size() != 2) return false;
    for (auto f : fields) {
        for (char c : f)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        if (f.empty()) return false;
    }
    return true;
}

}  // namespace

WordEmbeddingTable load_word_vectors(const std::string& path, Vocabulary& vocab,
                                     std::size_t* dropped) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open word-vector file: " + path);

    std::string line;
    Eigen::MatrixXf matrix;
    std::vector<bool> filled(static_cast<std::size_t>(vocab.size()), false);
    int dim = -1;
    std::size_t line_no = 0;
    bool first_content_line = true;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (first_content_line && looks_like_header(fields)) {
            first_content_line = false;
            continue;
        }
        first_content_line = false;
        if (fields.size() < 2)
            throw DataError("word-vector line " + std::to_string(line_no) + ": too few fields");
        const int line_dim = static_cast<int>(fields.size()) - 1;
        if (dim < 0) {
            dim = line_dim;
            matrix.setZero(vocab.size(), dim);
        } else if (line_dim != dim) {
            throw DataError("word-vector line " + std::to_string(line_no) +
                            ": dimension " + std::to_string(line_dim) +
                            " conflicts with " + std::to_string(dim));
        }
        auto it = vocab.token_to_id.find(std::string(fields[0]));
        if (it == vocab.token_to_id.end()) continue;
        const int id = it->second;
        for (int j = 0; j < dim; ++j) {
            float value;
            if (!parse_float(fields[static_cast<std::size_t>(j) + 1], value))
                throw DataError("word-vector line " + std::to_string(line_no) +
                                ": bad float field");
            if (!std::isfinite(value))
                throw DataError("word-vector line " + std::to_string(line_no) +
                                ": non-finite value");
            matrix(id, j) = value;
        }
        filled[static_cast<std::size_t>(id)] = true;
    }
    if (dim < 0) throw DataError("word-vector file has no vector lines: " + path);

    std::vector<int> missing;
    for (int id = 0; id < vocab.size(); ++id)
        if (!filled[static_cast<std::size_t>(id)]) missing.push_back(id);
    if (dropped) *dropped = missing.size();
    if (missing.size() == filled.size())
        throw DataError("word-vector file shares no tokens with the vocabulary");

    if (!missing.empty()) {
        Eigen::MatrixXf compact(vocab.size() - static_cast<int>(missing.size()), dim);
        int out_row = 0;
        for (int id = 0; id < vocab.size(); ++id)
            if (filled[static_cast<std::size_t>(id)]) compact.row(out_row++) = matrix.row(id);
        vocab.remove_ids(missing);
        matrix = std::move(compact);
    }

    WordEmbeddingTable table;
    table.matrix = std::move(matrix);
    return table;
}

}  // namespace invdec
