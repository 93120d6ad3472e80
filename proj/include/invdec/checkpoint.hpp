#ifndef INVDEC_CHECKPOINT_HPP
#define INVDEC_CHECKPOINT_HPP

#include <string>

#include "invdec/embeddings.hpp"
#include "invdec/model.hpp"
#include "invdec/train.hpp"

namespace invdec {

// Self-contained trained model: configuration, parameters, the effective
// vocabulary and its fixed word vectors. Everything needed to encode text
// with --model alone.
struct Checkpoint {
    TrainingConfig config;
    Model<float> model;
    Vocabulary vocab;
    WordEmbeddingTable table;
};

// Text manifest (versioned; one "tensor <name> <dtype> <rows> <cols> <offset>"
// line per entry) followed by a raw little-endian payload. Saving the result
// of load_checkpoint reproduces the file byte for byte.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace invdec

#endif  // INVDEC_CHECKPOINT_HPP
