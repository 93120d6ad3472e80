#include "invdec/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace invdec {

namespace {

constexpr const char* kMagic = "invdec-checkpoint v1";

std::string format_float(float v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

struct TensorEntry {
    std::string name;
    std::string dtype;  // f32 | u64 | u8
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::uint64_t offset = 0;
};

const char* kind_name(DecoderKind kind) {
    return kind == DecoderKind::kLinear ? "linear" : "bijective";
}

DecoderKind parse_kind(const std::string& s) {
    if (s == "linear") return DecoderKind::kLinear;
    if (s == "bijective") return DecoderKind::kBijective;
    throw DataError("checkpoint: unknown decoder kind '" + s + "'");
}

void append_bytes(std::string& payload, const void* data, std::size_t n) {
    payload.append(static_cast<const char*>(data), n);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    const TrainingConfig& c = checkpoint.config;
    Checkpoint& mut = const_cast<Checkpoint&>(checkpoint);

    std::string payload;
    std::vector<TensorEntry> entries;
    auto add_f32 = [&](const std::string& name, const Mat<float>& m) {
        entries.push_back({name, "f32", m.rows(), m.cols(), payload.size()});
        // Eigen default storage is column-major; serialize row by row so the
        // layout is independent of storage order.
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index col = 0; col < m.cols(); ++col) {
                const float v = m(r, col);
                append_bytes(payload, &v, sizeof(v));
            }
    };

    for (auto& p : collect_params(mut.model)) add_f32(p.name, *p.tensor);
    add_f32("emb.matrix", checkpoint.table.matrix);

    {
        std::string blob;
        for (const auto& tok : checkpoint.vocab.tokens) {
            blob += tok;
            blob += '\n';
        }
        entries.push_back({"vocab.tokens", "u8",
                           static_cast<std::int64_t>(blob.size()), 1, payload.size()});
        payload += blob;
    }
    {
        entries.push_back({"vocab.counts", "u64",
                           static_cast<std::int64_t>(checkpoint.vocab.counts.size()), 1,
                           payload.size()});
        for (std::uint64_t count : checkpoint.vocab.counts)
            append_bytes(payload, &count, sizeof(count));
    }

    std::ostringstream header;
    header << kMagic << '\n';
    header << "seed " << c.seed << '\n';
    header << "decoder " << kind_name(c.decoder_kind) << '\n';
    header << "batch_size " << c.batch_size << '\n';
    header << "d " << c.d << '\n';
    header << "d_v " << checkpoint.table.dim() << '\n';
    header << "k_negatives " << c.k_negatives << '\n';
    header << "epochs " << c.epochs << '\n';
    header << "coupling_hidden " << c.coupling_hidden << '\n';
    header << "learning_rate " << format_float(c.learning_rate) << '\n';
    header << "beta " << format_float(c.beta) << '\n';
    header << "grad_clip_norm " << format_float(c.grad_clip_norm) << '\n';
    header << "min_count " << c.min_count << '\n';
    header << "parseval " << (c.parseval_enabled ? 1 : 0) << '\n';
    header << "threads " << c.threads << '\n';
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016" PRIx64, checkpoint.vocab.hash());
    header << "vocab_hash " << hash_buf << '\n';
    header << "tensors " << entries.size() << '\n';
    for (const auto& e : entries)
        header << "tensor " << e.name << ' ' << e.dtype << ' ' << e.rows << ' '
               << e.cols << ' ' << e.offset << '\n';
    header << "payload " << payload.size() << '\n';

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);

    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw DataError("checkpoint: bad magic/version in " + path);

    Checkpoint cp;
    std::vector<TensorEntry> entries;
    std::size_t tensor_count = 0;
    std::uint64_t payload_size = 0;
    std::string stored_hash;
    int d_v = 0;

    auto next_kv = [&](std::string& key, std::string& rest) {
        if (!std::getline(in, line)) throw DataError("checkpoint: truncated manifest");
        const auto pos = line.find(' ');
        if (pos == std::string::npos) throw DataError("checkpoint: malformed manifest line");
        key = line.substr(0, pos);
        rest = line.substr(pos + 1);
    };

    bool saw_payload = false;
    while (!saw_payload) {
        std::string key, rest;
        next_kv(key, rest);
        std::istringstream v(rest);
        if (key == "seed") v >> cp.config.seed;
        else if (key == "decoder") cp.config.decoder_kind = parse_kind(rest);
        else if (key == "batch_size") v >> cp.config.batch_size;
        else if (key == "d") v >> cp.config.d;
        else if (key == "d_v") v >> d_v;
        else if (key == "k_negatives") v >> cp.config.k_negatives;
        else if (key == "epochs") v >> cp.config.epochs;
        else if (key == "coupling_hidden") v >> cp.config.coupling_hidden;
        else if (key == "learning_rate") v >> cp.config.learning_rate;
        else if (key == "beta") v >> cp.config.beta;
        else if (key == "grad_clip_norm") v >> cp.config.grad_clip_norm;
        else if (key == "min_count") v >> cp.config.min_count;
        else if (key == "parseval") { int p = 1; v >> p; cp.config.parseval_enabled = p != 0; }
        else if (key == "threads") v >> cp.config.threads;
        else if (key == "vocab_hash") stored_hash = rest;
        else if (key == "tensors") v >> tensor_count;
        else if (key == "tensor") {
            TensorEntry e;
            std::istringstream t(rest);
            t >> e.name >> e.dtype >> e.rows >> e.cols >> e.offset;
            if (!t) throw DataError("checkpoint: malformed tensor line");
            entries.push_back(e);
        } else if (key == "payload") {
            v >> payload_size;
            saw_payload = true;
        } else {
            throw DataError("checkpoint: unknown manifest key '" + key + "'");
        }
        if (v.fail()) throw DataError("checkpoint: malformed value for key '" + key + "'");
    }
    if (entries.size() != tensor_count)
        throw DataError("checkpoint: tensor count mismatch");

    std::string payload(payload_size, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload_size));
    if (static_cast<std::uint64_t>(in.gcount()) != payload_size)
        throw DataError("checkpoint: truncated payload");

    auto read_f32 = [&](const TensorEntry& e) {
        Mat<float> m(e.rows, e.cols);
        if (e.offset + static_cast<std::uint64_t>(e.rows * e.cols) * 4 > payload_size)
            throw DataError("checkpoint: tensor '" + e.name + "' out of payload bounds");
        const char* src = payload.data() + e.offset;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index col = 0; col < m.cols(); ++col) {
                float value;
                std::memcpy(&value, src, sizeof(value));
                src += sizeof(value);
                m(r, col) = value;
            }
        return m;
    };

    ModelDims dims;
    dims.d = cp.config.d;
    dims.d_v = d_v;
    dims.coupling_hidden = cp.config.coupling_hidden;
    cp.model = init_model<float>(dims, cp.config.decoder_kind, cp.config.beta, 0);

    std::size_t next = 0;
    for (auto& p : collect_params(cp.model)) {
        if (next >= entries.size()) throw DataError("checkpoint: missing tensor " + p.name);
        const TensorEntry& e = entries[next++];
        if (e.name != p.name)
            throw DataError("checkpoint: expected tensor '" + p.name + "', found '" +
                            e.name + "'");
        if (e.rows != p.tensor->rows() || e.cols != p.tensor->cols())
            throw DataError("checkpoint: shape mismatch for tensor '" + e.name + "'");
        *p.tensor = read_f32(e);
    }

    if (next >= entries.size() || entries[next].name != "emb.matrix")
        throw DataError("checkpoint: missing emb.matrix tensor");
    cp.table.matrix = read_f32(entries[next++]);

    if (next >= entries.size() || entries[next].name != "vocab.tokens")
        throw DataError("checkpoint: missing vocab.tokens");
    {
        const TensorEntry& e = entries[next++];
        if (e.offset + static_cast<std::uint64_t>(e.rows) > payload_size)
            throw DataError("checkpoint: vocab.tokens out of payload bounds");
        std::string blob = payload.substr(e.offset, static_cast<std::size_t>(e.rows));
        std::istringstream toks(blob);
        std::string tok;
        while (std::getline(toks, tok)) {
            cp.vocab.token_to_id[tok] = static_cast<int>(cp.vocab.tokens.size());
            cp.vocab.tokens.push_back(tok);
        }
    }

    if (next >= entries.size() || entries[next].name != "vocab.counts")
        throw DataError("checkpoint: missing vocab.counts");
    {
        const TensorEntry& e = entries[next++];
        if (e.offset + static_cast<std::uint64_t>(e.rows) * 8 > payload_size)
            throw DataError("checkpoint: vocab.counts out of payload bounds");
        cp.vocab.counts.resize(static_cast<std::size_t>(e.rows));
        const char* src = payload.data() + e.offset;
        for (auto& count : cp.vocab.counts) {
            std::memcpy(&count, src, sizeof(count));
            src += sizeof(count);
        }
    }
    if (cp.vocab.size() != cp.table.size() ||
        cp.vocab.counts.size() != cp.vocab.tokens.size())
        throw DataError("checkpoint: vocabulary/table size mismatch");

    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016" PRIx64, cp.vocab.hash());
    if (stored_hash != hash_buf)
        throw DataError("checkpoint: vocabulary hash mismatch (corrupt file?)");

    return cp;
}

}  // namespace invdec
