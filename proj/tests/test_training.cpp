#include <doctest.h>

#include <cmath>
#include <numeric>

#include "invdec/adam.hpp"
#include "invdec/checkpoint.hpp"
#include "invdec/train.hpp"
#include "support.hpp"

using namespace invdec;
using testsupport::TempDir;

namespace {

struct TrainFixture {
    Vocabulary vocab;
    WordEmbeddingTable table;
    NoiseTable noise;
    std::vector<SentencePair> pairs;
};

TrainFixture load_fixture(const TempDir& dir, int n_documents = 40,
                          int sentences_per_doc = 6, int d_v = 12) {
    const auto corpus = testsupport::make_topic_corpus(dir, 3, 15, n_documents,
                                                       sentences_per_doc, 6, d_v, 77);
    TrainFixture f;
    f.vocab = build_vocabulary(corpus.corpus_path, 1);
    f.table = load_word_vectors(corpus.vectors_path, f.vocab);
    f.noise = noise_distribution(f.vocab);
    f.pairs = read_sentence_pairs(corpus.corpus_path, f.vocab);
    return f;
}

template <typename Real>
bool models_identical(Model<Real>& a, Model<Real>& b) {
    auto pa = collect_params(a);
    auto pb = collect_params(b);
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (*pa[i].tensor != *pb[i].tensor) return false;
    return true;
}

}  // namespace

TEST_CASE("clip_gradients rescales only above the threshold") {
    Model<float> model = init_model<float>({2, 2, 0}, DecoderKind::kLinear, 0.01f, 1);
    Model<float> grads = zero_clone(model);
    grads.decoder.linear.w(0, 0) = 3.0f;
    grads.decoder.linear.w(0, 1) = 4.0f;

    SUBCASE("norm below max_norm is untouched") {
        Model<float> copy = grads;
        clip_gradients(copy, 10.0f);
        CHECK(models_identical(copy, grads));
    }
    SUBCASE("norm above max_norm is rescaled to it") {
        clip_gradients(grads, 1.0f);
        CHECK(grads.decoder.linear.w(0, 0) == doctest::Approx(0.6f));
        CHECK(grads.decoder.linear.w(0, 1) == doctest::Approx(0.8f));
        CHECK(global_grad_norm(grads) == doctest::Approx(1.0f));
    }
    SUBCASE("zero gradients stay zero") {
        Model<float> zeros = zero_clone(model);
        clip_gradients(zeros, 1.0f);
        CHECK(global_grad_norm(zeros) == 0.0f);
    }
}

TEST_CASE("adam_step") {
    Model<double> model = init_model<double>({2, 2, 0}, DecoderKind::kLinear, 0.01, 3);
    AdamState<double> state = init_adam(model);

    SUBCASE("zero gradient leaves parameters unchanged") {
        Model<double> before = model;
        Model<double> grads = zero_clone(model);
        adam_step(model, grads, state, 0.001);
        CHECK(models_identical(model, before));
        CHECK(state.step == 1);
    }
    SUBCASE("first-step magnitude is about lr for any nonzero gradient") {
        for (double g : {1e-4, 0.5, 42.0}) {
            Model<double> fresh =
                init_model<double>({2, 2, 0}, DecoderKind::kLinear, 0.01, 3);
            AdamState<double> s = init_adam(fresh);
            Model<double> grads = zero_clone(fresh);
            grads.decoder.linear.b(0, 0) = g;
            const double before = fresh.decoder.linear.b(0, 0);
            adam_step(fresh, grads, s, 0.001);
            CHECK(std::abs(fresh.decoder.linear.b(0, 0) - before) ==
                  doctest::Approx(0.001).epsilon(1e-4));
        }
    }
    SUBCASE("three-step scalar trajectory matches a hand-rolled oracle") {
        Model<double> grads = zero_clone(model);
        grads.decoder.linear.b(1, 0) = 1.0;
        const double start = model.decoder.linear.b(1, 0);
        // Independent scalar Adam with the same constants.
        double m = 0.0, v = 0.0, p = start;
        const double lr = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
        for (int t = 1; t <= 3; ++t) {
            adam_step(model, grads, state, lr);
            m = b1 * m + (1 - b1) * 1.0;
            v = b2 * v + (1 - b2) * 1.0;
            const double mh = m / (1.0 - std::pow(b1, t));
            const double vh = v / (1.0 - std::pow(b2, t));
            p -= lr * mh / (std::sqrt(vh) + eps);
            CHECK(model.decoder.linear.b(1, 0) == doctest::Approx(p).epsilon(1e-12));
        }
    }
}

TEST_CASE("batch gradient: parallel path matches the serial reference") {
    TempDir dir("batch");
    const TrainFixture f = load_fixture(dir, 10);
    REQUIRE(f.pairs.size() >= 16);
    std::span<const SentencePair> batch(f.pairs.data(), 16);

    Model<double> model =
        init_model<double>({4, 12, 0}, DecoderKind::kBijective, 0.01, 5);
    const Mat<double> embeddings = f.table.matrix.cast<double>();

    Model<double> serial = zero_clone(model);
    const double loss_serial = accumulate_batch_serial(model, embeddings, batch,
                                                       f.noise, 3, 42, 100, serial);
    for (int threads : {2, 3}) {
        Model<double> parallel = zero_clone(model);
        const double loss_parallel = accumulate_batch_parallel(
            model, embeddings, batch, f.noise, 3, 42, 100, parallel, threads);
        CHECK(loss_parallel == doctest::Approx(loss_serial).epsilon(1e-12));
        auto ps = collect_params(serial);
        auto pp = collect_params(parallel);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            CAPTURE(ps[i].name);
            CHECK((*ps[i].tensor - *pp[i].tensor).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("train: loss decreases on a topical corpus") {
    TempDir dir("train");
    const TrainFixture f = load_fixture(dir, 60, 8);

    TrainingConfig config;
    config.d = 8;
    config.batch_size = 32;
    config.k_negatives = 3;
    config.learning_rate = 2e-3f;
    config.epochs = 2;
    config.seed = 9;
    const TrainResult result = train(config, f.pairs, f.table, f.noise);
    REQUIRE(result.batch_losses.size() >= 10);

    const double first = result.batch_losses.front();
    const auto& losses = result.batch_losses;
    const double last5 = std::accumulate(losses.end() - 5, losses.end(), 0.0) / 5.0;
    CHECK(last5 < first);
    for (double loss : losses) CHECK(loss >= 0.0);
}

TEST_CASE("train: identical seeds give bit-identical checkpoints and traces") {
    TempDir dir("det");
    const TrainFixture f = load_fixture(dir, 20);

    TrainingConfig config;
    config.d = 6;
    config.batch_size = 16;
    config.epochs = 1;
    config.seed = 4;
    config.decoder_kind = DecoderKind::kBijective;

    TrainResult a = train(config, f.pairs, f.table, f.noise);
    TrainResult b = train(config, f.pairs, f.table, f.noise);
    CHECK(a.batch_losses == b.batch_losses);
    CHECK(models_identical(a.model, b.model));

    Checkpoint cp_a{config, a.model, f.vocab, f.table};
    Checkpoint cp_b{config, b.model, f.vocab, f.table};
    save_checkpoint(dir.file("a.ckpt"), cp_a);
    save_checkpoint(dir.file("b.ckpt"), cp_b);
    CHECK(testsupport::read_file(dir.file("a.ckpt")) ==
          testsupport::read_file(dir.file("b.ckpt")));
}

TEST_CASE("train: zero epochs returns the initialization") {
    TempDir dir("init");
    const TrainFixture f = load_fixture(dir, 10);
    TrainingConfig config;
    config.d = 6;
    config.epochs = 0;
    config.seed = 21;
    TrainResult result = train(config, f.pairs, f.table, f.noise);
    CHECK(result.batch_losses.empty());
    Model<float> reference = init_model<float>(
        {config.d, f.table.dim(), 0}, config.decoder_kind, config.beta, config.seed);
    CHECK(models_identical(result.model, reference));
}

TEST_CASE("train: empty corpus is an error") {
    TrainingConfig config;
    WordEmbeddingTable table;
    table.matrix.setZero(3, 4);
    NoiseTable noise;
    CHECK_THROWS_AS(train(config, {}, table, noise), DataError);
}

TEST_CASE("train: exploding update reports a numerical failure") {
    TempDir dir("nan");
    const TrainFixture f = load_fixture(dir, 10);
    TrainingConfig config;
    config.d = 4;
    config.batch_size = 8;
    config.learning_rate = 1e30f;
    config.grad_clip_norm = 1e30f;
    config.epochs = 50;
    CHECK_THROWS_AS(train(config, f.pairs, f.table, f.noise), NumericError);
}

TEST_CASE("parseval retraction keeps W closer to orthonormal than no retraction") {
    TempDir dir("ortho");
    const TrainFixture f = load_fixture(dir, 50, 8);

    TrainingConfig config;
    config.d = 8;
    config.batch_size = 16;
    config.learning_rate = 3e-3f;
    config.epochs = 3;
    config.seed = 31;

    TrainingConfig off = config;
    off.parseval_enabled = false;

    const TrainResult with = train(config, f.pairs, f.table, f.noise);
    const TrainResult without = train(off, f.pairs, f.table, f.noise);
    const float err_with = orthonormality_error<float>(with.model.decoder.linear.w);
    const float err_without =
        orthonormality_error<float>(without.model.decoder.linear.w);
    CAPTURE(err_with);
    CAPTURE(err_without);
    CHECK(err_with < err_without);
}

TEST_CASE("trained bijective model keeps |s(x1)| small") {
    TempDir dir("srange");
    const TrainFixture f = load_fixture(dir, 40, 8);
    TrainingConfig config;
    config.d = 6;
    config.batch_size = 16;
    config.decoder_kind = DecoderKind::kBijective;
    config.epochs = 2;
    const TrainResult result = train(config, f.pairs, f.table, f.noise);

    double max_s = 0.0;
    for (const auto& layer : result.model.decoder.couplings) {
        for (Eigen::Index row = 0; row < f.table.matrix.rows(); ++row) {
            Mat<float> x = f.table.matrix.row(row).transpose();
            Mat<float> pass = x.middleRows(layer.pass_begin(), layer.pass_size());
            const Mat<float> s = coupling_net_apply(layer.s, pass);
            max_s = std::max(max_s, static_cast<double>(s.cwiseAbs().maxCoeff()));
        }
    }
    CHECK(max_s < 20.0);
}

TEST_CASE("checkpoint round trip") {
    TempDir dir("ckpt");
    const TrainFixture f = load_fixture(dir, 10);
    TrainingConfig config;
    config.d = 4;
    config.batch_size = 8;
    config.decoder_kind = DecoderKind::kBijective;
    config.seed = 17;
    TrainResult result = train(config, f.pairs, f.table, f.noise);

    Checkpoint cp{config, result.model, f.vocab, f.table};
    const std::string path_a = dir.file("model.ckpt");
    save_checkpoint(path_a, cp);

    Checkpoint loaded = load_checkpoint(path_a);
    CHECK(models_identical(loaded.model, cp.model));
    CHECK(loaded.vocab.tokens == cp.vocab.tokens);
    CHECK(loaded.vocab.counts == cp.vocab.counts);
    CHECK(loaded.table.matrix == cp.table.matrix);
    CHECK(loaded.config.seed == config.seed);
    CHECK(loaded.config.learning_rate == config.learning_rate);

    SUBCASE("save -> load -> save is byte-identical") {
        const std::string path_b = dir.file("model2.ckpt");
        save_checkpoint(path_b, loaded);
        CHECK(testsupport::read_file(path_a) == testsupport::read_file(path_b));
    }
    SUBCASE("corrupted magic is rejected") {
        std::string raw = testsupport::read_file(path_a);
        raw[0] = 'X';
        testsupport::write_file(dir.file("bad.ckpt"), raw);
        CHECK_THROWS_AS(load_checkpoint(dir.file("bad.ckpt")), DataError);
    }
    SUBCASE("truncated payload is rejected") {
        std::string raw = testsupport::read_file(path_a);
        raw.resize(raw.size() - 64);
        testsupport::write_file(dir.file("short.ckpt"), raw);
        CHECK_THROWS_AS(load_checkpoint(dir.file("short.ckpt")), DataError);
    }
    SUBCASE("missing file is rejected") {
        CHECK_THROWS_AS(load_checkpoint(dir.file("nope.ckpt")), DataError);
    }
}
