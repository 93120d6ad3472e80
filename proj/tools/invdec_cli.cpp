// Command-line surface: train, encode, eval, inspect.
#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "invdec/checkpoint.hpp"
#include "invdec/corpus.hpp"
#include "invdec/embeddings.hpp"
#include "invdec/errors.hpp"
#include "invdec/evaluate.hpp"
#include "invdec/represent.hpp"
#include "invdec/train.hpp"

namespace {

using namespace invdec;

struct TrainArgs {
    std::string corpus, vectors, out, trace;
    std::string decoder = "linear";
    TrainingConfig config;
};

struct EncodeArgs {
    std::string model, input, out = "-";
    std::string rep = "en";
    std::string pool;
    bool wr = false;
    int threads = 1;
};

struct EvalArgs {
    std::string task, dataset, model;
    std::string rep;
    std::string pool;
    bool wr = false;
    bool quiet = false;
    std::uint64_t seed = 1;
    double l2 = 1e-4;
    int probe_epochs = 500;
    int threads = 1;
};

struct InspectArgs {
    std::string model;
    bool quiet = false;
};

RepSource parse_rep(const std::string& rep) {
    if (rep == "en") return RepSource::kEncoder;
    if (rep == "de") return RepSource::kDecoderInverse;
    if (rep == "ensemble-avg") return RepSource::kEnsembleAvg;
    if (rep == "ensemble-concat") return RepSource::kEnsembleConcat;
    if (rep == "projected") return RepSource::kProjected;
    throw UsageError("unknown --rep value: " + rep);
}

Pooling parse_pool(const std::string& pool) {
    if (pool == "mean") return Pooling::kMean;
    if (pool == "concat3") return Pooling::kConcat3;
    throw UsageError("unknown --pool value: " + pool);
}

void echo_config(const TrainArgs& args, int d_v, std::size_t pairs, int vocab) {
    const TrainingConfig& c = args.config;
    std::fprintf(stderr,
                 "config: corpus=%s vectors=%s out=%s decoder=%s d=%d d_z=%d d_v=%d "
                 "batch_size=%d k=%d lr=%g beta=%g clip=%g epochs=%d "
                 "min_count=%" PRIu64 " seed=%" PRIu64
                 " hidden=%d threads=%d parseval=%d pairs=%zu vocab=%d\n",
                 args.corpus.c_str(), args.vectors.c_str(), args.out.c_str(),
                 args.decoder.c_str(), c.d, 2 * c.d, d_v, c.batch_size, c.k_negatives,
                 static_cast<double>(c.learning_rate), static_cast<double>(c.beta),
                 static_cast<double>(c.grad_clip_norm), c.epochs, c.min_count, c.seed,
                 c.coupling_hidden, c.threads, c.parseval_enabled ? 1 : 0, pairs, vocab);
}

int cmd_train(const TrainArgs& args) {
    TrainingConfig config = args.config;
    config.decoder_kind =
        args.decoder == "bijective" ? DecoderKind::kBijective : DecoderKind::kLinear;
    if (args.decoder != "linear" && args.decoder != "bijective")
        throw UsageError("--decoder must be linear or bijective");

    Vocabulary vocab = build_vocabulary(args.corpus, config.min_count);
    std::size_t dropped = 0;
    WordEmbeddingTable table = load_word_vectors(args.vectors, vocab, &dropped);
    if (dropped > 0)
        std::fprintf(stderr, "note: %zu vocabulary entries had no pretrained vector\n",
                     dropped);
    const NoiseTable noise = noise_distribution(vocab);
    const auto pairs = read_sentence_pairs(args.corpus, vocab);
    echo_config(args, table.dim(), pairs.size(), vocab.size());

    TrainResult result = train(config, pairs, table, noise);

    Checkpoint cp;
    cp.config = config;
    cp.model = std::move(result.model);
    cp.vocab = std::move(vocab);
    cp.table = std::move(table);
    save_checkpoint(args.out, cp);

    const std::string trace_path = args.trace.empty() ? args.out + ".trace.tsv" : args.trace;
    std::ofstream trace(trace_path);
    if (!trace) throw DataError("cannot write loss trace: " + trace_path);
    for (std::size_t i = 0; i < result.batch_losses.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu\t%.9g\n", i, result.batch_losses[i]);
        trace << buf;
    }
    std::fprintf(stderr, "wrote %s (%zu batches) and %s\n", args.out.c_str(),
                 result.batch_losses.size(), trace_path.c_str());
    return 0;
}

int cmd_encode(const EncodeArgs& args) {
    const RepSource source = parse_rep(args.rep);
    RepOptions options;
    options.source = source;
    options.remove_top = args.wr;
    options.threads = args.threads;
    if (source == RepSource::kProjected) {
        if (!args.pool.empty())
            std::fprintf(stderr, "warning: --rep projected ignores --pool\n");
        options.pooling = Pooling::kMean;
    } else {
        options.pooling = parse_pool(args.pool.empty() ? "mean" : args.pool);
    }
    std::fprintf(stderr,
                 "config: model=%s input=%s rep=%s pool=%s wr=%d threads=%d out=%s\n",
                 args.model.c_str(), args.input.c_str(), args.rep.c_str(),
                 source == RepSource::kProjected
                     ? "-"
                     : (options.pooling == Pooling::kMean ? "mean" : "concat3"),
                 args.wr ? 1 : 0, args.threads, args.out.c_str());

    const Checkpoint cp = load_checkpoint(args.model);
    const InferenceModel im = make_inference_model(cp);

    std::ifstream in(args.input);
    if (!in) throw DataError("cannot open input: " + args.input);
    std::vector<std::vector<int>> sentences;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<int> ids = tokenize_line(line, im.vocab);
        if (ids.empty())
            throw DataError(args.input + ":" + std::to_string(line_no) +
                            ": sentence is empty after vocabulary filtering");
        sentences.push_back(std::move(ids));
    }
    if (sentences.empty()) throw DataError(args.input + ": no input sentences");

    const Eigen::MatrixXd reps = represent_dataset(im, sentences, options);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (args.out != "-") {
        file.open(args.out);
        if (!file) throw DataError("cannot write output: " + args.out);
        out = &file;
    }
    char buf[64];
    for (Eigen::Index i = 0; i < reps.rows(); ++i) {
        *out << i;
        for (Eigen::Index j = 0; j < reps.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.8g", reps(i, j));
            *out << (j == 0 ? '\t' : ' ') << buf;
        }
        *out << '\n';
    }
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    if (args.task != "similarity" && args.task != "classification")
        throw UsageError("--task must be similarity or classification");
    const bool similarity = args.task == "similarity";

    RepOptions options;
    const std::string rep =
        args.rep.empty() ? (similarity ? "ensemble-avg" : "ensemble-concat") : args.rep;
    const std::string pool =
        args.pool.empty() ? (similarity ? "mean" : "concat3") : args.pool;
    options.source = parse_rep(rep);
    options.pooling = parse_pool(pool);
    options.remove_top = args.wr;
    options.threads = args.threads;
    std::fprintf(stderr,
                 "config: task=%s dataset=%s model=%s rep=%s pool=%s wr=%d seed=%" PRIu64
                 " l2=%g probe_epochs=%d threads=%d\n",
                 args.task.c_str(), args.dataset.c_str(), args.model.c_str(),
                 rep.c_str(), pool.c_str(), args.wr ? 1 : 0, args.seed, args.l2,
                 args.probe_epochs, args.threads);

    const Checkpoint cp = load_checkpoint(args.model);
    const InferenceModel im = make_inference_model(cp);

    char buf[64];
    if (similarity) {
        const SimilarityDataset ds = load_similarity_tsv(args.dataset);
        const double score = eval_similarity(im, ds, options);
        std::snprintf(buf, sizeof(buf), "%.6f", score);
        if (args.quiet)
            std::printf("pearson\t%s\n", buf);
        else
            std::printf("similarity: %zu pairs, pearson = %s\n", ds.size(), buf);
    } else {
        const LabeledDataset ds = load_labeled_tsv(args.dataset);
        ProbeConfig probe;
        probe.l2 = args.l2;
        probe.epochs = args.probe_epochs;
        const double accuracy = eval_classification(im, ds, options, args.seed, probe);
        std::snprintf(buf, sizeof(buf), "%.6f", accuracy);
        if (args.quiet)
            std::printf("accuracy\t%s\n", buf);
        else
            std::printf("classification: %zu items, %d classes, accuracy = %s\n",
                        ds.labels.size(), ds.num_classes, buf);
    }
    return 0;
}

int cmd_inspect(const InspectArgs& args) {
    std::fprintf(stderr, "config: model=%s\n", args.model.c_str());
    const Checkpoint cp = load_checkpoint(args.model);
    InferenceModel im = make_inference_model(cp);
    const Eigen::MatrixXd& w = im.model.decoder.linear.w;

    const double ortho_error = orthonormality_error<double>(w);
    const Eigen::MatrixXd gram =
        w.rows() <= w.cols() ? Eigen::MatrixXd(w * w.transpose())
                             : Eigen::MatrixXd(w.transpose() * w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    const double eig_min = solver.eigenvalues().minCoeff();
    const double eig_max = solver.eigenvalues().maxCoeff();

    Rng rng(12345);
    double round_trip = 0.0;
    for (int i = 0; i < 100; ++i) {
        Eigen::MatrixXd x(im.model.d_v(), 1);
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = rng.uniform(-1.0, 1.0);
        const Eigen::MatrixXd back =
            decoder_forward(im.model.decoder, decoder_inverse(im.model.decoder, x));
        round_trip = std::max(round_trip, (back - x).cwiseAbs().maxCoeff());
    }

    std::size_t encoder_params = 0, decoder_params = 0;
    {
        Model<float> model = cp.model;
        for (auto& p : collect_params(model)) {
            if (p.name.rfind("enc.", 0) == 0)
                encoder_params += static_cast<std::size_t>(p.tensor->size());
            else
                decoder_params += static_cast<std::size_t>(p.tensor->size());
        }
    }

    const char* kind =
        cp.config.decoder_kind == DecoderKind::kLinear ? "linear" : "bijective";
    if (args.quiet) {
        std::printf("%s\t%d\t%d\t%.9g\t%.9g\t%.9g\t%.9g\t%zu\t%zu\n", kind,
                    im.model.d(), im.model.d_v(), ortho_error, eig_min, eig_max,
                    round_trip, encoder_params, decoder_params);
        return 0;
    }
    std::printf("decoder:              %s\n", kind);
    std::printf("dims:                 d=%d d_z=%d d_v=%d vocab=%d\n", im.model.d(),
                im.model.d_z(), im.model.d_v(), im.vocab.size());
    std::printf("parameters:           encoder=%zu decoder=%zu\n", encoder_params,
                decoder_params);
    std::printf("orthonormality error: %.9g\n", ortho_error);
    std::printf("W W^T eigenvalues:    min=%.9g max=%.9g\n", eig_min, eig_max);
    std::printf("round-trip max error: %.9g (100 random x)\n", round_trip);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sentence encoders with invertible decoders"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
    train_cmd->add_option("--corpus", train_args.corpus)->required();
    train_cmd->add_option("--vectors", train_args.vectors)->required();
    train_cmd->add_option("--decoder", train_args.decoder)->required();
    train_cmd->add_option("--out", train_args.out)->required();
    train_cmd->add_option("--trace", train_args.trace);
    train_cmd->add_option("--batch-size", train_args.config.batch_size);
    train_cmd->add_option("--d", train_args.config.d);
    train_cmd->add_option("--k", train_args.config.k_negatives);
    train_cmd->add_option("--lr", train_args.config.learning_rate);
    train_cmd->add_option("--beta", train_args.config.beta);
    train_cmd->add_option("--clip", train_args.config.grad_clip_norm);
    train_cmd->add_option("--epochs", train_args.config.epochs);
    train_cmd->add_option("--min-count", train_args.config.min_count);
    train_cmd->add_option("--seed", train_args.config.seed);
    train_cmd->add_option("--hidden", train_args.config.coupling_hidden);
    train_cmd->add_option("--threads", train_args.config.threads);
    train_cmd->add_flag_callback(
        "--no-parseval", [&train_args] { train_args.config.parseval_enabled = false; });

    EncodeArgs encode_args;
    CLI::App* encode_cmd = app.add_subcommand("encode", "Encode sentences to vectors");
    encode_cmd->add_option("--model", encode_args.model)->required();
    encode_cmd->add_option("--input", encode_args.input)->required();
    encode_cmd->add_option("--rep", encode_args.rep)->required();
    encode_cmd->add_option("--pool", encode_args.pool);
    encode_cmd->add_flag("--wr", encode_args.wr);
    encode_cmd->add_option("--out", encode_args.out);
    encode_cmd->add_option("--threads", encode_args.threads);

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score a model on a dataset");
    eval_cmd->add_option("--task", eval_args.task)->required();
    eval_cmd->add_option("--dataset", eval_args.dataset)->required();
    eval_cmd->add_option("--model", eval_args.model)->required();
    eval_cmd->add_option("--rep", eval_args.rep);
    eval_cmd->add_option("--pool", eval_args.pool);
    eval_cmd->add_flag("--wr", eval_args.wr);
    eval_cmd->add_flag("--quiet", eval_args.quiet);
    eval_cmd->add_option("--seed", eval_args.seed);
    eval_cmd->add_option("--l2", eval_args.l2);
    eval_cmd->add_option("--probe-epochs", eval_args.probe_epochs);
    eval_cmd->add_option("--threads", eval_args.threads);

    InspectArgs inspect_args;
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "Report model diagnostics");
    inspect_cmd->add_option("--model", inspect_args.model)->required();
    inspect_cmd->add_flag("--quiet", inspect_args.quiet);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (encode_cmd->parsed()) return cmd_encode(encode_args);
        if (eval_cmd->parsed()) return cmd_eval(eval_args);
        if (inspect_cmd->parsed()) return cmd_inspect(inspect_args);
        return 1;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
