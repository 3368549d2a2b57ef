#include "tac/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "tac/error.hpp"
#include "tac/parallel.hpp"

namespace tac {
namespace {

constexpr std::uint32_t checkpoint_version = 1;
constexpr std::size_t checkpoint_header_size = 48;
constexpr std::size_t predict_chunk = 4096;

// The first listed neighbor must be (one of) the most similar rows in the
// modality the graph claims to index. Catches swapped graphs cheaply.
void check_graph_modality(const NeighborGraph& g, const EmbeddingMatrix& x, const char* name) {
    if (g.rows() != x.rows()) {
        throw DimensionError(std::string(name) + " graph has " + std::to_string(g.rows()) + " rows, expected " +
                             std::to_string(x.rows()));
    }
    const std::size_t probes = std::min<std::size_t>(4, x.rows());
    for (std::size_t i = 0; i < probes; ++i) {
        const auto xi = x.row(i);
        const double ni = l2_norm(xi);
        double best = -2.0;
        for (std::size_t j = 0; j < x.rows(); ++j) {
            if (j == i) continue;
            best = std::max(best, dot(xi, x.row(j)) / (ni * l2_norm(x.row(j))));
        }
        const auto first = g.row(i)[0];
        const double got = dot(xi, x.row(first)) / (ni * l2_norm(x.row(first)));
        if (got < best - 1e-5) {
            throw ParameterError(std::string(name) + " graph does not index the " + name + " embeddings");
        }
    }
}

void write_u32(char* at, std::uint32_t v) { std::memcpy(at, &v, 4); }

std::uint32_t read_u32(const char* at) {
    std::uint32_t v = 0;
    std::memcpy(&v, at, 4);
    return v;
}

void write_tensor(std::ofstream& out, std::span<const double> t) {
    std::vector<float> buf(t.begin(), t.end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
}

void read_tensor(std::ifstream& in, std::span<double> t, const std::filesystem::path& path) {
    std::vector<float> buf(t.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (static_cast<std::size_t>(in.gcount()) != buf.size() * 4) {
        throw FormatError(path.string() + ": truncated checkpoint");
    }
    for (std::size_t i = 0; i < buf.size(); ++i) {
        if (!std::isfinite(buf[i])) throw DataError(path.string() + ": non-finite parameter");
        t[i] = buf[i];
    }
}

}  // namespace

DistillConfig DistillConfig::large_k() {
    DistillConfig cfg;
    cfg.loss.tau_hat = 5.0;
    cfg.batch_size = 8192;
    cfg.epochs = 100;
    return cfg;
}

void validate_config(const DistillConfig& cfg) {
    if (!(cfg.loss.tau_hat > 0.0)) throw ParameterError("tau_hat must be > 0");
    if (!(cfg.loss.alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
    if (cfg.batch_size < 2) throw ParameterError("batch_size must be >= 2");
    if (!(cfg.adam.lr >= 0.0)) throw ParameterError("lr must be > 0");
    if (cfg.epochs == 0) throw ParameterError("epochs must be >= 1");
    if (cfg.n_neighbors == 0) throw ParameterError("n_neighbors must be >= 1");
    if (!(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0 && cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0)) {
        throw ParameterError("adam betas must lie in [0, 1)");
    }
    if (!(cfg.adam.eps > 0.0)) throw ParameterError("adam eps must be > 0");
}

HeadPair init_heads(std::size_t image_dim, std::size_t text_dim, std::size_t clusters,
                    const DistillConfig& cfg) {
    const std::size_t hidden = cfg.hidden_dim == 0 ? image_dim : cfg.hidden_dim;
    const RngState root = make_rng(cfg.seed, streams::weight_init);
    RngState rf = rng_split(root, 0);
    RngState rg = rng_split(root, 1);
    return HeadPair{init_head(image_dim, hidden, clusters, rf, cfg.activation),
                    init_head(text_dim, hidden, clusters, rg, cfg.activation)};
}

LossBreakdown objective(const HeadPair& heads, const BatchInputs& in, const LossConfig& cfg) {
    const AssignmentBatch batch{head_forward(heads.f, in.v), head_forward(heads.f, in.v_nbr),
                                head_forward(heads.g, in.t), head_forward(heads.g, in.t_nbr)};
    return loss_total(batch, cfg);
}

LossBreakdown objective_with_grads(const HeadPair& heads, const BatchInputs& in, const LossConfig& cfg,
                                   HeadPair& grad) {
    const auto av = head_forward_cached(heads.f, in.v);
    const auto avn = head_forward_cached(heads.f, in.v_nbr);
    const auto at = head_forward_cached(heads.g, in.t);
    const auto atn = head_forward_cached(heads.g, in.t_nbr);
    const AssignmentBatch batch{av.probs, avn.probs, at.probs, atn.probs};
    AssignmentBatch d;
    const LossBreakdown out = loss_with_gradients(batch, cfg, d);

    grad.f = zero_head(heads.f.input_dim(), heads.f.hidden_dim(), heads.f.clusters(), heads.f.activation);
    grad.g = zero_head(heads.g.input_dim(), heads.g.hidden_dim(), heads.g.clusters(), heads.g.activation);
    head_backward(heads.f, in.v, av, d.p, grad.f);
    head_backward(heads.f, in.v_nbr, avn, d.p_nbr, grad.f);
    head_backward(heads.g, in.t, at, d.q, grad.g);
    head_backward(heads.g, in.t_nbr, atn, d.q_nbr, grad.g);
    return out;
}

TrainResult train(const EmbeddingMatrix& images, const TextCounterparts& counterparts,
                  const NeighborGraph& image_graph, const NeighborGraph& text_graph,
                  std::size_t clusters, const DistillConfig& cfg) {
    validate_config(cfg);
    const EmbeddingMatrix& text = counterparts.matrix;
    const std::size_t n = images.rows();
    if (text.rows() != n) throw DimensionError("train: images and counterparts differ in row count");
    if (clusters < 2) throw ParameterError("train: need at least 2 clusters");
    check_graph_modality(image_graph, images, "image");
    check_graph_modality(text_graph, text, "text");

    TrainResult result;
    result.heads = init_heads(images.dim(), text.dim(), clusters, cfg);
    AdamState state_f(result.heads.f);
    AdamState state_g(result.heads.g);
    RngState shuffle = make_rng(cfg.seed, streams::batch_shuffle);
    RngState sampler = make_rng(cfg.seed, streams::neighbor_sample);

    const std::size_t batch = std::min(cfg.batch_size, n);
    std::vector<std::uint32_t> order(n);
    std::vector<std::uint32_t> nbr_v, nbr_t;
    HeadPair grad;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
        rng_shuffle(shuffle, order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            const std::span<const std::uint32_t> idx(order.data() + start, stop - start);
            nbr_v.resize(idx.size());
            nbr_t.resize(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) {
                nbr_v[r] = sample_neighbor(image_graph, idx[r], sampler);
                nbr_t[r] = sample_neighbor(text_graph, idx[r], sampler);
            }
            const BatchInputs in{gather_rows(images, idx), gather_rows(images, nbr_v), gather_rows(text, idx),
                                 gather_rows(text, nbr_t)};
            const LossBreakdown loss = objective_with_grads(result.heads, in, cfg.loss, grad);
            ++result.steps;
            if (!std::isfinite(loss.total)) {
                throw TrainingDiverged("non-finite loss at step " + std::to_string(result.steps), result.steps);
            }
            result.history.push_back(loss);
            adam_step(result.heads.f, grad.f, state_f, cfg.adam);
            adam_step(result.heads.g, grad.g, state_g, cfg.adam);
        }
    }
    return result;
}

std::vector<int> predict(const ClusterHeadParams& f, const EmbeddingMatrix& images) {
    if (images.dim() != f.input_dim()) throw DimensionError("predict: image width does not match the head");
    std::vector<int> out(images.rows());
    const std::size_t chunks = (images.rows() + predict_chunk - 1) / predict_chunk;
    parallel_for(chunks, [&](std::size_t c_begin, std::size_t c_end) {
        std::vector<std::uint32_t> idx;
        for (std::size_t c = c_begin; c < c_end; ++c) {
            const std::size_t lo = c * predict_chunk;
            const std::size_t hi = std::min(images.rows(), lo + predict_chunk);
            idx.resize(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) idx[i - lo] = static_cast<std::uint32_t>(i);
            const auto labels = argmax_rows(head_forward(f, gather_rows(images, idx)));
            std::copy(labels.begin(), labels.end(), out.begin() + static_cast<std::ptrdiff_t>(lo));
        }
    });
    return out;
}

void write_checkpoint(const std::filesystem::path& path, const HeadPair& heads, std::uint64_t step) {
    if (heads.f.hidden_dim() != heads.g.hidden_dim() || heads.f.clusters() != heads.g.clusters() ||
        heads.f.activation != heads.g.activation) {
        throw DimensionError("checkpoint: heads disagree in hidden width, clusters or activation");
    }
    std::array<char, checkpoint_header_size> header{};
    std::memcpy(header.data(), "TACK", 4);
    write_u32(header.data() + 4, checkpoint_version);
    write_u32(header.data() + 8, static_cast<std::uint32_t>(heads.f.input_dim()));
    write_u32(header.data() + 12, static_cast<std::uint32_t>(heads.f.hidden_dim()));
    write_u32(header.data() + 16, static_cast<std::uint32_t>(heads.f.clusters()));
    write_u32(header.data() + 20, static_cast<std::uint32_t>(heads.g.input_dim()));
    std::memcpy(header.data() + 24, &step, 8);
    header[32] = static_cast<char>(heads.f.activation);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(header.data(), header.size());
    for (const auto* head : {&heads.f, &heads.g}) {
        for (const auto t : head->tensors()) write_tensor(out, t);
    }
}

HeadPair load_checkpoint(const std::filesystem::path& path, std::uint64_t* step) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint " + path.string());
    std::array<char, checkpoint_header_size> header{};
    in.read(header.data(), header.size());
    if (in.gcount() != static_cast<std::streamsize>(header.size()) || std::memcmp(header.data(), "TACK", 4) != 0) {
        throw FormatError(path.string() + ": not a checkpoint");
    }
    if (read_u32(header.data() + 4) != checkpoint_version) {
        throw FormatError(path.string() + ": unsupported checkpoint version");
    }
    const std::size_t d = read_u32(header.data() + 8);
    const std::size_t h = read_u32(header.data() + 12);
    const std::size_t k = read_u32(header.data() + 16);
    const std::size_t dt = read_u32(header.data() + 20);
    const auto act = static_cast<std::uint8_t>(header[32]);
    if (act > static_cast<std::uint8_t>(Activation::Tanh)) throw FormatError(path.string() + ": unknown activation");
    if (d == 0 || h == 0 || k == 0 || dt == 0) throw FormatError(path.string() + ": zero dimension in header");
    if (step != nullptr) std::memcpy(step, header.data() + 24, 8);

    HeadPair heads{zero_head(d, h, k, static_cast<Activation>(act)), zero_head(dt, h, k, static_cast<Activation>(act))};
    for (auto* head : {&heads.f, &heads.g}) {
        for (auto t : head->tensors()) read_tensor(in, t, path);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes");
    return heads;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossBreakdown>& history,
                    const std::string& config_hash) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) throw FormatError("cannot write " + path.string());
    if (!config_hash.empty()) std::fprintf(f, "# config_hash: %s\n", config_hash.c_str());
    std::fprintf(f, "step,dis,con,bal,total\n");
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& h = history[i];
        std::fprintf(f, "%zu,%.10g,%.10g,%.10g,%.10g\n", i + 1, h.dis, h.con, h.bal, h.total);
    }
    std::fclose(f);
}

}  // namespace tac
