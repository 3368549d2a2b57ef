#include "tac/cluster_head.hpp"

#include <cmath>
#include <string>

#include "tac/error.hpp"

namespace tac {
namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
    }
    return z;
}

double activate_grad(Activation a, double z, double h) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - h * h;
    }
    return 1.0;
}

// out(n×m) = a(n×k)·b(k×m) + bias broadcast over rows.
void affine(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out) {
    out = Matrix(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t j = 0; j < o.size(); ++j) o[j] = bias[j];
        const auto ar = a.row(i);
        for (std::size_t p = 0; p < ar.size(); ++p) {
            const double s = ar[p];
            if (s == 0.0) continue;
            const auto br = b.row(p);
            for (std::size_t j = 0; j < o.size(); ++j) o[j] += s * br[j];
        }
    }
}

// grad_w(k×m) += a(n×k)ᵀ·d(n×m); grad_b(m) += column sums of d.
void accumulate_weight_grad(const Matrix& a, const Matrix& d, Matrix& grad_w, std::vector<double>& grad_b) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ar = a.row(i);
        const auto dr = d.row(i);
        for (std::size_t p = 0; p < ar.size(); ++p) {
            const double s = ar[p];
            if (s == 0.0) continue;
            auto g = grad_w.row(p);
            for (std::size_t j = 0; j < dr.size(); ++j) g[j] += s * dr[j];
        }
        for (std::size_t j = 0; j < dr.size(); ++j) grad_b[j] += dr[j];
    }
}

void check_shapes(const ClusterHeadParams& p) {
    if (p.b1.size() != p.w1.cols() || p.w2.rows() != p.w1.cols() || p.b2.size() != p.w2.cols()) {
        throw DimensionError("cluster head: inconsistent parameter shapes");
    }
}

}  // namespace

std::array<std::span<double>, 4> ClusterHeadParams::tensors() {
    return {std::span<double>(w1.values()), std::span<double>(b1), std::span<double>(w2.values()),
            std::span<double>(b2)};
}

std::array<std::span<const double>, 4> ClusterHeadParams::tensors() const {
    return {std::span<const double>(w1.values()), std::span<const double>(b1),
            std::span<const double>(w2.values()), std::span<const double>(b2)};
}

ClusterHeadParams zero_head(std::size_t input_dim, std::size_t hidden_dim, std::size_t clusters,
                            Activation activation) {
    if (input_dim == 0 || hidden_dim == 0 || clusters == 0) {
        throw ParameterError("cluster head: dimensions must be positive");
    }
    return ClusterHeadParams{Matrix(input_dim, hidden_dim), std::vector<double>(hidden_dim, 0.0),
                             Matrix(hidden_dim, clusters), std::vector<double>(clusters, 0.0), activation};
}

ClusterHeadParams init_head(std::size_t input_dim, std::size_t hidden_dim, std::size_t clusters,
                            RngState& rng, Activation activation) {
    ClusterHeadParams p = zero_head(input_dim, hidden_dim, clusters, activation);
    const double a1 = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim));
    for (double& w : p.w1.values()) w = (2.0 * rng_uniform01(rng) - 1.0) * a1;
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden_dim + clusters));
    for (double& w : p.w2.values()) w = (2.0 * rng_uniform01(rng) - 1.0) * a2;
    return p;
}

HeadActivations head_forward_cached(const ClusterHeadParams& params, const Matrix& x) {
    check_shapes(params);
    if (x.cols() != params.input_dim()) {
        throw DimensionError("cluster head: input width " + std::to_string(x.cols()) + ", expected " +
                             std::to_string(params.input_dim()));
    }
    HeadActivations act;
    affine(x, params.w1, params.b1, act.pre);
    act.hidden = Matrix(act.pre.rows(), act.pre.cols());
    for (std::size_t i = 0; i < act.pre.size(); ++i) {
        act.hidden.values()[i] = activate(params.activation, act.pre.values()[i]);
    }
    affine(act.hidden, params.w2, params.b2, act.probs);
    for (std::size_t i = 0; i < act.probs.rows(); ++i) softmax_inplace(act.probs.row(i));
    return act;
}

Matrix head_forward(const ClusterHeadParams& params, const Matrix& x) {
    return head_forward_cached(params, x).probs;
}

Matrix head_forward(const ClusterHeadParams& params, const EmbeddingMatrix& x) {
    return head_forward(params, to_matrix(x));
}

void head_backward(const ClusterHeadParams& params, const Matrix& x, const HeadActivations& act,
                   const Matrix& dprobs, ClusterHeadParams& grad) {
    const std::size_t n = x.rows();
    const std::size_t k = params.clusters();
    const std::size_t h = params.hidden_dim();

    // Softmax Jacobian: dz = p ⊙ (dp − <dp, p>).
    Matrix dlogits(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = act.probs.row(i);
        const auto dp = dprobs.row(i);
        double inner = 0.0;
        for (std::size_t j = 0; j < k; ++j) inner += dp[j] * p[j];
        auto dz = dlogits.row(i);
        for (std::size_t j = 0; j < k; ++j) dz[j] = p[j] * (dp[j] - inner);
    }
    accumulate_weight_grad(act.hidden, dlogits, grad.w2, grad.b2);

    Matrix dpre(n, h);
    for (std::size_t i = 0; i < n; ++i) {
        const auto dz = dlogits.row(i);
        auto d = dpre.row(i);
        for (std::size_t u = 0; u < h; ++u) {
            const auto w = params.w2.row(u);
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += w[j] * dz[j];
            d[u] = acc * activate_grad(params.activation, act.pre(i, u), act.hidden(i, u));
        }
    }
    accumulate_weight_grad(x, dpre, grad.w1, grad.b1);
}

Matrix gather_rows(const EmbeddingMatrix& x, std::span<const std::uint32_t> indices) {
    Matrix out(indices.size(), x.dim());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto r = x.row(indices[i]);
        auto o = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) o[j] = r[j];
    }
    return out;
}

Matrix to_matrix(const EmbeddingMatrix& x) {
    Matrix out(x.rows(), x.dim());
    const auto d = x.data();
    for (std::size_t i = 0; i < d.size(); ++i) out.values()[i] = d[i];
    return out;
}

AdamState::AdamState(const ClusterHeadParams& like)
    : m(zero_head(like.input_dim(), like.hidden_dim(), like.clusters(), like.activation)),
      v(zero_head(like.input_dim(), like.hidden_dim(), like.clusters(), like.activation)) {}

void adam_step(ClusterHeadParams& params, const ClusterHeadParams& grad, AdamState& state,
               const AdamConfig& cfg) {
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    auto p = params.tensors();
    const auto g = grad.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    for (std::size_t t = 0; t < p.size(); ++t) {
        for (std::size_t i = 0; i < p[t].size(); ++i) {
            m[t][i] = cfg.beta1 * m[t][i] + (1.0 - cfg.beta1) * g[t][i];
            v[t][i] = cfg.beta2 * v[t][i] + (1.0 - cfg.beta2) * g[t][i] * g[t][i];
            const double mhat = m[t][i] / bc1;
            const double vhat = v[t][i] / bc2;
            p[t][i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace tac
