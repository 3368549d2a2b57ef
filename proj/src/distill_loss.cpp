#include "tac/distill_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tac/error.hpp"

namespace tac {
namespace {

std::vector<double> column_norms(const Matrix& m) {
    std::vector<double> norms(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) norms[c] += row[c] * row[c];
    }
    for (double& v : norms) v = std::sqrt(v);
    return norms;
}

// One direction of the distillation loss:
//   Σ_i −log softmax_k(cos(a_i, b_k) / tau)[i]
// over columns a_i, b_k. Gradients are accumulated when ga/gb are non-null.
double distill_term(const Matrix& a, const Matrix& b, double tau, Matrix* ga, Matrix* gb) {
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    const auto ra = column_norms(a);
    const auto rb = column_norms(b);
    std::vector<double> na(k), nb(k);
    for (std::size_t c = 0; c < k; ++c) {
        na[c] = ra[c] + column_norm_eps;
        nb[c] = rb[c] + column_norm_eps;
    }

    Matrix cos(k, k);
    for (std::size_t r = 0; r < n; ++r) {
        const auto ar = a.row(r);
        const auto br = b.row(r);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) cos(i, j) += ar[i] * br[j];
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) cos(i, j) /= na[i] * nb[j];
    }

    double loss = 0.0;
    Matrix weight(k, k);  // dLoss/dcos
    for (std::size_t i = 0; i < k; ++i) {
        const auto row = cos.row(i);
        const double top = *std::max_element(row.begin(), row.end()) / tau;
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] / tau - top);
        loss += top + std::log(z) - row[i] / tau;
        for (std::size_t j = 0; j < k; ++j) {
            const double soft = std::exp(row[j] / tau - top) / z;
            weight(i, j) = (soft - (i == j ? 1.0 : 0.0)) / tau;
        }
    }
    if (ga == nullptr && gb == nullptr) return loss;

    // d cos(a_i,b_j)/d a_i = b_j/(na_i nb_j) − cos_ij · a_i/(ra_i na_i), and symmetrically.
    std::vector<double> wa(k, 0.0), wb(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            wa[i] += weight(i, j) * cos(i, j);
            wb[j] += weight(i, j) * cos(i, j);
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto ar = a.row(r);
        const auto br = b.row(r);
        if (ga != nullptr) {
            auto g = ga->row(r);
            for (std::size_t i = 0; i < k; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < k; ++j) acc += weight(i, j) * br[j] / nb[j];
                acc /= na[i];
                if (ra[i] > 0.0) acc -= wa[i] * ar[i] / (ra[i] * na[i]);
                g[i] += acc;
            }
        }
        if (gb != nullptr) {
            auto g = gb->row(r);
            for (std::size_t j = 0; j < k; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < k; ++i) acc += weight(i, j) * ar[i] / na[i];
                acc /= nb[j];
                if (rb[j] > 0.0) acc -= wb[j] * br[j] / (rb[j] * nb[j]);
                g[j] += acc;
            }
        }
    }
    return loss;
}

std::vector<double> column_means(const Matrix& m) {
    std::vector<double> mean(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) mean[c] += row[c];
    }
    for (double& v : mean) v /= static_cast<double>(m.rows());
    return mean;
}

double entropy(const std::vector<double>& dist) {
    double h = 0.0;
    for (double v : dist) {
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

double agreement(const Matrix& p, const Matrix& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p.values()[i] * q.values()[i];
    return s;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": assignment matrices differ in shape");
    }
}

}  // namespace

void validate_batch(const AssignmentBatch& batch) {
    check_same_shape(batch.p, batch.p_nbr, "batch");
    check_same_shape(batch.p, batch.q, "batch");
    check_same_shape(batch.p, batch.q_nbr, "batch");
    if (batch.p.rows() == 0 || batch.p.cols() == 0) throw DimensionError("batch: empty assignment matrices");
    for (const Matrix* m : {&batch.p, &batch.p_nbr, &batch.q, &batch.q_nbr}) {
        for (std::size_t r = 0; r < m->rows(); ++r) {
            double s = 0.0;
            for (double v : m->row(r)) {
                if (!(v >= 0.0)) throw DataError("batch: negative or non-finite assignment");
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-5) throw DataError("batch: row does not sum to 1");
        }
    }
}

double loss_dis(const AssignmentBatch& batch, double tau_hat) {
    if (!(tau_hat > 0.0)) throw ParameterError("loss_dis: tau_hat must be > 0");
    check_same_shape(batch.p, batch.p_nbr, "loss_dis");
    check_same_shape(batch.p, batch.q, "loss_dis");
    check_same_shape(batch.p, batch.q_nbr, "loss_dis");
    return distill_term(batch.q, batch.p_nbr, tau_hat, nullptr, nullptr) +
           distill_term(batch.p, batch.q_nbr, tau_hat, nullptr, nullptr);
}

double loss_con(const Matrix& p, const Matrix& q) {
    check_same_shape(p, q, "loss_con");
    return -std::log(std::max(agreement(p, q), agreement_floor));
}

double loss_bal(const Matrix& p, const Matrix& q) {
    check_same_shape(p, q, "loss_bal");
    return entropy(column_means(p)) + entropy(column_means(q));
}

LossBreakdown loss_total(const AssignmentBatch& batch, const LossConfig& cfg) {
    LossBreakdown out;
    if (cfg.use_dis) out.dis = loss_dis(batch, cfg.tau_hat);
    if (cfg.use_con) out.con = loss_con(batch.p, batch.q);
    if (cfg.use_bal) out.bal = loss_bal(batch.p, batch.q);
    out.total = out.dis + out.con - cfg.alpha * out.bal;
    return out;
}

LossBreakdown loss_with_gradients(const AssignmentBatch& batch, const LossConfig& cfg,
                                  AssignmentBatch& grad) {
    const LossBreakdown out = loss_total(batch, cfg);
    const std::size_t n = batch.p.rows();
    const std::size_t k = batch.p.cols();
    grad = AssignmentBatch{Matrix(n, k), Matrix(n, k), Matrix(n, k), Matrix(n, k)};

    if (cfg.use_dis) {
        distill_term(batch.q, batch.p_nbr, cfg.tau_hat, &grad.q, &grad.p_nbr);
        distill_term(batch.p, batch.q_nbr, cfg.tau_hat, &grad.p, &grad.q_nbr);
    }
    if (cfg.use_con) {
        const double s = agreement(batch.p, batch.q);
        if (s > agreement_floor) {
            for (std::size_t i = 0; i < batch.p.size(); ++i) {
                grad.p.values()[i] -= batch.q.values()[i] / s;
                grad.q.values()[i] -= batch.p.values()[i] / s;
            }
        }
    }
    if (cfg.use_bal && cfg.alpha != 0.0) {
        // d(−alpha·H(mean))/dP_ij = alpha·(log mean_j + 1)/n
        const auto pm = column_means(batch.p);
        const auto qm = column_means(batch.q);
        const double scale = cfg.alpha / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            auto gp = grad.p.row(r);
            auto gq = grad.q.row(r);
            for (std::size_t c = 0; c < k; ++c) {
                gp[c] += scale * (std::log(std::max(pm[c], 1e-300)) + 1.0);
                gq[c] += scale * (std::log(std::max(qm[c], 1e-300)) + 1.0);
            }
        }
    }
    return out;
}

}  // namespace tac
