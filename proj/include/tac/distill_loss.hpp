#pragma once

#include "tac/core_math.hpp"

namespace tac {

/// Soft assignments for one batch: images, image neighbors, counterparts,
/// counterpart neighbors. All n×K and row-stochastic.
struct AssignmentBatch {
    Matrix p;
    Matrix p_nbr;
    Matrix q;
    Matrix q_nbr;
};

struct LossConfig {
    double tau_hat = 0.5;
    double alpha = 5.0;
    // Ablation switches; a disabled term reports 0 and contributes nothing.
    bool use_dis = true;
    bool use_con = true;
    bool use_bal = true;
};

struct LossBreakdown {
    double dis = 0.0;
    double con = 0.0;
    double bal = 0.0;
    double total = 0.0;  // dis + con − alpha·bal
};

/// Added to every assignment-column norm before taking cosines.
inline constexpr double column_norm_eps = 1e-12;
/// Floor on the agreement sum inside the confidence loss.
inline constexpr double agreement_floor = 1e-12;

/// Cross-modal distillation: for each cluster column i, a K-way softmax
/// (temperature tau_hat) over column cosines must pick the matching column of
/// the other modality's neighbor assignments; summed over both directions.
double loss_dis(const AssignmentBatch& batch, double tau_hat);

/// −log Σ_i p_iᵀq_i, with the sum floored at agreement_floor.
double loss_con(const Matrix& p, const Matrix& q);

/// Entropy of the mean assignment of each head, summed (natural log).
double loss_bal(const Matrix& p, const Matrix& q);

LossBreakdown loss_total(const AssignmentBatch& batch, const LossConfig& cfg);

/// Loss value and its gradient with respect to each of the four matrices.
LossBreakdown loss_with_gradients(const AssignmentBatch& batch, const LossConfig& cfg,
                                  AssignmentBatch& grad);

/// Throws DimensionError unless the four matrices share a shape, and
/// DataError unless every row is a probability vector (±1e-5).
void validate_batch(const AssignmentBatch& batch);

}  // namespace tac
