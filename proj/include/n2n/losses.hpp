#pragma once

#include "n2n/autodiff.hpp"
#include "n2n/tensor.hpp"

namespace n2n::nn {

// Batch standardization followed by C = (1/N) A^T B, the Barlow Twins
// normalization. Each column of a and b is centered to zero mean and scaled
// to unit variance over the batch before correlation; entries of C then lie
// in [-1, 1] up to rounding. Throws DegenerateBatchError if any dimension has
// batch standard deviation <= 1e-12 after centering.
Tensor cross_correlation(const Tensor& a, const Tensor& b);

// L_BT = sum_i (1 - C_ii)^2 + lambda * sum_{i != j} C_ij^2.
double barlow_twins_loss(const Tensor& a, const Tensor& b, double lambda);

// Differentiable versions for training. Same math, built on the tape.
Var cross_correlation_g(Tape& t, Var a, Var b);
Var barlow_twins_loss_g(Tape& t, Var a, Var b, double lambda);

}  // namespace n2n::nn
