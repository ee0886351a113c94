#pragma once

// Identifiability metrics: the coefficient of determination of the best
// affine fit (linear identifiability) and the mean correlation coefficient
// under an optimal one-to-one assignment (permutation identifiability).

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "midlab/dataset.hpp"
#include "midlab/encoder.hpp"
#include "midlab/matrix.hpp"

namespace midl {

// Pearson correlation. Either argument being constant (max equals min) is an
// undefined correlation and raises CorrelationError.
double pearson(const Vector& x, const Vector& y);

struct R2Result {
    double value = 0.0;
    bool rank_deficient = false;
};

// Fits z_hat ~ A z_true + c by least squares and returns
// 1 - sum ||z_hat - fit||^2 / sum ||z_hat - mean(z_hat)||^2.
// The denominator centers z_hat (not the regression target convention).
R2Result r_squared_detail(const Matrix& z_true, const Matrix& z_hat);
double r_squared(const Matrix& z_true, const Matrix& z_hat);

// Exact optimal assignment for a square cost matrix (shortest augmenting
// path with potentials, O(d^3)). Returns perm with perm[i] = column assigned
// to row i.
std::vector<std::size_t> linear_sum_assignment(const Matrix& cost, bool maximize);

struct MccResult {
    double value = 0.0;
    std::vector<std::size_t> assignment; // column of z_hat matched to each z_true dim
    Matrix signed_corr;                  // d x d Pearson matrix, signed
};

// Mean of |Pearson| under the assignment maximizing total |Pearson|.
MccResult mcc_detail(const Matrix& z_true, const Matrix& z_hat);
double mcc(const Matrix& z_true, const Matrix& z_hat);

struct EvalReport {
    double r2 = 0.0;
    double mcc = 0.0;
    bool r2_rank_deficient = false;
    std::vector<std::size_t> assignment;
    Matrix signed_corr;
    double final_loss = 0.0;
    // meta
    std::string run_id;
    std::string spec_name;
    std::uint64_t seed = 0;
};

// Encodes X with f_x and scores the representation against the ground-truth
// coupled latents. final_loss is carried through from training history when
// the caller has one (NaN otherwise).
EvalReport evaluate_run(const PairedDataset& ds, const EncoderPair& pair,
                        double final_loss = std::numeric_limits<double>::quiet_NaN());

} // namespace midl
