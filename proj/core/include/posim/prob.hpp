#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace posim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;  // rows = frames unless noted otherwise

// Probability vectors are plain Vec/Mat rows; validity means non-negative
// entries summing to 1 within kProbSumTol.
inline constexpr double kProbSumTol = 1e-6;

// Entries of a mapped/compared distribution are floored here before any log.
inline constexpr double kProbFloor = 1e-10;

bool is_prob_vector(const Eigen::Ref<const Vec>& v, double tol = kProbSumTol);
void validate_prob_vector(const Eigen::Ref<const Vec>& v, const char* where);

// Clamps entries below kProbFloor and renormalizes, repeated until the vector
// is a fixed point (so applying it twice changes nothing, bitwise). Vectors
// with no sub-floor entry pass through untouched.
Vec floor_normalize(Vec v);

// KL(p || q) in nats. q is floored before the logs; terms with p_k = 0
// contribute nothing. Tiny negative results (>= -1e-9, from rounding) clamp
// to zero.
double kl_divergence(const Eigen::Ref<const Vec>& p, const Eigen::Ref<const Vec>& q);

// Mean per-frame KL over two frame-aligned matrices (rows = frames).
double mean_kl(const Eigen::Ref<const Mat>& targets, const Eigen::Ref<const Mat>& mapped);

// Shannon entropy in nats, 0*ln(0) := 0. Always in [0, ln K].
double entropy(const Eigen::Ref<const Vec>& p);

// softmax(z), numerically stabilized; strictly positive output.
Vec softmax(Vec z);

// Index of the largest entry; ties resolve to the lowest index.
Eigen::Index argmax_lowest(const Eigen::Ref<const Vec>& v);

}  // namespace posim
