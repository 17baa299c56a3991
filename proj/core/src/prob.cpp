#include "posim/prob.hpp"

#include "posim/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace posim {

bool is_prob_vector(const Eigen::Ref<const Vec>& v, double tol) {
  if (v.size() == 0) return false;
  if ((v.array() < 0.0).any()) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

void validate_prob_vector(const Eigen::Ref<const Vec>& v, const char* where) {
  if (v.size() == 0)
    throw std::invalid_argument(std::string(where) + ": empty probability vector");
  if ((v.array() < 0.0).any())
    throw std::invalid_argument(std::string(where) + ": negative probability entry");
  const double s = v.sum();
  if (std::abs(s - 1.0) > kProbSumTol)
    throw std::invalid_argument(std::string(where) + ": probabilities sum to " +
                                std::to_string(s));
}

Vec floor_normalize(Vec v) {
  for (;;) {
    bool changed = false;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (v[i] < kProbFloor) {
        v[i] = kProbFloor;
        changed = true;
      }
    }
    if (!changed) return v;
    v /= v.sum();
  }
}

double kl_divergence(const Eigen::Ref<const Vec>& p, const Eigen::Ref<const Vec>& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: dimension mismatch (" +
                                std::to_string(p.size()) + " vs " +
                                std::to_string(q.size()) + ")");
  validate_prob_vector(p, "kl_divergence(p)");
  validate_prob_vector(q, "kl_divergence(q)");

  const Vec qf = floor_normalize(q);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) acc += p[i] * (std::log(p[i]) - std::log(qf[i]));
  }
  if (acc < 0.0) {
    // Gibbs' inequality holds for the renormalized q, so anything below the
    // rounding tolerance indicates corrupted input.
    if (acc < -1e-9)
      throw NumericalError("kl_divergence: negative divergence " + std::to_string(acc));
    acc = 0.0;
  }
  return acc;
}

double mean_kl(const Eigen::Ref<const Mat>& targets, const Eigen::Ref<const Mat>& mapped) {
  if (targets.rows() == 0) throw std::invalid_argument("mean_kl: empty input");
  if (targets.rows() != mapped.rows() || targets.cols() != mapped.cols())
    throw std::invalid_argument("mean_kl: shape mismatch");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < targets.rows(); ++t)
    acc += kl_divergence(targets.row(t).transpose(), mapped.row(t).transpose());
  return acc / static_cast<double>(targets.rows());
}

double entropy(const Eigen::Ref<const Vec>& p) {
  validate_prob_vector(p, "entropy");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) acc -= p[i] * std::log(p[i]);
  }
  return acc < 0.0 ? 0.0 : acc;
}

Vec softmax(Vec z) {
  const double m = z.maxCoeff();
  z = (z.array() - m).exp();
  z /= z.sum();
  return z;
}

Eigen::Index argmax_lowest(const Eigen::Ref<const Vec>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace posim
