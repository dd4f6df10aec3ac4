#include "jpose/belief.hpp"

#include <algorithm>
#include <unordered_set>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace jpose {

namespace {

template <typename Matrix>
Matrix symmetric_part(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

// Smallest eigenvalue of a symmetric matrix (fixed or dynamic size).
template <typename Matrix>
double smallest_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

template <typename Matrix>
void require_psd(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InvalidArgument(fmt::format("{} has non-finite entries", what));
  const double lo = smallest_eigenvalue(m);
  if (lo < -kPsdTolerance) {
    throw InvalidArgument(fmt::format("{} is not positive semi-definite (min eigenvalue {:.3e})",
                                      what, lo));
  }
}

}  // namespace

template <int D>
UncertainPose<D>::UncertainPose(const Pose<D>& mean, const Covariance<D>& cov)
    : mean_(mean), cov_(symmetric_part(cov)) {
  require_psd(cov_, "pose covariance");
}

template <int D>
UncertainPose<D> UncertainPose<D>::Known(const Pose<D>& mean) {
  return UncertainPose(mean, Covariance<D>::Zero(), Trusted{});
}

template <int D>
UncertainPose<D> UncertainPose<D>::FromPropagated(const Pose<D>& mean, const Covariance<D>& cov) {
  Covariance<D> sym = symmetric_part(cov);
  if (!sym.allFinite()) throw NumericalDegeneracy("propagated covariance has non-finite entries");
  const double lo = smallest_eigenvalue(sym);
  if (lo < -kPropagationPsdTolerance) {
    throw NumericalDegeneracy(
        fmt::format("propagated covariance is indefinite (min eigenvalue {:.3e})", lo));
  }
  return UncertainPose(mean, sym, Trusted{});
}

template <int D>
PosePairBelief<D>::PosePairBelief(const Pose<D>& first, const Pose<D>& second,
                                  const JointCovariance& cov)
    : first_(first), second_(second), cov_(symmetric_part(cov)) {
  require_psd(cov_, "pair covariance");
}

template <int D>
PosePairBelief<D> PosePairBelief<D>::FromBlocks(const Pose<D>& first, const Pose<D>& second,
                                                const Covariance<D>& sigma_first,
                                                const Covariance<D>& sigma_second,
                                                const CrossCovariance& sigma_cross) {
  constexpr int m = kDof<D>;
  JointCovariance cov;
  cov.template topLeftCorner<m, m>() = sigma_first;
  cov.template bottomRightCorner<m, m>() = sigma_second;
  cov.template topRightCorner<m, m>() = sigma_cross;
  cov.template bottomLeftCorner<m, m>() = sigma_cross.transpose();
  return PosePairBelief(first, second, cov);
}

template <int D>
PosePairBelief<D> PosePairBelief<D>::Independent(const UncertainPose<D>& first,
                                                 const UncertainPose<D>& second) {
  return FromBlocks(first.mean(), second.mean(), first.covariance(), second.covariance(),
                    Covariance<D>::Zero());
}

template <int D>
UncertainPose<D> PosePairBelief<D>::first_marginal() const {
  return UncertainPose<D>(first_, first_covariance());
}

template <int D>
UncertainPose<D> PosePairBelief<D>::second_marginal() const {
  return UncertainPose<D>(second_, second_covariance());
}

template <int D>
JointPoseBelief<D>::JointPoseBelief(std::vector<Key> keys, std::vector<Pose<D>> means,
                                    const Eigen::MatrixXd& cov)
    : keys_(std::move(keys)), means_(std::move(means)) {
  if (keys_.size() != means_.size()) {
    throw InvalidArgument(
        fmt::format("{} keys but {} means", keys_.size(), means_.size()));
  }
  const auto dim = static_cast<Eigen::Index>(keys_.size()) * kBlock;
  if (cov.rows() != dim || cov.cols() != dim) {
    throw InvalidArgument(fmt::format("joint covariance is {}x{}, expected {}x{}", cov.rows(),
                                      cov.cols(), dim, dim));
  }
  std::unordered_set<Key> seen;
  for (Key k : keys_) {
    if (!seen.insert(k).second) throw InvalidArgument(fmt::format("duplicate key {}", k));
  }
  cov_ = symmetric_part(cov);
  require_psd(cov_, "joint covariance");
}

namespace {

std::vector<Key> sequential_keys(std::size_t n) {
  std::vector<Key> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = i;
  return keys;
}

}  // namespace

template <int D>
JointPoseBelief<D>::JointPoseBelief(std::vector<Pose<D>> means, const Eigen::MatrixXd& cov)
    : JointPoseBelief(sequential_keys(means.size()), means, cov) {}

template <int D>
std::size_t JointPoseBelief<D>::index_of(Key key) const {
  auto it = std::find(keys_.begin(), keys_.end(), key);
  if (it == keys_.end()) throw KeyNotFound(fmt::format("key {} not in belief", key));
  return static_cast<std::size_t>(it - keys_.begin());
}

template <int D>
UncertainPose<D> JointPoseBelief<D>::marginal(Key key) const {
  const std::size_t a = index_of(key);
  return UncertainPose<D>(means_[a], block(a, a));
}

template <int D>
JointPoseBelief<D> JointPoseBelief<D>::without_correlation() const {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(cov_.rows(), cov_.cols());
  for (std::size_t a = 0; a < size(); ++a) {
    const auto o = static_cast<Eigen::Index>(a) * kBlock;
    cov.block<kBlock, kBlock>(o, o) = block(a, a);
  }
  return JointPoseBelief(keys_, means_, cov);
}

template <int D>
PosePairBelief<D> marginal_pair(const JointPoseBelief<D>& belief, Key i, Key j) {
  if (i == j) throw InvalidArgument(fmt::format("pair marginal needs two distinct keys, got {} twice", i));
  const std::size_t a = belief.index_of(i);
  const std::size_t b = belief.index_of(j);
  return PosePairBelief<D>::FromBlocks(belief.means()[a], belief.means()[b], belief.block(a, a),
                                       belief.block(b, b), belief.block(a, b));
}

template <int D>
UncertainPose<D> compose(const PosePairBelief<D>& pair) {
  const AdjointMatrix<D> ad = adjoint(pair.first());
  const Covariance<D> cross = pair.cross_covariance();
  const Covariance<D> cov = pair.first_covariance() +
                            ad * pair.second_covariance() * ad.transpose() +
                            cross * ad.transpose() + ad * cross.transpose();
  return UncertainPose<D>::FromPropagated(pair.first() * pair.second(), cov);
}

template <int D>
UncertainPose<D> compose(const UncertainPose<D>& a, const UncertainPose<D>& b) {
  return compose(PosePairBelief<D>::Independent(a, b));
}

template <int D>
UncertainPose<D> compose_chain(const JointPoseBelief<D>& chain) {
  constexpr int m = kDof<D>;
  const std::size_t n = chain.size();
  if (n == 0) throw InvalidArgument("cannot compose an empty chain");
  if (n == 1) return UncertainPose<D>(chain.means()[0], chain.block(0, 0));
  if (n == 2) return compose(marginal_pair(chain, chain.keys()[0], chain.keys()[1]));

  Eigen::Matrix<double, m, Eigen::Dynamic> jac(m, static_cast<Eigen::Index>(n) * m);
  Pose<D> prefix = Pose<D>::Identity();
  for (std::size_t k = 0; k < n; ++k) {
    jac.template middleCols<m>(static_cast<Eigen::Index>(k) * m) = adjoint(prefix);
    prefix = prefix * chain.means()[k];
  }
  const Covariance<D> cov = jac * chain.covariance() * jac.transpose();
  return UncertainPose<D>::FromPropagated(prefix, cov);
}

template <int D>
UncertainPose<D> inverse(const UncertainPose<D>& u) {
  const Pose<D> inv = u.mean().inverse();
  const AdjointMatrix<D> ad = adjoint(inv);
  return UncertainPose<D>::FromPropagated(inv, ad * u.covariance() * ad.transpose());
}

template <int D>
UncertainPose<D> between(const PosePairBelief<D>& pair) {
  const Pose<D> inv = pair.first().inverse();
  const AdjointMatrix<D> ad = adjoint(inv);
  const Covariance<D> cross = pair.cross_covariance();
  const Covariance<D> inner =
      pair.first_covariance() + pair.second_covariance() - cross - cross.transpose();
  return UncertainPose<D>::FromPropagated(inv * pair.second(), ad * inner * ad.transpose());
}

template <int D>
UncertainPose<D> between(const UncertainPose<D>& a, const UncertainPose<D>& b) {
  return between(PosePairBelief<D>::Independent(a, b));
}

template <int D>
UncertainPose<D> between_ignoring_correlation(const PosePairBelief<D>& pair) {
  return between(PosePairBelief<D>::FromBlocks(pair.first(), pair.second(),
                                               pair.first_covariance(),
                                               pair.second_covariance(), Covariance<D>::Zero()));
}

#define JPOSE_INSTANTIATE(D)                                                                  \
  template class UncertainPose<D>;                                                            \
  template class PosePairBelief<D>;                                                           \
  template class JointPoseBelief<D>;                                                          \
  template PosePairBelief<D> marginal_pair<D>(const JointPoseBelief<D>&, Key, Key);           \
  template UncertainPose<D> compose<D>(const PosePairBelief<D>&);                             \
  template UncertainPose<D> compose<D>(const UncertainPose<D>&, const UncertainPose<D>&);     \
  template UncertainPose<D> compose_chain<D>(const JointPoseBelief<D>&);                      \
  template UncertainPose<D> inverse<D>(const UncertainPose<D>&);                              \
  template UncertainPose<D> between<D>(const PosePairBelief<D>&);                             \
  template UncertainPose<D> between<D>(const UncertainPose<D>&, const UncertainPose<D>&);     \
  template UncertainPose<D> between_ignoring_correlation<D>(const PosePairBelief<D>&);

JPOSE_INSTANTIATE(2)
JPOSE_INSTANTIATE(3)

#undef JPOSE_INSTANTIATE

}  // namespace jpose
