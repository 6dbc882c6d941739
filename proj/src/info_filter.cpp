#include "dqfleet/info_filter.hpp"

#include <stdexcept>

namespace dqf {

namespace {
MatX pd_inverse(const MatX& m, const char* name) {
  Eigen::LLT<MatX> llt(m);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(name) + " is not positive definite");
  }
  return llt.solve(MatX::Identity(m.rows(), m.cols()));
}
}  // namespace

MatX symmetrize(const MatX& P) { return 0.5 * (P + P.transpose()); }

InfoUpdate info_update_from_quantities(const VecX& x_hat, const MatX& P,
                                       const VecX& u, const MatX& U) {
  const MatX p_inv = pd_inverse(symmetrize(P), "covariance P");
  Eigen::LLT<MatX> llt(symmetrize(p_inv + U));
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("P^{-1} + U is not positive definite");
  }
  InfoUpdate out;
  out.P_plus = symmetrize(llt.solve(MatX::Identity(P.rows(), P.cols())));
  out.delta_x = out.P_plus * (u - U * x_hat);
  return out;
}

InfoUpdate info_update(const VecX& x_hat, const MatX& P, const MatX& H,
                       const MatX& R, const VecX& z) {
  Eigen::LLT<MatX> rllt(R);
  if (rllt.info() != Eigen::Success) {
    throw std::invalid_argument("measurement covariance R is not positive definite");
  }
  const MatX r_inv_h = rllt.solve(H);
  const MatX U = H.transpose() * r_inv_h;
  const VecX u = H.transpose() * rllt.solve(z);
  return info_update_from_quantities(x_hat, P, u, U);
}

}  // namespace dqf
