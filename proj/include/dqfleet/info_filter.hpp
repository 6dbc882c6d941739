#ifndef DQFLEET_INFO_FILTER_HPP
#define DQFLEET_INFO_FILTER_HPP

#include "dqfleet/types.hpp"

namespace dqf {

struct InfoUpdate {
  VecX delta_x;  // M (u - U x̂)
  MatX P_plus;   // M = (P^{-1} + U)^{-1}
};

/// Information-form measurement update: u = H^T R^{-1} z, U = H^T R^{-1} H,
/// M = (P^{-1} + U)^{-1}. Generic linear-algebra primitive with no
/// quaternion semantics. Throws std::invalid_argument when P or R is not
/// invertible (both must be positive definite).
InfoUpdate info_update(const VecX& x_hat, const MatX& P, const MatX& H,
                       const MatX& R, const VecX& z);

/// (P^{-1} + U)^{-1} and M (u - U x̂) given precomputed information
/// quantities; shared by the dual-quaternion filters.
InfoUpdate info_update_from_quantities(const VecX& x_hat, const MatX& P,
                                       const VecX& u, const MatX& U);

/// Symmetric part (P + P^T)/2; applied after every covariance update.
MatX symmetrize(const MatX& P);

}  // namespace dqf

#endif  // DQFLEET_INFO_FILTER_HPP
