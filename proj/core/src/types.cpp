#include "fletcher/types.hpp"

namespace fletcher {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace fletcher
