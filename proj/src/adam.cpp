#include "rdae/adam.hpp"

namespace rdae {

void AdamConfig::validate() const {
  if (!(learning_rate > 0)) throw Error(Errc::kInvalidArg, "adam: learning_rate must be > 0");
  if (!(beta1 > 0 && beta1 < 1)) throw Error(Errc::kInvalidArg, "adam: beta1 must lie in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw Error(Errc::kInvalidArg, "adam: beta2 must lie in (0, 1)");
  if (!(epsilon > 0)) throw Error(Errc::kInvalidArg, "adam: epsilon must be > 0");
}

}  // namespace rdae
