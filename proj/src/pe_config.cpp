// SPDX-License-Identifier: Apache-2.0
#include "flexibit/pe_config.hpp"

#include <string>

#include "flexibit/errors.hpp"

namespace flexibit {

void PEConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw ConfigError(std::string("PEConfig.") + name + " must be positive");
  };
  positive(reg_width, "reg_width");
  positive(r_m, "r_m");
  positive(r_e, "r_e");
  positive(r_s, "r_s");
  positive(l_prim, "l_prim");
  positive(l_add, "l_add");
  positive(l_acc, "l_acc");
  positive(l_cst, "l_cst");
  if (r_m > reg_width || r_e > reg_width) throw ConfigError("PEConfig: r_m and r_e may not exceed reg_width");
  if (l_prim < r_m) throw ConfigError("PEConfig: l_prim must be at least r_m");
}

}  // namespace flexibit
