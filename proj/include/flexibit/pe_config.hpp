// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace flexibit {

/// Design-time PE parameters (bit widths).
struct PEConfig {
  int reg_width = 24;  // activation / weight register
  int r_m = 12;        // mantissa register
  int r_e = 12;        // exponent register
  int r_s = 12;        // sign register
  int l_prim = 144;    // primitive register
  int l_add = 144;     // flexible exponent adder
  int l_acc = 144;     // accumulator
  int l_cst = 144;     // concat-shift tree

  void validate() const;

  friend bool operator==(const PEConfig&, const PEConfig&) = default;
};

}  // namespace flexibit
