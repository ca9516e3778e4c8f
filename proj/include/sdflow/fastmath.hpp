#pragma once

#include <cstddef>

namespace sdflow {

/// Paired sin/cos over an array. Cody-Waite pi/2 reduction with cephes-style
/// minimax polynomials; auto-vectorizes under -O3. Absolute error stays below
/// a few ulps for |x| up to ~1e6; larger arguments fall back to libm.
void sincos_array(const double* x, double* sin_out, double* cos_out, std::size_t n);

}  // namespace sdflow
