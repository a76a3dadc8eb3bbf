#pragma once

#include <array>
#include <cstdint>

#include "iasim/types.hpp"

namespace iasim {

/// One network realization: the nine raw complex (p+1) x p channel matrices.
/// H(j,i) is the channel from transmitter i to receiver j, indices in {1,2,3}.
struct ChannelDraw {
  int p = 0;
  uint64_t seed = 0;
  std::array<CMat, 9> h;

  const CMat& H(int j, int i) const { return h[3 * (j - 1) + (i - 1)]; }
  CMat& H(int j, int i) { return h[3 * (j - 1) + (i - 1)]; }
};

/// Draws nine i.i.d. unit-variance circularly symmetric complex Gaussian
/// channels, deterministic in (p, seed). Redraws any realization whose
/// smallest relative singular value falls below 1e-10; a hundred consecutive
/// failures signal a broken generator and abort.
ChannelDraw draw_channels(int p, uint64_t seed);

/// 2x2 rotation by phi: [[cos, -sin], [sin, cos]].
Mat rotation(double phi);

/// ACS lift of one complex scalar: |h| * (I_T (x) rotation(arg h)),
/// a real 2T x 2T matrix. h = 0 maps to the zero matrix.
Mat lift_scalar_acs(cplx h, int T);

/// Time-extension-only lift: h * I_T, complex.
CMat lift_scalar_time(cplx h, int T);

/// Entrywise lift of a complex matrix; every entry becomes its mode's block,
/// so the output is (rows*2T) x (cols*2T) real or (rows*T) x (cols*T) complex.
Mat lift_matrix_acs(const CMat& m, int T);
CMat lift_matrix_time(const CMat& m, int T);

}  // namespace iasim
