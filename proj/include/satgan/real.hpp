#pragma once

namespace satgan {

// Element type of every tensor. The default build is single precision; the
// double build exists for finite-difference gradient checks of deep graphs.
#ifdef SATGAN_DOUBLE_PRECISION
using real = double;
#else
using real = float;
#endif

}  // namespace satgan
