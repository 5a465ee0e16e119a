#pragma once

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace kronsketch::detail {

using Spectrum = std::vector<std::complex<double>>;

// Eigen's kissfft backend does not handle length 1; it is the identity there.
inline void fft_forward(Spectrum& out, const Spectrum& in) {
  thread_local Eigen::FFT<double> fft;
  if (in.size() == 1) {
    out = in;
    return;
  }
  fft.fwd(out, in);
}

inline void fft_inverse(Spectrum& out, const Spectrum& in) {
  thread_local Eigen::FFT<double> fft;
  if (in.size() == 1) {
    out = in;
    return;
  }
  fft.inv(out, in);
}

}  // namespace kronsketch::detail
