#pragma once

#include <complex>
#include <span>
#include <vector>

namespace micclass {

// Thin FFTW wrappers. Plans are cached per size; execution is thread-safe.
std::vector<std::complex<double>> rfft(std::span<const double> x);
// Inverse of rfft for a length-n real signal (input has n/2+1 bins), unnormalized
// scaling undone, so irfft(rfft(x), n) == x.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace micclass
