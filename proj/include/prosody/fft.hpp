#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "prosody/errors.hpp"

namespace prosody::fft {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 Cooley-Tukey. inverse = true applies the
// conjugate transform and the 1/N scale.
inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n))
        throw InvariantViolation("fft: size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= scale;
    }
}

// Forward FFT of a real signal; returns the one-sided half spectrum,
// bins 0..n/2 inclusive.
inline std::vector<std::complex<double>> real_forward(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = {x[i], 0.0};
    transform(buf, false);
    buf.resize(n / 2 + 1);
    return buf;
}

// Inverse of real_forward: reconstructs the length-n real signal from the
// half spectrum (n/2 + 1 bins, Hermitian symmetry implied).
inline std::vector<double> real_inverse(const std::vector<std::complex<double>>& half, std::size_t n) {
    if (half.size() != n / 2 + 1)
        throw InvariantViolation("fft: half spectrum size mismatch");
    std::vector<std::complex<double>> buf(n);
    for (std::size_t k = 0; k <= n / 2; ++k) buf[k] = half[k];
    for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = std::conj(half[n - k]);
    transform(buf, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
    return out;
}

// Periodic Hann window, length n. Sums of shifted copies at any hop that
// divides n are exactly constant, which the overlap-add synthesis relies on.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

}  // namespace prosody::fft
