#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "maserrx/errors.hpp"

namespace maserrx {

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey, in place, n a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * std::numbers::pi / static_cast<double>(len);
        if (!inverse) ang = -ang;
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& v : x) v /= static_cast<double>(n);
    }
}

// Bluestein chirp-z transform for arbitrary n, built on the radix-2 core.
inline void fft_bluestein(std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    const std::size_t m = next_power_of_two(2 * n + 1);
    const double sign = inverse ? 1.0 : -1.0;

    std::vector<std::complex<double>> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the phase argument small
        double kk = static_cast<double>((static_cast<unsigned long long>(k) * k) % (2 * n));
        double ang = sign * std::numbers::pi * kk / static_cast<double>(n);
        chirp[k] = std::complex<double>(std::cos(ang), std::sin(ang));
    }

    std::vector<std::complex<double>> a(m, 0.0), b(m, 0.0);
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);

    fft_radix2(a, false);
    fft_radix2(b, false);
    for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
    fft_radix2(a, true);

    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    if (inverse) {
        for (auto& v : x) v /= static_cast<double>(n);
    }
}

}  // namespace detail

/// In-place DFT of arbitrary length (radix-2 when possible, Bluestein
/// otherwise). Forward transform is unnormalized; the inverse divides by n.
inline void fft(std::vector<std::complex<double>>& x, bool inverse = false) {
    if (x.empty()) throw DomainError("fft: empty input");
    if (detail::is_power_of_two(x.size()))
        detail::fft_radix2(x, inverse);
    else
        detail::fft_bluestein(x, inverse);
}

}  // namespace maserrx
