#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "lsi/tensor.hpp"

namespace lsi {

/// Sinusoidal illumination patterns for Fourier single-pixel imaging. Each
/// selected frequency is probed with three phase-shifted patterns, so the
/// reading budget is 3 * freqs.size().
struct FourierPatternSet {
    struct Freq {
        int sx; // signed wave number along x, cycles per image width
        int sy; // signed wave number along y, cycles per image height
    };
    std::vector<Freq> freqs;
    int m = 0;
    int n = 0;
    double a = 0.5;
    double b = 0.5;

    static constexpr double kPhases[3] = {0.0, 2.0943951023931953, 4.1887902047863905}; // 0, 2pi/3, 4pi/3
};

/// Lowest-radius non-conjugate frequencies fitting the reading budget
/// (three readings per frequency). DC comes first; ties break by
/// (f_y, f_x) lexicographic order.
FourierPatternSet select_frequencies(int budget_measurements, int m, int n);

/// P(x, y) = a + b cos(2 pi f_x x + 2 pi f_y y + phase), f in cycles/pixel.
Tensor make_pattern(double f_x, double f_y, double phase, int m, int n, double a = 0.5, double b = 0.5);

/// Per-frequency complex coefficients from three-step phase shifting.
/// `reading_hook`, when set, maps each ideal dot product to a sensed value.
std::vector<std::complex<double>> fsi_acquire(const Tensor& image, const FourierPatternSet& set,
                                              const std::function<double(double)>& reading_hook = {});

/// Inverse-transform reconstruction from the measured coefficients, with
/// Hermitian completion of unmeasured mirror bins; output clamped to [0,1].
Tensor fsi_reconstruct(const std::vector<std::complex<double>>& coeffs, const FourierPatternSet& set);

/// Number of frequencies needed to cover every distinct bin of an m x n
/// spectrum once conjugates are folded (full-coverage reconstruction).
int full_coverage_frequency_count(int m, int n);

} // namespace lsi
