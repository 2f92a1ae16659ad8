#include "lsi/fsi.hpp"

#include <algorithm>
#include <cmath>

namespace lsi {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

int wrap_signed(int k, int size) { return k > size / 2 ? k - size : k; } // bin -> signed wave number

struct Candidate {
    int sx, sy;
    double r2;
};

std::vector<Candidate> canonical_bins(int m, int n) {
    std::vector<Candidate> out;
    for (int ky = 0; ky < m; ++ky) {
        for (int kx = 0; kx < n; ++kx) {
            const int my = (m - ky) % m, mx = (n - kx) % n;
            if (std::pair(ky, kx) > std::pair(my, mx)) continue; // keep one of each conjugate pair
            const int sy = wrap_signed(ky, m), sx = wrap_signed(kx, n);
            const double fy = static_cast<double>(sy) / m, fx = static_cast<double>(sx) / n;
            out.push_back({sx, sy, fx * fx + fy * fy});
        }
    }
    std::sort(out.begin(), out.end(), [m, n](const Candidate& a, const Candidate& b) {
        if (a.r2 != b.r2) return a.r2 < b.r2;
        const double afy = static_cast<double>(a.sy) / m, bfy = static_cast<double>(b.sy) / m;
        if (afy != bfy) return afy < bfy;
        return static_cast<double>(a.sx) / n < static_cast<double>(b.sx) / n;
    });
    return out;
}

} // namespace

int full_coverage_frequency_count(int m, int n) { return static_cast<int>(canonical_bins(m, n).size()); }

FourierPatternSet select_frequencies(int budget_measurements, int m, int n) {
    if (m < 1 || n < 1) throw ConfigError("pattern grid must be positive");
    if (budget_measurements < 3) throw ConfigError("budget below 3 readings cannot probe any frequency");
    const int want = budget_measurements / 3;
    auto bins = canonical_bins(m, n);
    FourierPatternSet set;
    set.m = m;
    set.n = n;
    const int count = std::min<int>(want, static_cast<int>(bins.size()));
    set.freqs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) set.freqs.push_back({bins[static_cast<std::size_t>(i)].sx,
                                                         bins[static_cast<std::size_t>(i)].sy});
    return set;
}

Tensor make_pattern(double f_x, double f_y, double phase, int m, int n, double a, double b) {
    if (m < 1 || n < 1) throw ConfigError("pattern grid must be positive");
    if (a - b < -1e-12 || a + b > 1.0 + 1e-12) throw ConfigError("pattern intensity range must stay within [0,1]");
    std::vector<double> data(static_cast<std::size_t>(m) * n);
    for (int y = 0; y < m; ++y)
        for (int x = 0; x < n; ++x)
            data[static_cast<std::size_t>(y) * n + x] = a + b * std::cos(kTwoPi * (f_x * x + f_y * y) + phase);
    return Tensor::from_data({m, n}, std::move(data));
}

std::vector<std::complex<double>> fsi_acquire(const Tensor& image, const FourierPatternSet& set,
                                              const std::function<double(double)>& reading_hook) {
    if (image.shape() != Shape{set.m, set.n}) throw DimensionError("fsi_acquire: image does not match pattern grid");
    const auto img = image.values();
    std::vector<std::complex<double>> coeffs;
    coeffs.reserve(set.freqs.size());
    const double sqrt3 = std::sqrt(3.0);
    for (const auto& f : set.freqs) {
        const double fx = static_cast<double>(f.sx) / set.n;
        const double fy = static_cast<double>(f.sy) / set.m;
        double d[3];
        for (int p = 0; p < 3; ++p) {
            auto pattern = make_pattern(fx, fy, FourierPatternSet::kPhases[p], set.m, set.n, set.a, set.b);
            const auto pv = pattern.values();
            double dot = 0.0;
            for (std::size_t i = 0; i < pv.size(); ++i) dot += pv[i] * img[i];
            d[p] = reading_hook ? reading_hook(dot) : dot;
        }
        coeffs.emplace_back(2.0 * d[0] - d[1] - d[2], sqrt3 * (d[1] - d[2]));
    }
    return coeffs;
}

Tensor fsi_reconstruct(const std::vector<std::complex<double>>& coeffs, const FourierPatternSet& set) {
    if (coeffs.size() != set.freqs.size()) throw DimensionError("fsi_reconstruct: coefficient count mismatch");
    const int m = set.m, n = set.n;
    std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(m) * n, {0.0, 0.0});
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const auto& f = set.freqs[i];
        const int ky = (f.sy % m + m) % m;
        const int kx = (f.sx % n + n) % n;
        const std::complex<double> value = coeffs[i] / (3.0 * set.b);
        spectrum[static_cast<std::size_t>(ky) * n + kx] = value;
        const int my = (m - ky) % m, mx = (n - kx) % n;
        if (my != ky || mx != kx) spectrum[static_cast<std::size_t>(my) * n + mx] = std::conj(value);
    }
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    // Separable inverse transform: rows first, then columns.
    std::vector<std::complex<double>> rows(static_cast<std::size_t>(m) * n, {0.0, 0.0});
    for (int ky = 0; ky < m; ++ky) {
        for (int x = 0; x < n; ++x) {
            std::complex<double> acc{0.0, 0.0};
            for (int kx = 0; kx < n; ++kx) {
                const double ang = kTwoPi * kx * x / n;
                acc += spectrum[static_cast<std::size_t>(ky) * n + kx] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            rows[static_cast<std::size_t>(ky) * n + x] = acc;
        }
    }
    for (int y = 0; y < m; ++y) {
        for (int x = 0; x < n; ++x) {
            std::complex<double> acc{0.0, 0.0};
            for (int ky = 0; ky < m; ++ky) {
                const double ang = kTwoPi * ky * y / m;
                acc += rows[static_cast<std::size_t>(ky) * n + x] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            const double v = acc.real() / (m * n);
            out[static_cast<std::size_t>(y) * n + x] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
    }
    return Tensor::from_data({m, n}, std::move(out));
}

} // namespace lsi
