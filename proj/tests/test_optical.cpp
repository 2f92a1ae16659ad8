#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "lsi/optical.hpp"
#include "lsi/rng.hpp"

using namespace lsi;

namespace {

int ones_in_row(const Tensor& logits, int row, int mn, double threshold = 0.5) {
    const auto v = logits.values();
    int count = 0;
    for (int i = 0; i < mn; ++i)
        if (v[static_cast<std::size_t>(row) * mn + i] >= threshold) ++count;
    return count;
}

OpticalEncoder encoder_with_counts(const std::vector<int>& ones, int m, int n) {
    const int mn = m * n;
    std::vector<double> logits;
    for (int count : ones) {
        for (int i = 0; i < mn; ++i) logits.push_back(i < count ? 0.9 : 0.1);
    }
    OpticalEncoder enc;
    enc.logits = Tensor::from_data({static_cast<int>(ones.size()), mn}, std::move(logits), true);
    enc.d = static_cast<int>(ones.size());
    enc.m = m;
    enc.n = n;
    return enc;
}

} // namespace

TEST_CASE("balanced init: d=1 mn=4 gives two ones") {
    const auto enc = init_balanced(1, 2, 2, 11);
    CHECK(ones_in_row(enc.logits, 0, 4) == 2);
}

TEST_CASE("balanced init: every row of d=16 mn=1024 has 512 ones") {
    const auto enc = init_balanced(16, 32, 32, 7);
    for (int j = 0; j < 16; ++j) CHECK(ones_in_row(enc.logits, j, 1024) == 512);
}

TEST_CASE("balanced init: deterministic given seed") {
    const auto a = init_balanced(4, 8, 8, 123);
    const auto b = init_balanced(4, 8, 8, 123);
    const auto av = a.logits.values();
    const auto bv = b.logits.values();
    REQUIRE(av.size() == bv.size());
    for (std::size_t i = 0; i < av.size(); ++i) CHECK(av[i] == bv[i]);

    const auto c = init_balanced(4, 8, 8, 124);
    const auto cv = c.logits.values();
    bool any_diff = false;
    for (std::size_t i = 0; i < av.size(); ++i) any_diff = any_diff || av[i] != cv[i];
    CHECK(any_diff);
}

TEST_CASE("balanced init: logits stay inside the unit interval") {
    const auto enc = init_balanced(8, 16, 16, 3);
    for (double v : enc.logits.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("balanced init: invalid geometry throws") {
    CHECK_THROWS_AS(init_balanced(0, 4, 4, 1), ConfigError);
    CHECK_THROWS_AS(init_balanced(1, 1, 1, 1), ConfigError);
    CHECK_THROWS_AS(init_balanced(17, 4, 4, 1), ConfigError);
}

TEST_CASE("binarized masks are exactly 0/1 valued") {
    const auto enc = init_balanced(6, 8, 8, 9);
    const auto bin = binarized_masks(enc);
    for (double v : bin.values()) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("measure: all-zero image gives zero vector") {
    const auto enc = init_balanced(5, 8, 8, 2);
    const auto c = measure(enc, Tensor::zeros({1, 8, 8}));
    for (double v : c.values()) CHECK(v == 0.0);
}

TEST_CASE("measure: all-ones image through balanced 1024-pixel rows gives 512") {
    const auto enc = init_balanced(4, 32, 32, 7);
    const auto c = measure(enc, Tensor::ones({1, 32, 32}));
    for (double v : c.values()) CHECK(v == doctest::Approx(512.0).epsilon(1e-12));
}

TEST_CASE("measure: matches brute-force dot products on a hand mask") {
    OpticalEncoder enc = encoder_with_counts({4, 12}, 4, 4);
    Rng rng(5);
    std::vector<double> img(16);
    for (auto& v : img) v = rng.uniform();
    const auto c = measure(enc, Tensor::from_data({1, 4, 4}, std::vector<double>(img)));

    const auto mask_bits = binarized_masks(enc);
    const auto masks = mask_bits.values();
    for (int j = 0; j < 2; ++j) {
        double dot = 0;
        for (int i = 0; i < 16; ++i) dot += masks[static_cast<std::size_t>(j) * 16 + i] * img[static_cast<std::size_t>(i)];
        CHECK(c.values()[static_cast<std::size_t>(j)] == doctest::Approx(dot).epsilon(1e-12));
    }
}

TEST_CASE("measure: RGB channels are summed before masking") {
    OpticalEncoder enc = encoder_with_counts({16}, 4, 4);
    std::vector<double> img(3 * 16, 0.25);
    const auto c = measure(enc, Tensor::from_data({3, 4, 4}, std::move(img)));
    CHECK(c.values()[0] == doctest::Approx(16 * 0.75).epsilon(1e-12));
}

TEST_CASE("measure: linear in the image") {
    const auto enc = init_balanced(3, 4, 4, 8);
    Rng rng(6);
    std::vector<double> img(16);
    for (auto& v : img) v = rng.uniform();
    const auto c1 = measure(enc, Tensor::from_data({1, 4, 4}, std::vector<double>(img)));
    for (auto& v : img) v *= 0.37;
    const auto c2 = measure(enc, Tensor::from_data({1, 4, 4}, std::vector<double>(img)));
    for (int j = 0; j < 3; ++j)
        CHECK(c2.values()[static_cast<std::size_t>(j)] ==
              doctest::Approx(0.37 * c1.values()[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

TEST_CASE("measure: shape mismatch throws") {
    const auto enc = init_balanced(2, 4, 4, 1);
    CHECK_THROWS_AS(measure(enc, Tensor::zeros({1, 5, 5})), DimensionError);
}

TEST_CASE("measure_flat agrees with measure") {
    const auto enc = init_balanced(3, 4, 4, 14);
    Rng rng(15);
    std::vector<double> img(16);
    for (auto& v : img) v = rng.uniform();
    const auto one = measure(enc, Tensor::from_data({1, 4, 4}, std::vector<double>(img)));
    const auto flat = measure_flat(enc, Tensor::from_data({1, 16}, std::vector<double>(img)));
    for (int j = 0; j < 3; ++j)
        CHECK(flat.values()[static_cast<std::size_t>(j)] ==
              doctest::Approx(one.values()[static_cast<std::size_t>(j)]).epsilon(1e-12));
}

TEST_CASE("ramp counts: prefix and cycling") {
    const auto prefix = ramp_counts(3, 100);
    CHECK(prefix == std::vector<int>{10, 11, 12});

    const auto ramp = ramp_counts(81, 100);
    std::vector<int> sorted = ramp;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 81; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == 10 + i);

    const auto doubled = ramp_counts(162, 100);
    std::map<int, int> tally;
    for (int v : doubled) ++tally[v];
    CHECK(tally.size() == 81);
    for (const auto& [value, count] : tally) {
        (void)value;
        CHECK(count == 2);
    }
}

TEST_CASE("energy targets: shuffled ramp keeps the multiset") {
    const auto t = energy_targets(81, 100, 42);
    std::vector<int> sorted = t.eps;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 81; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == 10 + i);

    const auto again = energy_targets(81, 100, 42);
    CHECK(t.eps == again.eps);
    const auto other = energy_targets(81, 100, 43);
    CHECK(t.eps != other.eps);
}

TEST_CASE("energy targets: fractions follow counts") {
    const auto t = energy_targets(12, 1024, 9);
    REQUIRE(t.eps.size() == 12);
    REQUIRE(t.fractions.size() == 12);
    for (std::size_t j = 0; j < 12; ++j)
        CHECK(t.eps[j] == static_cast<int>(std::lround(t.fractions[j] * 1024)));
}

TEST_CASE("energy loss: zero when every row hits its target") {
    OpticalEncoder enc = encoder_with_counts({512, 290}, 32, 32);
    EnergyTargets t;
    t.eps = {512, 290};
    t.fractions = {0.5, 0.28};
    CHECK(energy_loss(enc, t).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("energy loss: hand-computed mean absolute gap") {
    OpticalEncoder enc = encoder_with_counts({500, 300}, 32, 32);
    EnergyTargets t;
    t.eps = {512, 290};
    t.fractions = {0.5, 0.28};
    CHECK(energy_loss(enc, t).item() == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(energy_loss(enc, t, true).item() == doctest::Approx(11.0 / 1024.0).epsilon(1e-12));
}

TEST_CASE("energy loss: permuting rows with their targets is invariant") {
    OpticalEncoder a = encoder_with_counts({500, 300, 707}, 32, 32);
    OpticalEncoder b = encoder_with_counts({707, 500, 300}, 32, 32);
    EnergyTargets ta, tb;
    ta.eps = {512, 290, 700};
    tb.eps = {700, 512, 290};
    ta.fractions = tb.fractions = {0, 0, 0};
    CHECK(energy_loss(a, ta).item() == doctest::Approx(energy_loss(b, tb).item()).epsilon(1e-12));
}

TEST_CASE("energy loss: gradient reaches the logits through the binarization") {
    OpticalEncoder enc = encoder_with_counts({500, 300}, 32, 32);
    EnergyTargets t;
    t.eps = {512, 290};
    t.fractions = {0.5, 0.28};
    auto loss = energy_loss(enc, t);
    loss.backward();
    const auto g = enc.logits.grad();
    double sum_abs = 0;
    for (double v : g) sum_abs += std::fabs(v);
    CHECK(sum_abs > 0.0);
    // Row 0 sits below its target, so more ones are wanted: d|row_sum - eps|/d(entry) = -1/d.
    CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-12));
    // Row 1 sits above its target: +1/d.
    CHECK(g[1024] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("energy loss: mismatched target count throws") {
    OpticalEncoder enc = encoder_with_counts({500}, 32, 32);
    EnergyTargets t;
    t.eps = {512, 290};
    CHECK_THROWS_AS(energy_loss(enc, t), DimensionError);
}

TEST_CASE("occupancy histogram: balanced init is constant at mn/2") {
    const auto enc = init_balanced(6, 16, 16, 21);
    for (int count : occupancy_histogram(enc)) CHECK(count == 128);
}

TEST_CASE("occupancy histogram: all-ones logits count every pixel") {
    OpticalEncoder enc;
    enc.logits = Tensor::from_data({2, 16}, std::vector<double>(32, 1.0), true);
    enc.d = 2;
    enc.m = 4;
    enc.n = 4;
    const auto hist = occupancy_histogram(enc);
    CHECK(hist == std::vector<int>{16, 16});
}
