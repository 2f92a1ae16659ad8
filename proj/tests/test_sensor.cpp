#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "lsi/optical.hpp"
#include "lsi/sensor.hpp"

using namespace lsi;

namespace {

SensorModel clean_wide() {
    SensorModel m;
    m.adc_bits = 16;
    m.adc_lo = 0.0;
    m.adc_hi = 1024.0;
    return m;
}

} // namespace

TEST_CASE("noise-free unit-gain readings reproduce the input within one step") {
    const auto model = clean_wide();
    const double step = (model.adc_hi - model.adc_lo) / ((1 << model.adc_bits) - 1);
    const std::vector<double> c = {0.0, 0.37, 12.5, 512.0, 1023.9};
    const auto out = sense(model, c);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(out[i] - c[i]) <= 0.5 * step + 1e-12);
}

TEST_CASE("gain and bias act affinely before quantization") {
    auto model = clean_wide();
    model.gain = 2.0;
    model.bias = 3.0;
    const double step = (model.adc_hi - model.adc_lo) / ((1 << model.adc_bits) - 1);
    const auto out = sense(model, {10.0, 100.0});
    CHECK(std::abs(out[0] - 23.0) <= 0.5 * step + 1e-12);
    CHECK(std::abs(out[1] - 203.0) <= 0.5 * step + 1e-12);
}

TEST_CASE("zero radiance reads back the quantized bias") {
    auto model = clean_wide();
    model.bias = 7.25;
    const double step = (model.adc_hi - model.adc_lo) / ((1 << model.adc_bits) - 1);
    CHECK(std::abs(sense_one(model, 0.0) - 7.25) <= 0.5 * step + 1e-12);
}

TEST_CASE("negative radiance is rejected") {
    const auto model = clean_wide();
    CHECK_THROWS_AS(sense(model, {-0.1}), DomainError);
}

TEST_CASE("readings clip to the converter range") {
    auto model = clean_wide();
    model.gain = 1.0;
    const auto out = sense(model, {5000.0});
    CHECK(out[0] == model.adc_hi);
    model.bias = -10.0;
    CHECK(sense_one(model, 1.0) == model.adc_lo);
}

TEST_CASE("quantization error is bounded by the step size") {
    SensorModel model;
    model.adc_bits = 8;
    model.adc_lo = 0.0;
    model.adc_hi = 1.0;
    const double step = 1.0 / 255.0;
    for (double c : {0.001, 0.123, 0.5004, 0.9991}) {
        const double out = sense_one(model, c);
        CHECK(std::abs(out - c) <= 0.5 * step + 1e-12);
        const double q = (out - model.adc_lo) / step;
        CHECK(std::abs(q - std::round(q)) < 1e-9);
    }
}

TEST_CASE("noise-free response is monotone in radiance") {
    auto model = clean_wide();
    model.sat_strength = 0.6;
    double prev = -1.0;
    for (double c = 0.0; c <= 1200.0; c += 7.3) {
        const double out = sense_one(model, c);
        CHECK(out >= prev);
        prev = out;
    }
}

TEST_CASE("soft saturation compresses high readings but spares low ones") {
    auto model = clean_wide();
    const double lo_plain = sense_one(model, 20.0);
    const double hi_plain = sense_one(model, 900.0);
    model.sat_strength = 0.8;
    const double lo_sat = sense_one(model, 20.0);
    const double hi_sat = sense_one(model, 900.0);
    CHECK(hi_sat < hi_plain);
    CHECK(std::abs(lo_sat - lo_plain) < std::abs(hi_sat - hi_plain));
}

TEST_CASE("read noise statistics match the configured sigma") {
    auto model = clean_wide();
    model.read_sigma = 2.0;
    const int trials = 10000;
    std::vector<double> c(trials, 500.0);
    const auto out = sense(model, c, /*stream=*/1);
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= trials;
    double var = 0.0;
    for (double v : out) var += (v - mean) * (v - mean);
    var /= trials - 1;
    CHECK(std::abs(mean - 500.0) < 0.1);
    CHECK(std::abs(std::sqrt(var) - 2.0) < 0.4);
}

TEST_CASE("shot noise scales with the photon budget") {
    auto model = clean_wide();
    model.shot_scale = 100.0; // 100 photons per radiance unit
    const int trials = 8000;
    const double c0 = 50.0; // 5000 photons -> relative sd ~1.4%
    const auto out = sense(model, std::vector<double>(trials, c0), /*stream=*/2);
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= trials;
    double var = 0.0;
    for (double v : out) var += (v - mean) * (v - mean);
    var /= trials - 1;
    CHECK(std::abs(mean - c0) < 0.05 * c0);
    // variance of poisson(c*s)/s is c/s
    CHECK(std::abs(var - c0 / model.shot_scale) < 0.2 * c0 / model.shot_scale);
}

TEST_CASE("identical streams repeat and different streams differ") {
    auto model = clean_wide();
    model.read_sigma = 1.0;
    model.seed = 77;
    const std::vector<double> c(32, 100.0);
    const auto a = sense(model, c, 5);
    const auto b = sense(model, c, 5);
    const auto d = sense(model, c, 6);
    CHECK(a == b);
    CHECK(a != d);
}

TEST_CASE("model validation rejects nonsense") {
    auto model = clean_wide();
    model.adc_bits = 4;
    CHECK_THROWS_AS(model.validate(), ConfigError);
    model = clean_wide();
    model.adc_hi = model.adc_lo;
    CHECK_THROWS_AS(model.validate(), ConfigError);
    model = clean_wide();
    model.read_sigma = -1.0;
    CHECK_THROWS_AS(model.validate(), ConfigError);
}

TEST_CASE("white calibration inverts a pure gain error exactly") {
    auto enc = init_balanced(8, 32, 32, 1);
    SensorModel model; // unit-step converter: integer counts quantize losslessly
    model.adc_bits = 16;
    model.adc_lo = 0.0;
    model.adc_hi = 65535.0;
    model.gain = 2.0;
    CHECK(calibrate_white(model, enc) == doctest::Approx(0.5).epsilon(1e-12));
    model.gain = 1.0;
    CHECK(calibrate_white(model, enc) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("white calibration lands within one percent at realistic settings") {
    auto enc = init_balanced(16, 32, 32, 2);
    SensorModel model;
    model.gain = 1.37;
    model.bias = 0.0;
    model.adc_bits = 12;
    model.adc_lo = 0.0;
    model.adc_hi = 2048.0;
    const double s = calibrate_white(model, enc);
    CHECK(std::abs(s * model.gain - 1.0) < 0.01);
}

TEST_CASE("a dead sensor cannot be calibrated") {
    auto enc = init_balanced(4, 32, 32, 3);
    SensorModel model;
    model.gain = 0.0;
    model.bias = 0.0;
    CHECK_THROWS_AS(calibrate_white(model, enc), CalibrationError);
}
