#include "lsi/sensor.hpp"

#include <cmath>

#include "lsi/rng.hpp"

namespace lsi {

void SensorModel::validate() const {
    if (adc_bits < 8 || adc_bits > 16) throw ConfigError("adc_bits must be within [8,16]");
    if (!(adc_hi > adc_lo)) throw ConfigError("adc range must have hi > lo");
    if (read_sigma < 0.0 || shot_scale < 0.0 || sat_strength < 0.0)
        throw ConfigError("noise parameters must be non-negative");
}

std::vector<double> sense(const SensorModel& model, const std::vector<double>& c_ideal, std::uint64_t stream) {
    model.validate();
    Rng rng(Rng::derive(model.seed, stream));
    const double levels = static_cast<double>((1u << model.adc_bits) - 1u);
    const double range = model.adc_hi - model.adc_lo;
    std::vector<double> out(c_ideal.size());
    for (std::size_t i = 0; i < c_ideal.size(); ++i) {
        const double c = c_ideal[i];
        if (c < 0.0) throw DomainError("sense: radiance values must be non-negative");
        double flux = c;
        if (model.shot_scale > 0.0)
            flux = static_cast<double>(rng.poisson(c * model.shot_scale)) / model.shot_scale;
        double v = model.gain * flux + model.bias;
        if (model.read_sigma > 0.0) v += rng.normal(0.0, model.read_sigma);
        if (model.sat_strength > 0.0) {
            // soft knee toward the rail; strength 1 is pure tanh compression
            const double x = (v - model.adc_lo) / range;
            const double soft = std::tanh(x);
            v = model.adc_lo + range * ((1.0 - model.sat_strength) * x + model.sat_strength * soft);
        }
        v = v < model.adc_lo ? model.adc_lo : (v > model.adc_hi ? model.adc_hi : v);
        const double q = std::round((v - model.adc_lo) / range * levels);
        out[i] = model.adc_lo + q / levels * range;
    }
    return out;
}

double sense_one(const SensorModel& model, double c_ideal, std::uint64_t stream) {
    return sense(model, std::vector<double>{c_ideal}, stream)[0];
}

double calibrate_white(const SensorModel& model, const OpticalEncoder& enc) {
    const auto counts = occupancy_histogram(enc);
    std::vector<double> expected(counts.begin(), counts.end());
    const auto measured = sense(model, expected, /*stream=*/~0ull);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        num += expected[i];
        den += measured[i];
    }
    if (den == 0.0) throw CalibrationError("white-image readings sum to zero; cannot derive a scale");
    return num / den;
}

} // namespace lsi
