#pragma once

#include <cstdint>
#include <vector>

#include "lsi/optical.hpp"
#include "lsi/tensor.hpp"

namespace lsi {

/// Photodiode + ADC model: affine response, optional shot/read noise,
/// optional soft saturation, range clipping, uniform quantization.
struct SensorModel {
    double gain = 1.0;
    double bias = 0.0;
    double read_sigma = 0.0; // Gaussian noise std, in output volts
    double shot_scale = 0.0; // photons per radiance unit; 0 disables shot noise
    double sat_strength = 0.0; // 0 disables the tanh soft-saturation stage
    int adc_bits = 12;
    double adc_lo = 0.0;
    double adc_hi = 2048.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Simulated readings for a vector of ideal dot products. `stream`
/// separates noise draws of different images deterministically.
std::vector<double> sense(const SensorModel& model, const std::vector<double>& c_ideal, std::uint64_t stream = 0);

double sense_one(const SensorModel& model, double c_ideal, std::uint64_t stream = 0);

/// Global scale correction from a white (all-ones) scene: ratio of expected
/// mask one-counts to measured readings. Multiply subsequent readings by the
/// returned factor.
double calibrate_white(const SensorModel& model, const OpticalEncoder& enc);

} // namespace lsi
