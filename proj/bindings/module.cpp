// Python bindings for the native core. Arrays cross the boundary as copies:
// images and measurements are small, and copying keeps the f64 tape fully
// owned by C++.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "lsi/dataset.hpp"
#include "lsi/decoder.hpp"
#include "lsi/encoder.hpp"
#include "lsi/errors.hpp"
#include "lsi/fsi.hpp"
#include "lsi/metrics.hpp"
#include "lsi/optical.hpp"
#include "lsi/rng.hpp"
#include "lsi/runs.hpp"
#include "lsi/sensor.hpp"
#include "lsi/tensor.hpp"

namespace py = pybind11;
using namespace lsi;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const Array& arr) {
    Shape shape;
    for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape.push_back(static_cast<int>(arr.shape(i)));
    const double* ptr = arr.data();
    return Tensor::from_data(std::move(shape), std::vector<double>(ptr, ptr + arr.size()));
}

Array array_from(const Tensor& t) {
    std::vector<py::ssize_t> shape;
    for (int s : t.shape()) shape.push_back(s);
    Array arr(shape);
    const auto v = t.values();
    std::copy(v.begin(), v.end(), arr.mutable_data());
    return arr;
}

// Accepts [H,W] or [C,H,W]; returns a [C,H,W] tensor.
Tensor image_from(const Array& arr) {
    if (arr.ndim() == 2) {
        Tensor flat = tensor_from(arr);
        return reshape(flat, Shape{1, static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1))});
    }
    if (arr.ndim() == 3) return tensor_from(arr);
    throw DimensionError("image array must be [H,W] or [C,H,W]");
}

struct PySystem {
    System sys;

    explicit PySystem(const std::string& path) : sys(load_system(path)) {}

    int d() const { return sys.optical.d; }
    int image_size() const { return sys.dec_cfg.image_size; }
    int levels() const { return sys.dec_cfg.levels; }
    int latent_channels() const { return sys.dec_cfg.c_lat; }

    Array measure_image(const Array& image) const {
        NoGradGuard guard;
        return array_from(measure(sys.optical, image_from(image)));
    }

    Array encode(const Array& measurements) const {
        NoGradGuard guard;
        return array_from(sys.digital.encode(tensor_from(measurements)));
    }

    Array decode(const Array& z) const {
        NoGradGuard guard;
        Tensor zt = tensor_from(z);
        if (zt.shape().size() == 2)
            zt = reshape(zt, Shape{1, zt.dim(0), zt.dim(1)});
        const Tensor img = sys.generator.forward(zt);
        const auto& s = img.shape();
        return array_from(reshape(img, Shape{s[1], s[2], s[3]}));
    }

    Array invert(const Array& image) const {
        NoGradGuard guard;
        Tensor img = image_from(image);
        const Tensor batched = reshape(img, Shape{1, img.dim(0), img.dim(1), img.dim(2)});
        const Tensor z = sys.inversion.forward(batched);
        return array_from(reshape(z, Shape{z.dim(1), z.dim(2)}));
    }

    Array reconstruct(const Array& image) const {
        return decode(encode(measure_image(image)));
    }

    Array masks() const {
        NoGradGuard guard;
        const Tensor bin = binarized_masks(sys.optical);
        return array_from(reshape(bin, Shape{sys.optical.d, sys.optical.m, sys.optical.n}));
    }

    std::vector<int> occupancy() const { return occupancy_histogram(sys.optical); }
};

SensorModel sensor_model(double gain, double bias, double read_sigma, double shot_scale,
                         double sat_strength, int adc_bits, double adc_lo, double adc_hi,
                         std::uint64_t seed) {
    SensorModel m;
    m.gain = gain;
    m.bias = bias;
    m.read_sigma = read_sigma;
    m.shot_scale = shot_scale;
    m.sat_strength = sat_strength;
    m.adc_bits = adc_bits;
    m.adc_lo = adc_lo;
    m.adc_hi = adc_hi;
    m.seed = seed;
    m.validate();
    return m;
}

} // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "native core: binary-mask measurement, latent encoding, generative reconstruction";

    py::register_exception<ConfigError>(mod, "ConfigError");
    py::register_exception<DimensionError>(mod, "DimensionError");
    py::register_exception<IoError>(mod, "IoError");

    py::class_<PySystem>(mod, "System", "trained measurement-to-image pipeline loaded from a checkpoint")
        .def(py::init<const std::string&>(), py::arg("path"))
        .def_property_readonly("d", &PySystem::d, "number of measurement masks")
        .def_property_readonly("image_size", &PySystem::image_size)
        .def_property_readonly("levels", &PySystem::levels)
        .def_property_readonly("latent_channels", &PySystem::latent_channels)
        .def("measure", &PySystem::measure_image, py::arg("image"),
             "ideal mask readings for an image, shape [d]")
        .def("encode", &PySystem::encode, py::arg("measurements"),
             "latent stack [levels, latent_channels] from a measurement vector")
        .def("decode", &PySystem::decode, py::arg("z"), "image [C,H,W] from a latent stack")
        .def("invert", &PySystem::invert, py::arg("image"),
             "reference latents from the frozen inversion encoder")
        .def("reconstruct", &PySystem::reconstruct, py::arg("image"),
             "measure, encode, and decode in one call")
        .def("masks", &PySystem::masks, "binary masks as a [d, m, n] array")
        .def("occupancy", &PySystem::occupancy, "per-mask one-counts");

    mod.def("autoencoder_psnr", [](const std::string& path) { return load_autoencoder(path).val_psnr; },
            py::arg("path"), "held-out PSNR recorded in a pretrained autoencoder checkpoint");

    mod.def(
        "save_demo_system",
        [](const std::string& path, int d, int size, std::uint64_t seed) {
            System sys;
            sys.dec_cfg.image_size = size;
            sys.dec_cfg.channels = 1;
            sys.dec_cfg.levels = 3;
            sys.dec_cfg.c_lat = 8;
            sys.dec_cfg.const_channels = 8;
            sys.dec_cfg.level_channels = {8, 8, 8};
            sys.dec_cfg.inv_channels = {4, 4, 4};
            sys.dec_cfg.validate();
            sys.enc_cfg.d = d;
            sys.enc_cfg.l = 3;
            sys.enc_cfg.c_lat = 8;
            sys.enc_cfg.n_coarse = 1;
            sys.enc_cfg.n_mid = 1;
            sys.enc_cfg.n_fine = 1;
            sys.enc_cfg.hidden = 16;
            sys.enc_cfg.expansion = 2;
            sys.enc_cfg.input_scale = 2.0 / (size * size);
            sys.enc_cfg.validate();
            sys.optical = init_balanced(d, size, size, seed);
            sys.digital = DigitalEncoder(sys.enc_cfg, Rng::derive(seed, 1));
            sys.generator = Generator(sys.dec_cfg, Rng::derive(seed, 2));
            sys.inversion = InversionEncoder(sys.dec_cfg, Rng::derive(seed, 3));
            save_system(path, sys);
        },
        py::arg("path"), py::arg("d") = 6, py::arg("size") = 16, py::arg("seed") = 7,
        "write a small untrained system checkpoint (for demos and smoke tests)");

    mod.def("make_synthetic_faces", &make_synthetic_faces, py::arg("dir"), py::arg("count"),
            py::arg("size"), py::arg("seed"), "write a labeled synthetic face set with labels.tsv");

    mod.def(
        "read_image",
        [](const std::string& path) { return array_from(raw_to_tensor(read_image_file(path))); },
        py::arg("path"), "image file to a [C,H,W] array in [0,1]");

    mod.def(
        "write_image",
        [](const std::string& path, const Array& image) {
            write_png(path, tensor_to_raw(image_from(image)));
        },
        py::arg("path"), py::arg("image"));

    mod.def(
        "fsi_reconstruct",
        [](const Array& image, int budget) {
            const Tensor img = image_from(image);
            const int m = img.dim(1), n = img.dim(2);
            const FourierPatternSet set = select_frequencies(budget, m, n);
            const Tensor flat = reshape(img, Shape{m, n});
            return array_from(fsi_reconstruct(fsi_acquire(flat, set), set));
        },
        py::arg("image"), py::arg("budget"),
        "Fourier single-pixel reconstruction of one grayscale image under a reading budget");

    mod.def("fsi_full_budget",
            [](int m, int n) { return 3 * full_coverage_frequency_count(m, n); }, py::arg("m"),
            py::arg("n"), "reading budget that covers the full spectrum");

    mod.def(
        "sense",
        [](const Array& ideal, double gain, double bias, double read_sigma, double shot_scale,
           double sat_strength, int adc_bits, double adc_lo, double adc_hi, std::uint64_t seed,
           std::uint64_t stream) {
            const SensorModel m = sensor_model(gain, bias, read_sigma, shot_scale, sat_strength,
                                               adc_bits, adc_lo, adc_hi, seed);
            const double* ptr = ideal.data();
            return sense(m, std::vector<double>(ptr, ptr + ideal.size()), stream);
        },
        py::arg("ideal"), py::arg("gain") = 1.0, py::arg("bias") = 0.0, py::arg("read_sigma") = 0.0,
        py::arg("shot_scale") = 0.0, py::arg("sat_strength") = 0.0, py::arg("adc_bits") = 12,
        py::arg("adc_lo") = 0.0, py::arg("adc_hi") = 2048.0, py::arg("seed") = 0,
        py::arg("stream") = 0, "simulated photodiode + ADC readings for ideal dot products");

    mod.def(
        "psnr",
        [](const Array& a, const Array& b) { return psnr_db(tensor_from(a), tensor_from(b)); },
        py::arg("a"), py::arg("b"), "peak signal-to-noise ratio in dB for [0,1] arrays");

    mod.def(
        "mse", [](const Array& a, const Array& b) { return mse(tensor_from(a), tensor_from(b)); },
        py::arg("a"), py::arg("b"));
}
