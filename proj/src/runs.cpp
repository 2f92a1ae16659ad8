#include "lsi/runs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "lsi/checkpoint.hpp"
#include "lsi/dataset.hpp"
#include "lsi/fsi.hpp"
#include "lsi/losses.hpp"
#include "lsi/metrics.hpp"
#include "lsi/sensor.hpp"
#include "lsi/training.hpp"

namespace fs = std::filesystem;

namespace lsi {

namespace {

std::vector<int> parse_int_list(const std::string& raw, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(raw);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' must be a comma-separated integer list");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' must not be empty");
    return out;
}

std::string make_run_dir(const std::string& sub, std::uint64_t seed, const std::string& out_dir) {
    std::string dir = out_dir;
    if (dir.empty()) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
        dir = "runs/" + sub + "-" + stamp + "-seed" + std::to_string(seed);
    }
    fs::create_directories(dir);
    return dir;
}

DecoderConfig decoder_config_from(const RunConfig& cfg) {
    DecoderConfig dec;
    dec.image_size = cfg.get_int("data.size");
    dec.channels = cfg.get_int("data.channels");
    dec.levels = cfg.get_int("decoder.levels");
    dec.c_lat = cfg.get_int("decoder.c_lat");
    dec.const_channels = cfg.get_int("decoder.const_channels");
    dec.level_channels = parse_int_list(cfg.get("decoder.level_channels"), "decoder.level_channels");
    dec.inv_channels = parse_int_list(cfg.get("decoder.inv_channels"), "decoder.inv_channels");
    dec.validate();
    return dec;
}

EncoderConfig encoder_config_from(const RunConfig& cfg, int d, const DecoderConfig& dec) {
    EncoderConfig enc;
    enc.d = d;
    enc.l = dec.levels;
    enc.c_lat = dec.c_lat;
    const auto split = parse_int_list(cfg.get("encoder.split"), "encoder.split");
    if (split.size() != 3) throw ConfigError("encoder.split must have three entries");
    enc.n_coarse = split[0];
    enc.n_mid = split[1];
    enc.n_fine = split[2];
    const auto depths = parse_int_list(cfg.get("encoder.depths"), "encoder.depths");
    if (depths.size() != 3) throw ConfigError("encoder.depths must have three entries");
    enc.depth_coarse = depths[0];
    enc.depth_mid = depths[1];
    enc.depth_fine = depths[2];
    enc.hidden = cfg.get_int("encoder.hidden");
    enc.expansion = cfg.get_int("encoder.expansion");
    const double scale = cfg.get_double("encoder.input_scale");
    const double mn = static_cast<double>(dec.image_size) * dec.image_size;
    enc.input_scale = scale > 0 ? scale : 2.0 / mn; // 0 = auto: balanced masks sum ~half the pixels
    enc.validate();
    return enc;
}

SensorModel sensor_from(const RunConfig& cfg) {
    SensorModel model;
    model.gain = cfg.get_double("sensor.gain");
    model.bias = cfg.get_double("sensor.bias");
    model.read_sigma = cfg.get_double("sensor.read_sigma");
    model.shot_scale = cfg.get_double("sensor.shot_scale");
    model.sat_strength = cfg.get_double("sensor.sat_strength");
    model.adc_bits = cfg.get_int("sensor.adc_bits");
    model.adc_lo = cfg.get_double("sensor.adc_lo");
    model.adc_hi = cfg.get_double("sensor.adc_hi");
    model.seed = cfg.get_seed("sensor.seed");
    model.validate();
    return model;
}

Dataset dataset_from(const RunConfig& cfg) {
    const int size = cfg.get_int("data.size");
    return load_dataset(cfg.get("data.dir"), size, size, cfg.get_int("data.channels"),
                        cfg.get_seed("data.seed"), cfg.get_int("data.min_images"));
}

void append_decoder_meta(NamedTensors& entries, const DecoderConfig& dec) {
    put_meta(entries, "image_size", dec.image_size);
    put_meta(entries, "channels", dec.channels);
    put_meta(entries, "levels", dec.levels);
    put_meta(entries, "c_lat", dec.c_lat);
    put_meta(entries, "const_channels", dec.const_channels);
    for (std::size_t i = 0; i < dec.level_channels.size(); ++i)
        put_meta(entries, "level_ch" + std::to_string(i), dec.level_channels[i]);
    for (std::size_t i = 0; i < dec.inv_channels.size(); ++i)
        put_meta(entries, "inv_ch" + std::to_string(i), dec.inv_channels[i]);
}

DecoderConfig read_decoder_meta(const std::map<std::string, Tensor>& loaded) {
    DecoderConfig dec;
    dec.image_size = static_cast<int>(get_meta(loaded, "image_size"));
    dec.channels = static_cast<int>(get_meta(loaded, "channels"));
    dec.levels = static_cast<int>(get_meta(loaded, "levels"));
    dec.c_lat = static_cast<int>(get_meta(loaded, "c_lat"));
    dec.const_channels = static_cast<int>(get_meta(loaded, "const_channels"));
    dec.level_channels.assign(static_cast<std::size_t>(dec.levels), 0);
    for (int i = 0; i < dec.levels; ++i)
        dec.level_channels[static_cast<std::size_t>(i)] =
            static_cast<int>(get_meta(loaded, "level_ch" + std::to_string(i)));
    dec.inv_channels.clear();
    for (int i = 0; has_meta(loaded, "inv_ch" + std::to_string(i)); ++i)
        dec.inv_channels.push_back(static_cast<int>(get_meta(loaded, "inv_ch" + std::to_string(i))));
    dec.validate();
    return dec;
}

void require_file(const std::string& path, const std::string& key, const std::string& producer) {
    if (path.empty())
        throw ConfigError("config key '" + key + "' is empty; run `" + producer +
                          "` first and point it at the produced checkpoint");
    if (!fs::exists(path))
        throw ConfigError("checkpoint '" + path + "' not found; run `" + producer + "` first");
}

std::vector<double> to_vector(const Tensor& t) {
    const auto v = t.values();
    return std::vector<double>(v.begin(), v.end());
}

/// Ideal (noise-free) measurement of one [C,m,n] image through the binary masks.
std::vector<double> ideal_measurement(const OpticalEncoder& enc, const Tensor& image) {
    NoGradGuard guard;
    return to_vector(measure(enc, image));
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

} // namespace

void save_system(const std::string& path, const System& sys) {
    NamedTensors entries;
    entries.emplace_back("mask.logits", sys.optical.logits);
    const NamedTensors enc_params = sys.digital.named_parameters("enc.");
    entries.insert(entries.end(), enc_params.begin(), enc_params.end());
    const NamedTensors gen_params = sys.generator.named_parameters("gen.");
    entries.insert(entries.end(), gen_params.begin(), gen_params.end());
    const NamedTensors inv_params = sys.inversion.named_parameters("inv.");
    entries.insert(entries.end(), inv_params.begin(), inv_params.end());
    append_decoder_meta(entries, sys.dec_cfg);
    put_meta(entries, "d", sys.optical.d);
    put_meta(entries, "threshold", sys.optical.threshold);
    put_meta(entries, "enc_n_coarse", sys.enc_cfg.n_coarse);
    put_meta(entries, "enc_n_mid", sys.enc_cfg.n_mid);
    put_meta(entries, "enc_n_fine", sys.enc_cfg.n_fine);
    put_meta(entries, "enc_hidden", sys.enc_cfg.hidden);
    put_meta(entries, "enc_expansion", sys.enc_cfg.expansion);
    put_meta(entries, "enc_depth_coarse", sys.enc_cfg.depth_coarse);
    put_meta(entries, "enc_depth_mid", sys.enc_cfg.depth_mid);
    put_meta(entries, "enc_depth_fine", sys.enc_cfg.depth_fine);
    put_meta(entries, "enc_input_scale", sys.enc_cfg.input_scale);
    save_checkpoint(path, entries);
}

System load_system(const std::string& path) {
    const auto loaded = load_checkpoint(path);
    System sys;
    sys.dec_cfg = read_decoder_meta(loaded);

    sys.enc_cfg.d = static_cast<int>(get_meta(loaded, "d"));
    sys.enc_cfg.l = sys.dec_cfg.levels;
    sys.enc_cfg.c_lat = sys.dec_cfg.c_lat;
    sys.enc_cfg.n_coarse = static_cast<int>(get_meta(loaded, "enc_n_coarse"));
    sys.enc_cfg.n_mid = static_cast<int>(get_meta(loaded, "enc_n_mid"));
    sys.enc_cfg.n_fine = static_cast<int>(get_meta(loaded, "enc_n_fine"));
    sys.enc_cfg.hidden = static_cast<int>(get_meta(loaded, "enc_hidden"));
    sys.enc_cfg.expansion = static_cast<int>(get_meta(loaded, "enc_expansion"));
    sys.enc_cfg.depth_coarse = static_cast<int>(get_meta(loaded, "enc_depth_coarse"));
    sys.enc_cfg.depth_mid = static_cast<int>(get_meta(loaded, "enc_depth_mid"));
    sys.enc_cfg.depth_fine = static_cast<int>(get_meta(loaded, "enc_depth_fine"));
    sys.enc_cfg.input_scale = get_meta(loaded, "enc_input_scale");
    sys.enc_cfg.validate();

    sys.optical = init_balanced(sys.enc_cfg.d, sys.dec_cfg.image_size, sys.dec_cfg.image_size, 0);
    sys.optical.threshold = get_meta(loaded, "threshold");
    load_into(loaded, {{"mask.logits", sys.optical.logits}});

    sys.digital = DigitalEncoder(sys.enc_cfg, 0);
    load_into(loaded, sys.digital.named_parameters("enc."));
    sys.generator = Generator(sys.dec_cfg, 0);
    load_into(loaded, sys.generator.named_parameters("gen."));
    sys.inversion = InversionEncoder(sys.dec_cfg, 0);
    load_into(loaded, sys.inversion.named_parameters("inv."));
    freeze(sys.generator);
    freeze(sys.inversion);
    return sys;
}

void save_autoencoder(const std::string& path, const Autoencoder& ae) {
    NamedTensors entries;
    const NamedTensors gen_params = ae.generator.named_parameters("gen.");
    entries.insert(entries.end(), gen_params.begin(), gen_params.end());
    const NamedTensors inv_params = ae.inversion.named_parameters("inv.");
    entries.insert(entries.end(), inv_params.begin(), inv_params.end());
    append_decoder_meta(entries, ae.cfg);
    put_meta(entries, "val_psnr", ae.val_psnr);
    save_checkpoint(path, entries);
}

Autoencoder load_autoencoder(const std::string& path) {
    const auto loaded = load_checkpoint(path);
    Autoencoder ae;
    ae.cfg = read_decoder_meta(loaded);
    ae.val_psnr = get_meta(loaded, "val_psnr");
    ae.generator = Generator(ae.cfg, 0);
    load_into(loaded, ae.generator.named_parameters("gen."));
    ae.inversion = InversionEncoder(ae.cfg, 0);
    load_into(loaded, ae.inversion.named_parameters("inv."));
    freeze(ae.generator);
    freeze(ae.inversion);
    return ae;
}

std::string run_make_dataset(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("make-dataset", cfg.get_seed("data.seed"), out_dir);
    cfg.write(dir + "/config.txt");
    make_synthetic_faces(cfg.get("data.dir"), cfg.get_int("data.count"), cfg.get_int("data.size"),
                         cfg.get_seed("data.seed"));
    std::cout << "wrote " << cfg.get_int("data.count") << " images to " << cfg.get("data.dir") << "\n";
    return dir;
}

std::string run_pretrain(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("pretrain", cfg.get_seed("pretrain.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const Dataset data = dataset_from(cfg);
    std::vector<Tensor> train_images, val_images;
    for (int i : data.indices(Split::train)) train_images.push_back(data.images[static_cast<std::size_t>(i)]);
    for (int i : data.indices(Split::val)) val_images.push_back(data.images[static_cast<std::size_t>(i)]);

    const DecoderConfig dec = decoder_config_from(cfg);
    PretrainConfig pre;
    pre.epochs = cfg.get_int("pretrain.epochs");
    pre.batch = cfg.get_int("pretrain.batch");
    pre.lr = cfg.get_double("pretrain.lr");
    pre.lambda_l2 = cfg.get_double("train.lambda_l2");
    pre.lambda_pips = cfg.get_double("train.lambda_pips");
    pre.patience = cfg.get_int("pretrain.patience");
    pre.min_improve = cfg.get_double("pretrain.min_improve");
    pre.seed = cfg.get_seed("pretrain.seed");

    AutoencoderBundle bundle = pretrain_autoencoder(train_images, val_images, dec, pre);

    auto log = open_csv(dir + "/pretrain_log.csv");
    log << "epoch,train_loss,val_psnr\n";
    for (std::size_t e = 0; e < bundle.report.train_loss.size(); ++e)
        log << e + 1 << ',' << bundle.report.train_loss[e] << ',' << bundle.report.val_psnr[e] << '\n';

    Autoencoder ae{dec, bundle.generator, bundle.inversion, bundle.report.final_val_psnr};
    save_autoencoder(dir + "/autoencoder.lsi", ae);
    std::cout << "pretrain: " << bundle.report.epochs_run << " epochs, val psnr "
              << bundle.report.final_val_psnr << " dB -> " << dir << "/autoencoder.lsi\n";
    return dir;
}

std::string run_train(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("train", cfg.get_seed("train.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const std::string ae_path = cfg.get("train.decoder_ckpt");
    require_file(ae_path, "train.decoder_ckpt", "pretrain");
    Autoencoder ae = load_autoencoder(ae_path);

    const Dataset data = dataset_from(cfg);
    if (data.height != ae.cfg.image_size || data.channels != ae.cfg.channels)
        throw ConfigError("dataset geometry does not match the pretrained autoencoder");

    const int d = cfg.get_int("train.d");
    const std::uint64_t seed = cfg.get_seed("train.seed");
    System sys;
    sys.dec_cfg = ae.cfg;
    sys.generator = ae.generator;
    sys.inversion = ae.inversion;
    sys.optical = init_balanced(d, ae.cfg.image_size, ae.cfg.image_size, Rng::derive(seed, 3));
    sys.enc_cfg = encoder_config_from(cfg, d, ae.cfg);
    sys.digital = DigitalEncoder(sys.enc_cfg, Rng::derive(seed, 4));

    LossWeights weights;
    weights.lat = cfg.get_double("train.lambda_lat");
    weights.id = cfg.get_double("train.lambda_id");
    weights.pips = cfg.get_double("train.lambda_pips");
    weights.l2 = cfg.get_double("train.lambda_l2");
    weights.energy = cfg.get_double("train.lambda_energy");

    TrainConfig tc;
    tc.epochs_phase1 = cfg.get_int("train.epochs_phase1");
    tc.epochs_phase2 = cfg.get_int("train.epochs_phase2");
    tc.batch = cfg.get_int("train.batch");
    tc.lr_mask = cfg.get_double("train.lr_mask");
    tc.lr_encoder = cfg.get_double("train.lr_encoder");
    tc.patience = cfg.get_int("train.patience");
    tc.min_improve = cfg.get_double("train.min_improve");
    tc.energy_normalized = cfg.get_bool("train.energy_normalized");
    tc.seed = seed;
    tc.log_path = dir + "/train_log.csv";

    const TrainReport report = train_lsi(data, sys.optical, sys.digital, sys.generator,
                                         sys.inversion, weights, tc);

    auto summary = open_csv(dir + "/train_summary.csv");
    summary << "d,epochs_phase1,epochs_phase2,val_lat_epoch1,val_lat_final,val_psnr_final,"
               "occupancy_sd_phase1,occupancy_sd_phase2\n";
    summary << d << ',' << report.epochs_phase1 << ',' << report.epochs_phase2 << ','
            << report.val_lat_epoch1 << ',' << report.val_lat_final << ',' << report.val_psnr_final
            << ',' << report.occupancy_sd_phase1 << ',' << report.occupancy_sd_phase2 << '\n';

    save_system(dir + "/system.lsi", sys);
    std::cout << "train: d=" << d << ", val latent L1 " << report.val_lat_final << ", val psnr "
              << report.val_psnr_final << " dB -> " << dir << "/system.lsi\n";
    return dir;
}

std::string run_reconstruct(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("reconstruct", cfg.get_seed("data.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const std::string ckpt = cfg.get("eval.system_ckpt");
    require_file(ckpt, "eval.system_ckpt", "train");
    System sys = load_system(ckpt);

    const std::string image_path = cfg.get("data.image");
    if (image_path.empty()) throw ConfigError("reconstruct needs data.image");
    RawImage raw = read_image_file(image_path);
    raw = center_crop_square(raw);
    Tensor img = resize_area(raw_to_tensor(raw), sys.dec_cfg.image_size, sys.dec_cfg.image_size);
    if (sys.dec_cfg.channels == 1) img = to_grayscale(img);
    if (img.shape()[0] != sys.dec_cfg.channels)
        throw ConfigError("image channel count does not match the checkpoint");

    NoGradGuard guard;
    const Tensor v = measure(sys.optical, img);
    const Tensor z = sys.digital.encode(v);
    Shape batched{1};
    for (int s : z.shape()) batched.push_back(s);
    const Tensor recon = sys.generator.forward(reshape(z, batched));
    Shape img_batched{1};
    for (int s : img.shape()) img_batched.push_back(s);
    const Tensor target = reshape(img, img_batched);
    const Tensor z_gt = sys.inversion.forward(target);
    const ReconMetrics m = reconstruction_metrics(recon, target, reshape(z, batched), z_gt);

    const std::string stem = fs::path(image_path).stem().string();
    write_png(dir + "/" + stem + "_recon.png",
              tensor_to_raw(reshape(
                  recon, Shape{sys.dec_cfg.channels, sys.dec_cfg.image_size, sys.dec_cfg.image_size})));
    auto csv = open_csv(dir + "/metrics.csv");
    csv << "psnr_db,latent_l1,pixel_l1\n";
    csv << m.psnr_db << ',' << m.latent_l1 << ',' << m.pixel_l1 << '\n';
    std::cout << "reconstruct: psnr " << m.psnr_db << " dB, latent L1 " << m.latent_l1 << " -> " << dir
              << "\n";
    return dir;
}

namespace {

Split split_from(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw ConfigError("eval.split must be train, val, or test");
}

} // namespace

std::string run_evaluate(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("evaluate", cfg.get_seed("data.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const std::string ckpt = cfg.get("eval.system_ckpt");
    require_file(ckpt, "eval.system_ckpt", "train");
    System sys = load_system(ckpt);

    const Dataset data = dataset_from(cfg);
    if (data.height != sys.dec_cfg.image_size || data.channels != sys.dec_cfg.channels)
        throw ConfigError("dataset geometry does not match the checkpoint");
    if (data.channels != 1) throw ConfigError("evaluate supports single-channel datasets");
    const std::vector<int> idx = data.indices(split_from(cfg.get("eval.split")));
    if (idx.empty()) throw ConfigError("evaluate: requested split is empty");

    NoGradGuard guard;
    auto per_image = open_csv(dir + "/eval_metrics.csv");
    per_image << "id,psnr_db,latent_l1,pixel_l1\n";

    const int zdim = sys.enc_cfg.l * sys.enc_cfg.c_lat;
    double psnr_sum = 0, lat_sum = 0, l1_sum = 0;
    int finite_psnr = 0;
    std::vector<std::vector<double>> latents, pixels;
    std::vector<int> labels;
    const std::map<std::string, int> label_map = read_labels(cfg.get("data.dir"));

    constexpr int kBatch = 64;
    for (std::size_t start = 0; start < idx.size(); start += kBatch) {
        const std::vector<int> chunk(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                     idx.begin() + static_cast<std::ptrdiff_t>(
                                                       std::min(idx.size(), start + kBatch)));
        const Tensor imgs = stack_images(data.images, chunk);
        const auto& s = imgs.shape();
        const Tensor v = measure_flat(sys.optical, reshape(imgs, Shape{s[0], s[1] * s[2] * s[3]}));
        const Tensor z_pred = sys.digital.forward(v);
        const Tensor z_gt = sys.inversion.forward(imgs);
        const Tensor recon = sys.generator.forward(z_pred);

        const auto rv = recon.values();
        const auto tv = imgs.values();
        const auto zp = z_pred.values();
        const auto zg = z_gt.values();
        const int px = s[1] * s[2] * s[3];
        for (std::size_t b = 0; b < chunk.size(); ++b) {
            double se = 0, ae = 0;
            for (int k = 0; k < px; ++k) {
                const double diff = rv[b * static_cast<std::size_t>(px) + static_cast<std::size_t>(k)] -
                                    tv[b * static_cast<std::size_t>(px) + static_cast<std::size_t>(k)];
                se += diff * diff;
                ae += std::fabs(diff);
            }
            double lz = 0;
            for (int k = 0; k < zdim; ++k)
                lz += std::fabs(zp[b * static_cast<std::size_t>(zdim) + static_cast<std::size_t>(k)] -
                                zg[b * static_cast<std::size_t>(zdim) + static_cast<std::size_t>(k)]);
            const double img_mse = se / px;
            const double psnr = img_mse > 0 ? 10.0 * std::log10(1.0 / img_mse)
                                            : std::numeric_limits<double>::infinity();
            const double lat = lz / zdim;
            const double l1 = ae / px;
            const std::string& id = data.ids[static_cast<std::size_t>(chunk[b])];
            per_image << id << ',' << psnr << ',' << lat << ',' << l1 << '\n';
            if (std::isfinite(psnr)) {
                psnr_sum += psnr;
                ++finite_psnr;
            }
            lat_sum += lat;
            l1_sum += l1;

            const auto lit = label_map.find(id);
            if (lit != label_map.end()) {
                latents.emplace_back(zp.begin() + static_cast<std::ptrdiff_t>(b * static_cast<std::size_t>(zdim)),
                                     zp.begin() + static_cast<std::ptrdiff_t>((b + 1) * static_cast<std::size_t>(zdim)));
                pixels.emplace_back(tv.begin() + static_cast<std::ptrdiff_t>(b * static_cast<std::size_t>(px)),
                                    tv.begin() + static_cast<std::ptrdiff_t>((b + 1) * static_cast<std::size_t>(px)));
                labels.push_back(lit->second);
            }
        }
    }

    const double n = static_cast<double>(idx.size());
    auto summary = open_csv(dir + "/eval_summary.csv");
    summary << "count,mean_psnr_db,mean_latent_l1,mean_pixel_l1\n";
    summary << idx.size() << ',' << (finite_psnr ? psnr_sum / finite_psnr : std::numeric_limits<double>::infinity())
            << ',' << lat_sum / n << ',' << l1_sum / n << '\n';

    if (std::set<int>(labels.begin(), labels.end()).size() >= 2) {
        const RetrievalScores scores = retrieval_proxy(latents, pixels, labels);
        auto retrieval = open_csv(dir + "/retrieval.csv");
        retrieval << "count,latent_1nn_accuracy,pixel_1nn_accuracy\n";
        retrieval << labels.size() << ',' << scores.latent_accuracy << ',' << scores.pixel_accuracy << '\n';
        std::cout << "evaluate: retrieval latent " << scores.latent_accuracy << " vs pixel "
                  << scores.pixel_accuracy << "\n";
    }

    std::cout << "evaluate: " << idx.size() << " images, mean psnr "
              << (finite_psnr ? psnr_sum / finite_psnr : 0.0) << " dB, mean latent L1 " << lat_sum / n
              << " -> " << dir << "\n";
    return dir;
}

std::string run_fsi(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("fsi", cfg.get_seed("data.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const Dataset data = dataset_from(cfg);
    if (data.channels != 1) throw ConfigError("fsi supports single-channel datasets");
    const std::vector<int> test_idx = data.indices(Split::test);
    if (test_idx.empty()) throw ConfigError("fsi: empty test split");
    const int budget = cfg.get_int("fsi.budget");
    int count = cfg.get_int("fsi.count");
    if (count <= 0 || count > static_cast<int>(test_idx.size())) count = static_cast<int>(test_idx.size());

    const FourierPatternSet set = select_frequencies(budget, data.height, data.width);

    auto csv = open_csv(dir + "/fsi_metrics.csv");
    csv << "id,psnr_db\n";
    double psnr_sum = 0;
    for (int i = 0; i < count; ++i) {
        const int gi = test_idx[static_cast<std::size_t>(i)];
        const Tensor img = reshape(data.images[static_cast<std::size_t>(gi)], Shape{data.height, data.width});
        const Tensor recon = fsi_reconstruct(fsi_acquire(img, set), set);
        const double p = psnr_db(recon, img);
        csv << data.ids[static_cast<std::size_t>(gi)] << ',' << p << '\n';
        psnr_sum += p;
        if (i < 4)
            write_png(dir + "/" + data.ids[static_cast<std::size_t>(gi)] + "_fsi.png",
                      tensor_to_raw(reshape(recon, Shape{1, data.height, data.width})));
    }

    auto summary = open_csv(dir + "/fsi_summary.csv");
    summary << "count,budget,frequencies,mean_psnr_db\n";
    summary << count << ',' << budget << ',' << set.freqs.size() << ',' << psnr_sum / count << '\n';
    std::cout << "fsi: " << set.freqs.size() << " frequencies (" << 3 * set.freqs.size()
              << " readings), mean psnr " << psnr_sum / count << " dB -> " << dir << "\n";
    return dir;
}

std::string run_calibrate(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("calibrate", cfg.get_seed("sensor.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const SensorModel model = sensor_from(cfg);
    OpticalEncoder enc;
    const std::string ckpt = cfg.get("calibrate.system_ckpt");
    if (!ckpt.empty()) {
        require_file(ckpt, "calibrate.system_ckpt", "train");
        enc = load_system(ckpt).optical;
    } else {
        const int size = cfg.get_int("data.size");
        enc = init_balanced(cfg.get_int("train.d"), size, size,
                            Rng::derive(cfg.get_seed("calibrate.seed"), 3));
    }

    const double scale = calibrate_white(model, enc);
    auto csv = open_csv(dir + "/calibration.csv");
    csv << "gain,bias,read_sigma,adc_bits,scale\n";
    csv << model.gain << ',' << model.bias << ',' << model.read_sigma << ',' << model.adc_bits << ','
        << scale << '\n';
    std::cout << "calibrate: scale " << scale << " (gain " << model.gain << ") -> " << dir << "\n";
    return dir;
}

std::string run_finetune(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("finetune", cfg.get_seed("finetune.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const std::string ckpt = cfg.get("finetune.system_ckpt");
    require_file(ckpt, "finetune.system_ckpt", "train");
    System sys = load_system(ckpt);

    const Dataset data = dataset_from(cfg);
    if (data.height != sys.dec_cfg.image_size || data.channels != sys.dec_cfg.channels)
        throw ConfigError("dataset geometry does not match the checkpoint");

    const SensorModel model = sensor_from(cfg);
    const double scale = calibrate_white(model, sys.optical);

    const std::vector<int> train_idx = data.indices(Split::train);
    const std::vector<int> val_idx = data.indices(Split::val);
    const int pairs = std::min<int>(cfg.get_int("finetune.pairs"), static_cast<int>(train_idx.size()));

    const auto sense_image = [&](int gi) {
        std::vector<double> v =
            sense(model, ideal_measurement(sys.optical, data.images[static_cast<std::size_t>(gi)]),
                  static_cast<std::uint64_t>(gi));
        for (double& x : v) x *= scale;
        return v;
    };

    std::vector<std::vector<double>> train_meas, val_meas;
    std::vector<Tensor> train_images, val_images;
    for (int i = 0; i < pairs; ++i) {
        const int gi = train_idx[static_cast<std::size_t>(i)];
        train_meas.push_back(sense_image(gi));
        train_images.push_back(data.images[static_cast<std::size_t>(gi)]);
    }
    for (int gi : val_idx) {
        val_meas.push_back(sense_image(gi));
        val_images.push_back(data.images[static_cast<std::size_t>(gi)]);
    }

    LossWeights weights;
    weights.lat = cfg.get_double("train.lambda_lat");
    weights.pips = cfg.get_double("train.lambda_pips");
    weights.l2 = cfg.get_double("train.lambda_l2");

    FinetuneConfig fc;
    fc.lr = cfg.get_double("finetune.lr");
    fc.epochs = cfg.get_int("finetune.epochs");
    fc.batch = cfg.get_int("finetune.batch");
    fc.seed = cfg.get_seed("finetune.seed");

    const FinetuneReport report =
        finetune(sys.digital, sys.generator, sys.inversion, train_meas, train_images, val_meas,
                 val_images, weights, fc);

    save_system(dir + "/system_finetuned.lsi", sys);
    auto csv = open_csv(dir + "/finetune_report.csv");
    csv << "pairs,scale,pre_psnr_db,post_psnr_db,gain_db\n";
    csv << report.pairs << ',' << scale << ',' << report.pre_psnr << ',' << report.post_psnr << ','
        << report.post_psnr - report.pre_psnr << '\n';
    std::cout << "finetune: " << report.pairs << " pairs, psnr " << report.pre_psnr << " -> "
              << report.post_psnr << " dB -> " << dir << "/system_finetuned.lsi\n";
    return dir;
}

std::string run_export_latents(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("export-latents", cfg.get_seed("data.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const std::string ckpt = cfg.get("eval.system_ckpt");
    require_file(ckpt, "eval.system_ckpt", "train");
    System sys = load_system(ckpt);

    const Dataset data = dataset_from(cfg);
    if (data.height != sys.dec_cfg.image_size || data.channels != sys.dec_cfg.channels)
        throw ConfigError("dataset geometry does not match the checkpoint");
    const std::vector<int> idx = data.indices(split_from(cfg.get("eval.split")));
    if (idx.empty()) throw ConfigError("export-latents: requested split is empty");

    NoGradGuard guard;
    const int zdim = sys.enc_cfg.l * sys.enc_cfg.c_lat;
    auto csv = open_csv(dir + "/latents.csv");
    csv << "id";
    for (int k = 0; k < zdim; ++k) csv << ",z" << k;
    csv << '\n';
    for (int gi : idx) {
        const Tensor v = measure(sys.optical, data.images[static_cast<std::size_t>(gi)]);
        const Tensor z = sys.digital.encode(v);
        const auto zv = z.values();
        csv << data.ids[static_cast<std::size_t>(gi)];
        for (int k = 0; k < zdim; ++k) csv << ',' << zv[static_cast<std::size_t>(k)];
        csv << '\n';
    }
    std::cout << "export-latents: " << idx.size() << " rows x " << zdim << " dims -> " << dir
              << "/latents.csv\n";
    return dir;
}

std::string run_export_masks(const RunConfig& cfg, const std::string& out_dir) {
    const std::string dir = make_run_dir("export-masks", cfg.get_seed("data.seed"), out_dir);
    cfg.write(dir + "/config.txt");

    const std::string ckpt = cfg.get("eval.system_ckpt");
    require_file(ckpt, "eval.system_ckpt", "train");
    System sys = load_system(ckpt);

    NoGradGuard guard;
    const Tensor masks = binarized_masks(sys.optical);
    const auto mv = masks.values();
    const int mn = sys.optical.pixel_count();
    auto csv = open_csv(dir + "/occupancy.csv");
    csv << "mask,ones,fraction\n";
    for (int r = 0; r < sys.optical.d; ++r) {
        std::vector<double> pix(mv.begin() + static_cast<std::ptrdiff_t>(r * mn),
                                mv.begin() + static_cast<std::ptrdiff_t>((r + 1) * mn));
        int ones = 0;
        for (double p : pix) ones += p > 0.5 ? 1 : 0;
        csv << r << ',' << ones << ',' << static_cast<double>(ones) / mn << '\n';
        char name[32];
        std::snprintf(name, sizeof name, "mask_%03d.png", r);
        write_png(dir + "/" + name,
                  tensor_to_raw(Tensor::from_data(Shape{1, sys.optical.m, sys.optical.n}, std::move(pix))));
    }
    std::cout << "export-masks: " << sys.optical.d << " masks -> " << dir << "\n";
    return dir;
}

} // namespace lsi
