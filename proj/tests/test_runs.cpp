#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lsi/runs.hpp"

using namespace lsi;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "lsi_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig tiny_cfg(const fs::path& data_dir) {
    RunConfig cfg;
    cfg.apply_override("data.dir=" + data_dir.string());
    cfg.apply_override("data.size=16");
    cfg.apply_override("data.count=24");
    cfg.apply_override("data.min_images=8");
    cfg.apply_override("decoder.levels=3");
    cfg.apply_override("decoder.c_lat=8");
    cfg.apply_override("decoder.const_channels=8");
    cfg.apply_override("decoder.level_channels=8,8,8");
    cfg.apply_override("decoder.inv_channels=4,4,4");
    cfg.apply_override("encoder.hidden=16");
    cfg.apply_override("encoder.expansion=2");
    cfg.apply_override("encoder.split=1,1,1");
    cfg.apply_override("encoder.depths=2,2,2");
    cfg.apply_override("train.d=4");
    return cfg;
}

} // namespace

TEST_CASE("dataset generation run writes images and its config") {
    const auto data = fresh_dir("runs_data");
    const auto out = fresh_dir("runs_mkdata");
    auto cfg = tiny_cfg(data);
    const auto dir = run_make_dataset(cfg, out.string());
    CHECK(dir == out.string());
    CHECK(fs::exists(out / "config.txt"));
    CHECK(fs::exists(data / "labels.tsv"));
    int pngs = 0;
    for (const auto& e : fs::directory_iterator(data))
        if (e.path().extension() == ".png") ++pngs;
    CHECK(pngs == 24);
}

TEST_CASE("system checkpoints round trip through disk") {
    const auto dir = fresh_dir("runs_system");
    System sys;
    sys.optical = init_balanced(4, 16, 16, 3);
    EncoderConfig ec;
    ec.d = 4;
    ec.l = 3;
    ec.c_lat = 8;
    ec.n_coarse = 1;
    ec.n_mid = 1;
    ec.n_fine = 1;
    ec.hidden = 16;
    ec.expansion = 2;
    ec.input_scale = 2.0 / 256.0;
    sys.enc_cfg = ec;
    sys.digital = DigitalEncoder(ec, 4);
    DecoderConfig dc;
    dc.image_size = 16;
    dc.levels = 3;
    dc.c_lat = 8;
    dc.const_channels = 8;
    dc.level_channels = {8, 8, 8};
    dc.inv_channels = {4, 4, 4};
    sys.dec_cfg = dc;
    sys.generator = Generator(dc, 5);
    sys.inversion = InversionEncoder(dc, 6);

    const auto path = (dir / "system.lsi").string();
    save_system(path, sys);
    const auto back = load_system(path);

    CHECK(back.optical.d == 4);
    CHECK(back.optical.m == 16);
    CHECK(back.enc_cfg.hidden == 16);
    CHECK(back.dec_cfg.level_channels == dc.level_channels);
    const auto back2 = load_system(path);
    CHECK(weights_checksum(back.generator) == weights_checksum(back2.generator));
    CHECK(weights_checksum(back.inversion) == weights_checksum(back2.inversion));
    for (const auto& p : back.generator.parameters()) CHECK(!p.requires_grad());

    // same mask bits
    const auto img = Tensor::full({1, 16, 16}, 0.5);
    const auto ma = measure(sys.optical, img);
    const auto mb = measure(back.optical, img);
    const auto ca = ma.values();
    const auto cb = mb.values();
    for (std::size_t i = 0; i < ca.size(); ++i) CHECK(ca[i] == cb[i]);

    // weights pass through f32 on disk, so latents agree to float precision
    const auto ta = sys.digital.encode(ma);
    const auto tb = back.digital.encode(mb);
    const auto za = ta.values();
    const auto zb = tb.values();
    for (std::size_t i = 0; i < za.size(); ++i) CHECK(za[i] == doctest::Approx(zb[i]).epsilon(1e-5));
}

TEST_CASE("calibration run reports an accurate scale and repeats exactly") {
    const auto data = fresh_dir("runs_cal_data");
    auto cfg = tiny_cfg(data);
    run_make_dataset(cfg, fresh_dir("runs_cal_mk").string());
    cfg.apply_override("sensor.gain=1.25");
    cfg.apply_override("sensor.adc_bits=16");
    cfg.apply_override("sensor.adc_hi=1024");

    const auto out1 = fresh_dir("runs_cal_1");
    run_calibrate(cfg, out1.string());
    REQUIRE(fs::exists(out1 / "calibration.csv"));

    std::ifstream csv(out1 / "calibration.csv");
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "gain,bias,read_sigma,adc_bits,scale");
    const auto last_comma = row.rfind(',');
    const double scale = std::stod(row.substr(last_comma + 1));
    CHECK(std::abs(scale * 1.25 - 1.0) < 0.01);

    const auto out2 = fresh_dir("runs_cal_2");
    run_calibrate(cfg, out2.string());
    CHECK(slurp(out1 / "calibration.csv") == slurp(out2 / "calibration.csv"));
}

TEST_CASE("fsi run writes per-image metrics and a summary") {
    const auto data = fresh_dir("runs_fsi_data");
    auto cfg = tiny_cfg(data);
    run_make_dataset(cfg, fresh_dir("runs_fsi_mk").string());
    cfg.apply_override("fsi.budget=30");
    cfg.apply_override("fsi.count=2");

    const auto out = fresh_dir("runs_fsi_out");
    run_fsi(cfg, out.string());
    REQUIRE(fs::exists(out / "fsi_summary.csv"));
    REQUIRE(fs::exists(out / "fsi_metrics.csv"));

    std::ifstream summary(out / "fsi_summary.csv");
    std::string header, row;
    std::getline(summary, header);
    std::getline(summary, row);
    CHECK(header == "count,budget,frequencies,mean_psnr_db");
    CHECK(row.substr(0, 5) == "2,30,");

    std::ifstream metrics(out / "fsi_metrics.csv");
    int rows = 0;
    std::string line;
    std::getline(metrics, line); // header
    while (std::getline(metrics, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("runs that need upstream checkpoints explain what to do") {
    const auto data = fresh_dir("runs_missing");
    auto cfg = tiny_cfg(data);

    try {
        run_train(cfg, fresh_dir("runs_missing_train").string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("pretrain") != std::string::npos);
    }

    try {
        run_evaluate(cfg, fresh_dir("runs_missing_eval").string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train") != std::string::npos);
    }

    CHECK_THROWS_AS(run_reconstruct(cfg, fresh_dir("runs_missing_rec").string()), ConfigError);
    CHECK_THROWS_AS(run_finetune(cfg, fresh_dir("runs_missing_ft").string()), ConfigError);
    CHECK_THROWS_AS(run_export_latents(cfg, fresh_dir("runs_missing_xl").string()), ConfigError);
    CHECK_THROWS_AS(run_export_masks(cfg, fresh_dir("runs_missing_xm").string()), ConfigError);
}

TEST_CASE("mask export writes one png per mask and an occupancy table") {
    const auto data = fresh_dir("runs_xm_data");
    auto cfg = tiny_cfg(data);
    run_make_dataset(cfg, fresh_dir("runs_xm_mk").string());

    // build a minimal system checkpoint by hand
    const auto sysdir = fresh_dir("runs_xm_sys");
    System sys;
    sys.optical = init_balanced(4, 16, 16, 8);
    EncoderConfig ec;
    ec.d = 4;
    ec.l = 3;
    ec.c_lat = 8;
    ec.n_coarse = 1;
    ec.n_mid = 1;
    ec.n_fine = 1;
    ec.hidden = 16;
    ec.expansion = 2;
    ec.input_scale = 2.0 / 256.0;
    sys.enc_cfg = ec;
    sys.digital = DigitalEncoder(ec, 9);
    DecoderConfig dc;
    dc.image_size = 16;
    dc.levels = 3;
    dc.c_lat = 8;
    dc.const_channels = 8;
    dc.level_channels = {8, 8, 8};
    dc.inv_channels = {4, 4, 4};
    sys.dec_cfg = dc;
    sys.generator = Generator(dc, 10);
    sys.inversion = InversionEncoder(dc, 11);
    const auto ckpt = (sysdir / "system.lsi").string();
    save_system(ckpt, sys);

    cfg.apply_override("eval.system_ckpt=" + ckpt);
    const auto out = fresh_dir("runs_xm_out");
    run_export_masks(cfg, out.string());
    for (int i = 0; i < 4; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "mask_%03d.png", i);
        CHECK(fs::exists(out / name));
    }
    REQUIRE(fs::exists(out / "occupancy.csv"));
    std::ifstream occ(out / "occupancy.csv");
    std::string header, line;
    std::getline(occ, header);
    CHECK(header == "mask,ones,fraction");
    int rows = 0;
    while (std::getline(occ, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);

    cfg.apply_override("data.image=" + (data / "face_00000.png").string());
    const auto rec_out = fresh_dir("runs_xm_rec");
    run_reconstruct(cfg, rec_out.string());
    CHECK(fs::exists(rec_out / "face_00000_recon.png"));
    CHECK(fs::exists(rec_out / "metrics.csv"));

    const auto lat_out = fresh_dir("runs_xm_lat");
    run_export_latents(cfg, lat_out.string());
    REQUIRE(fs::exists(lat_out / "latents.csv"));
    std::ifstream lat(lat_out / "latents.csv");
    std::getline(lat, header);
    CHECK(header.substr(0, 5) == "id,z0");
    rows = 0;
    while (std::getline(lat, line))
        if (!line.empty()) ++rows;
    CHECK(rows > 0);
}
