#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lsi/checkpoint.hpp"
#include "lsi/config.hpp"

using namespace lsi;
namespace fs = std::filesystem;

namespace {

fs::path io_dir() {
    const auto dir = fs::temp_directory_path() / "lsi_tests" / "io";
    fs::create_directories(dir);
    return dir;
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("checkpoints round trip names, shapes and f32 values") {
    const auto path = (io_dir() / "basic.lsi").string();
    NamedTensors entries;
    entries.emplace_back("a.w", Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6.5}));
    entries.emplace_back("a.b", Tensor::from_data({3}, {-0.25, 0.0, 0.125}));
    put_meta(entries, "d", 16.0);
    save_checkpoint(path, entries);

    const auto loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded.at("a.w").shape() == Shape{2, 3});
    CHECK(loaded.at("a.w").values()[5] == 6.5);
    CHECK(loaded.at("a.b").values()[0] == -0.25);
    CHECK(has_meta(loaded, "d"));
    CHECK(get_meta(loaded, "d") == 16.0);
    CHECK(!has_meta(loaded, "missing"));
    CHECK_THROWS_AS(get_meta(loaded, "missing"), IoError);
}

TEST_CASE("save-load-save produces identical bytes") {
    const auto p1 = (io_dir() / "first.lsi").string();
    const auto p2 = (io_dir() / "second.lsi").string();
    NamedTensors entries;
    entries.emplace_back("w", Tensor::from_data({4}, {0.1, 0.2, 0.3, 0.7}));
    put_meta(entries, "k", 3.0);
    save_checkpoint(p1, entries);

    const auto loaded = load_checkpoint(p1);
    NamedTensors again;
    again.emplace_back("w", loaded.at("w"));
    again.emplace_back("meta.k", loaded.at("meta.k"));
    save_checkpoint(p2, again);
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("corrupt checkpoint files are rejected") {
    const auto dir = io_dir();
    const auto bad = dir / "bad.lsi";
    std::ofstream(bad, std::ios::binary) << "XYZ1 something";
    CHECK_THROWS_AS(load_checkpoint(bad.string()), IoError);

    // flip the version field of a valid file
    const auto good = dir / "good.lsi";
    NamedTensors entries;
    entries.emplace_back("w", Tensor::from_data({1}, {1.0}));
    save_checkpoint(good.string(), entries);
    auto bytes = slurp(good);
    bytes[4] = 9;
    const auto versioned = dir / "versioned.lsi";
    std::ofstream(versioned, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(load_checkpoint(versioned.string()), IoError);

    // truncate mid-array
    auto cut = slurp(good);
    cut.resize(cut.size() - 2);
    const auto truncated = dir / "truncated.lsi";
    std::ofstream(truncated, std::ios::binary).write(cut.data(), static_cast<std::streamsize>(cut.size()));
    CHECK_THROWS_AS(load_checkpoint(truncated.string()), IoError);

    CHECK_THROWS_AS(load_checkpoint((dir / "absent.lsi").string()), IoError);
}

TEST_CASE("loading into parameters copies values and validates") {
    const auto path = (io_dir() / "into.lsi").string();
    NamedTensors entries;
    entries.emplace_back("w", Tensor::from_data({2}, {5.0, 6.0}));
    save_checkpoint(path, entries);
    const auto loaded = load_checkpoint(path);

    auto target = Tensor::zeros({2}, true);
    NamedTensors params;
    params.emplace_back("w", target);
    load_into(loaded, params);
    CHECK(target.values()[0] == 5.0);
    CHECK(target.values()[1] == 6.0);
    CHECK(target.requires_grad());

    NamedTensors missing;
    missing.emplace_back("absent", Tensor::zeros({2}));
    CHECK_THROWS_AS(load_into(loaded, missing), IoError);
    NamedTensors wrong;
    wrong.emplace_back("w", Tensor::zeros({3}));
    CHECK_THROWS_AS(load_into(loaded, wrong), IoError);
}

TEST_CASE("duplicate entry names cannot load") {
    const auto path = io_dir() / "dup.lsi";
    NamedTensors entries;
    entries.emplace_back("w", Tensor::from_data({1}, {1.0}));
    entries.emplace_back("w", Tensor::from_data({1}, {2.0}));
    save_checkpoint(path.string(), entries);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
}

TEST_CASE("run config starts from complete defaults") {
    RunConfig cfg;
    CHECK(cfg.get_int("data.size") == 32);
    CHECK(cfg.get_int("train.d") == 16);
    CHECK(cfg.get_double("train.lambda_energy") == 3.0);
    CHECK(cfg.get_double("train.lr_mask") == 1e-4);
    CHECK(cfg.get_bool("train.energy_normalized") == false);
    CHECK(cfg.get_seed("train.seed") == 7);
    CHECK(cfg.get("eval.split") == "test");
    for (const auto& [key, value] : RunConfig::registry()) CHECK(cfg.get(key) == value);
}

TEST_CASE("config files accept comments and blank lines") {
    const auto path = io_dir() / "run.cfg";
    std::ofstream(path) << "# comment\n"
                           "\n"
                           "train.d = 32\n"
                           "  pretrain.lr=0.002  \n"
                           "data.dir = /tmp/set # trailing words stay\n";
    RunConfig cfg;
    cfg.apply_file(path.string());
    CHECK(cfg.get_int("train.d") == 32);
    CHECK(cfg.get_double("pretrain.lr") == 0.002);
    CHECK(cfg.get("data.dir") == "/tmp/set # trailing words stay");
}

TEST_CASE("unknown keys fail in files and overrides") {
    RunConfig cfg;
    CHECK_THROWS_AS(cfg.apply_override("nonsense.key=1"), ConfigError);
    CHECK_THROWS_AS(cfg.apply_override("no_equals_sign"), ConfigError);
    const auto path = io_dir() / "badkey.cfg";
    std::ofstream(path) << "mystery = 4\n";
    CHECK_THROWS_AS(cfg.apply_file(path.string()), ConfigError);
    CHECK_THROWS_AS(cfg.apply_file("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("typed getters validate their formats") {
    RunConfig cfg;
    cfg.apply_override("pretrain.lr=0.25");
    CHECK(cfg.get_double("pretrain.lr") == 0.25);
    CHECK_THROWS_AS(cfg.get_int("pretrain.lr"), ConfigError);
    cfg.apply_override("data.dir=words");
    CHECK_THROWS_AS(cfg.get_double("data.dir"), ConfigError);
    cfg.apply_override("train.energy_normalized=yes");
    CHECK(cfg.get_bool("train.energy_normalized"));
    cfg.apply_override("train.energy_normalized=0");
    CHECK(!cfg.get_bool("train.energy_normalized"));
    cfg.apply_override("train.energy_normalized=maybe");
    CHECK_THROWS_AS(cfg.get_bool("train.energy_normalized"), ConfigError);
}

TEST_CASE("serialization round trips through apply_file") {
    RunConfig cfg;
    cfg.apply_override("train.d=64");
    cfg.apply_override("sensor.gain=1.3");
    const auto path = io_dir() / "serialized.cfg";
    cfg.write(path.string());

    RunConfig back;
    back.apply_file(path.string());
    CHECK(back.serialize() == cfg.serialize());
    CHECK(back.get_int("train.d") == 64);
    CHECK(back.get_double("sensor.gain") == 1.3);
}
