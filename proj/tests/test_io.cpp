#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "qm2arl/io.hpp"
#include "qm2arl/qnn.hpp"
#include "qm2arl/rng.hpp"
#include "qm2arl/train.hpp"

using namespace qm2arl;

namespace {

constexpr double kPi = std::numbers::pi;

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("qm2arl_io_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("format_double round-trips exactly") {
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::format_double(0.0) == "0");
    CHECK(io::format_double(-2.5) == "-2.5");

    Rng rng(11);
    std::vector<double> values = {kPi, -kPi, 1.0 / 3.0, 1e-300, 1e300, 6.02214076e23};
    for (int i = 0; i < 100; ++i) values.push_back(rng.uniform(-1e6, 1e6));
    for (double v : values) {
        const std::string s = io::format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("atomic text writes, reads, existence") {
    TempDir dir;
    const std::string path = dir.file("plain.txt");
    CHECK_FALSE(io::file_exists(path));
    CHECK_THROWS_AS(io::read_text(path), std::runtime_error);

    io::atomic_write_text(path, "hello\nworld\n");
    CHECK(io::file_exists(path));
    CHECK(io::read_text(path) == "hello\nworld\n");

    // Overwrite replaces content; no stray temp file survives.
    io::atomic_write_text(path, "second");
    CHECK(io::read_text(path) == "second");
    CHECK_FALSE(io::file_exists(path + ".tmp"));

    // Parent directories are created on demand.
    const std::string nested = dir.file("a/b/c.txt");
    io::atomic_write_text(nested, "deep");
    CHECK(io::read_text(nested) == "deep");
}

TEST_CASE("csv assembly") {
    const std::string text = io::csv_text("epoch,loss", {{"1", "0.5"}, {"2", "0.25"}});
    CHECK(text == "epoch,loss\n1,0.5\n2,0.25\n");
    CHECK(io::csv_text("only_header", {}) == "only_header\n");
}

TEST_CASE("pole memory serializes bit-exactly") {
    train::PoleMemoryStore store;
    std::vector<qnn::PoleParams> poles_a = {{kPi, -kPi / 3.0, 0.125, 1e-17, 0.0, -0.0},
                                            {0.7, -0.7, 2.9, -2.9, 1.0 / 7.0, 3.0}};
    train::pole_memory_save(store, "env-a", poles_a, "env-a", 1234, 30.0);
    train::pole_memory_save(store, "label with \"quotes\"\\", poles_a, "", 0, 0.0);

    const std::string text = io::pole_memory_to_text(store);
    const train::PoleMemoryStore back = io::pole_memory_from_text(text);
    REQUIRE(back.entries().size() == 2);
    CHECK(back.entries()[0].label == "env-a");
    CHECK(back.entries()[0].variant == "env-a");
    CHECK(back.entries()[0].epoch == 1234);
    CHECK(back.entries()[0].alpha_degrees == 30.0);
    CHECK(back.entries()[0].agent_poles == poles_a);  // bit-exact
    CHECK(back.entries()[1].label == "label with \"quotes\"\\");

    TempDir dir;
    const std::string path = dir.file("memory.json");
    io::write_pole_memory(path, store);
    const train::PoleMemoryStore from_file = io::read_pole_memory(path);
    CHECK(from_file.entries().size() == 2);
    CHECK(from_file.entries()[0].agent_poles == poles_a);

    CHECK_THROWS_AS(io::pole_memory_from_text("not json"), std::runtime_error);
    CHECK_THROWS_AS(io::pole_memory_from_text("[1, 2, 3]"), std::runtime_error);

    // Unsupported format version.
    nlohmann::json doc = nlohmann::json::parse(text);
    doc["format_version"] = 2;
    CHECK_THROWS_AS(io::pole_memory_from_text(doc.dump()), std::runtime_error);

    // Entries must be an array of objects.
    doc = nlohmann::json::parse(text);
    doc["entries"] = "oops";
    CHECK_THROWS_AS(io::pole_memory_from_text(doc.dump()), std::runtime_error);
}

TEST_CASE("model files round-trip config, metadata, and angles") {
    io::ModelFile model;
    model.config = qnn::twostep_default_config();
    model.phi.resize(45);
    Rng rng(77);
    for (double& v : model.phi) v = rng.uniform(-kPi, kPi);
    model.env_label = "main";
    model.seed = (std::uint64_t{1} << 63) + 5;
    model.alpha_degrees = 30.0;
    model.epochs = 2000;

    const std::string text = io::model_to_text(model);
    const io::ModelFile back = io::model_from_text(text);
    CHECK(back.config.num_qubits == 3);
    CHECK(back.config.depth == 5);
    CHECK(back.config.beta == 8.0);
    CHECK(back.config.action_qubits == model.config.action_qubits);
    CHECK(back.phi == model.phi);  // bit-exact
    CHECK(back.env_label == "main");
    CHECK(back.seed == model.seed);
    CHECK(back.alpha_degrees == 30.0);
    CHECK(back.epochs == 2000);

    TempDir dir;
    const std::string path = dir.file("model.json");
    io::write_model(path, model);
    const io::ModelFile from_file = io::read_model(path);
    CHECK(from_file.phi == model.phi);

    // Metadata fields are optional on read.
    nlohmann::json doc = nlohmann::json::parse(text);
    doc.erase("env");
    doc.erase("seed");
    doc.erase("alpha_degrees");
    doc.erase("epochs");
    const io::ModelFile bare = io::model_from_text(doc.dump());
    CHECK(bare.env_label.empty());
    CHECK(bare.seed == 0);
    CHECK(bare.phi == model.phi);

    CHECK_THROWS_AS(io::model_from_text("{}"), std::runtime_error);
    CHECK_THROWS_AS(io::model_from_text("garbage"), std::runtime_error);

    // Wrong kind marker.
    doc = nlohmann::json::parse(text);
    doc["kind"] = "something-else";
    CHECK_THROWS_AS(io::model_from_text(doc.dump()), std::runtime_error);

    // Angle vector length must match the declared circuit shape.
    doc = nlohmann::json::parse(text);
    doc["phi"].erase(0);
    CHECK_THROWS_AS(io::model_from_text(doc.dump()), std::runtime_error);

    // A pole-memory document is not a model file.
    train::PoleMemoryStore store;
    train::pole_memory_save(store, "x", {qnn::PoleParams(6, 0.0)}, "", 0, 0.0);
    CHECK_THROWS_AS(io::model_from_text(io::pole_memory_to_text(store)), std::runtime_error);
}
