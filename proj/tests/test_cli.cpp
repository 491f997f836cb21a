#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eva/feature_io.hpp"
#include "eva/matrix.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kCli = EVA_CLI_PATH;

fs::path scratch_root() {
    const auto root = fs::temp_directory_path() / "eva_cli_test";
    fs::create_directories(root);
    return root;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = scratch_root() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + kCli + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::vector<char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

json load_json(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return json::parse(in);
}

void write_config(const fs::path& path, const json& extra) {
    json cfg = {{"seed", 77},
                {"duration_s", 1.6},
                {"dims", {{"ced", 6}, {"whisper", 5}, {"llm", 8}}},
                {"num_heads", 2}};
    if (!extra.is_null()) cfg.update(extra);
    std::ofstream out(path, std::ios::trunc);
    out << cfg.dump(2);
}

const std::vector<std::string> kGenFiles = {"ced_layer4.evaf", "ced_layer8.evaf",
                                            "ced_layer_final.evaf", "whisper.evaf",
                                            "tokens.evaf"};

}  // namespace

TEST_CASE("gen writes the five feature files and a manifest") {
    const auto dir = fresh_dir("gen_basic");
    const auto cfg = dir / "config.json";
    write_config(cfg, {});
    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + dir.string()) == 0);

    for (const auto& name : kGenFiles) CHECK(fs::exists(dir / name));
    const auto manifest = load_json(dir / "manifest.json");
    CHECK(manifest.at("command") == "gen");
    CHECK(manifest.at("seed").get<std::uint64_t>() == 77);
    CHECK(manifest.at("files").size() == 5);
    CHECK(manifest.at("config").at("duration_s").get<double>() == 1.6);
}

TEST_CASE("generation is byte-identical across reruns") {
    const auto dir_a = fresh_dir("gen_rerun_a");
    const auto dir_b = fresh_dir("gen_rerun_b");
    const auto cfg = scratch_root() / "rerun_config.json";
    write_config(cfg, {{"events", json::array({{{"band", 1}, {"center", 70.0}}})}});

    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + dir_a.string()) == 0);
    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + dir_b.string()) == 0);
    for (const auto& name : kGenFiles) CHECK(slurp(dir_a / name) == slurp(dir_b / name));
    CHECK(slurp(dir_a / "manifest.json") == slurp(dir_b / "manifest.json"));
}

TEST_CASE("the seed flag overrides the config seed") {
    const auto dir_a = fresh_dir("seed_a");
    const auto dir_b = fresh_dir("seed_b");
    const auto cfg = scratch_root() / "seed_config.json";
    write_config(cfg, {});

    REQUIRE(run_cli("gen --config " + cfg.string() + " --seed 99 --out " + dir_a.string()) == 0);
    REQUIRE(run_cli("gen --config " + cfg.string() + " --seed 100 --out " + dir_b.string()) == 0);
    CHECK(load_json(dir_a / "manifest.json").at("seed").get<std::uint64_t>() == 99);
    CHECK_FALSE(slurp(dir_a / "whisper.evaf") == slurp(dir_b / "whisper.evaf"));
}

TEST_CASE("pipeline fuses generated features and records its shapes") {
    const auto dir = fresh_dir("pipeline_basic");
    const auto cfg = dir / "config.json";
    write_config(cfg, {{"events", json::array({{{"band", 2}, {"center", 80.0}}})}});
    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + dir.string()) == 0);
    REQUIRE(run_cli("pipeline --config " + cfg.string() + " --in " + dir.string() + " --out " +
                    dir.string()) == 0);

    const auto summary = load_json(dir / "summary.json");
    CHECK(summary.at("lengths").at("coarse").get<std::size_t>() == 10);
    CHECK(summary.at("lengths").at("fine").get<std::size_t>() == 20);
    CHECK(summary.at("lengths").at("fused").get<std::size_t>() == 20);
    CHECK(summary.at("band_mask") == "1,1,1,1");
    CHECK(summary.at("mask_ced").get<bool>() == false);

    const auto fused = eva::read_temporal(dir / "fused.evaf");
    CHECK(fused.steps() == 20);
    CHECK(fused.dim() == 8);
}

TEST_CASE("zero alpha and the masked branch produce the same bytes") {
    const auto dir = fresh_dir("alpha_vs_mask");
    const auto cfg = dir / "config.json";
    write_config(cfg, {});
    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + dir.string()) == 0);

    const auto out_alpha = fresh_dir("alpha_vs_mask_alpha");
    const auto out_masked = fresh_dir("alpha_vs_mask_masked");
    REQUIRE(run_cli("pipeline --config " + cfg.string() + " --in " + dir.string() + " --out " +
                    out_alpha.string() + " --alpha 0") == 0);
    REQUIRE(run_cli("pipeline --config " + cfg.string() + " --in " + dir.string() + " --out " +
                    out_masked.string() + " --mask-ced") == 0);
    CHECK(slurp(out_alpha / "fused.evaf") == slurp(out_masked / "fused.evaf"));
    CHECK(load_json(out_masked / "summary.json").at("mask_ced").get<bool>() == true);
}

TEST_CASE("band masks are applied and recorded") {
    const auto dir = fresh_dir("band_mask");
    const auto cfg = dir / "config.json";
    write_config(cfg, {});
    REQUIRE(run_cli("gen --config " + cfg.string() + " --out " + dir.string()) == 0);

    const auto out_full = fresh_dir("band_mask_full");
    const auto out_masked = fresh_dir("band_mask_partial");
    REQUIRE(run_cli("pipeline --config " + cfg.string() + " --in " + dir.string() + " --out " +
                    out_full.string()) == 0);
    REQUIRE(run_cli("pipeline --config " + cfg.string() + " --in " + dir.string() + " --out " +
                    out_masked.string() + " --band-mask 0,1,1,1") == 0);

    CHECK(load_json(out_masked / "summary.json").at("band_mask") == "0,1,1,1");
    CHECK_FALSE(slurp(out_full / "fused.evaf") == slurp(out_masked / "fused.evaf"));

    CHECK(run_cli("pipeline --config " + cfg.string() + " --in " + dir.string() + " --out " +
                  out_masked.string() + " --band-mask 1,2,3") == 1);
}

TEST_CASE("invalid configs exit with the validation code") {
    const auto dir = fresh_dir("bad_config");
    const auto cfg = dir / "config.json";
    write_config(cfg, {{"duration_s", 0.0}});
    CHECK(run_cli("gen --config " + cfg.string() + " --out " + dir.string()) == 1);

    std::ofstream(dir / "not_json.json") << "{ nope";
    CHECK(run_cli("gen --config " + (dir / "not_json.json").string()) == 1);
}

TEST_CASE("missing inputs exit with the io code") {
    const auto dir = fresh_dir("missing_inputs");
    const auto cfg = dir / "config.json";
    write_config(cfg, {});
    CHECK(run_cli("pipeline --config " + cfg.string() + " --in " + (dir / "nowhere").string() +
                  " --out " + dir.string()) == 2);
    CHECK(run_cli("gen --config " + (dir / "missing.json").string()) == 2);
}

TEST_CASE("bad command lines exit with the validation code") {
    CHECK(run_cli("diag nonsense") == 1);
    CHECK(run_cli("gen --no-such-flag") == 1);
    CHECK(run_cli("") == 1);
}

TEST_CASE("the length diagnostic reports the compression table") {
    const auto dir = fresh_dir("diag_length");
    REQUIRE(run_cli("diag length --out " + dir.string()) == 0);
    const auto j = load_json(dir / "length_report.json");
    bool saw_750 = false;
    for (const auto& row : j.at("rows")) {
        if (row.at("input_length").get<std::size_t>() != 750) continue;
        saw_750 = true;
        CHECK(row.at("fused_length").get<std::size_t>() == 750);
        CHECK(row.at("compressed_length").get<std::size_t>() == 94);
    }
    CHECK(saw_750);
    CHECK(fs::exists(dir / "length_report.txt"));
}

TEST_CASE("the dpi diagnostic passes with a small trial budget") {
    const auto dir = fresh_dir("diag_dpi");
    REQUIRE(run_cli("diag dpi --trials 5 --out " + dir.string()) == 0);
    const auto j = load_json(dir / "dpi_report.json");
    CHECK(j.at("pass").get<bool>() == true);
    CHECK(j.at("trials").get<std::size_t>() == 5);
}
