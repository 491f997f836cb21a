#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eva/config.hpp"
#include "eva/diagnostics.hpp"
#include "eva/feature_io.hpp"
#include "eva/fusion.hpp"
#include "eva/infoflow.hpp"
#include "eva/log.hpp"
#include "eva/pipeline.hpp"
#include "eva/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitDiagFail = 3;

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path.string());
    out << j.dump(2) << '\n';
    eva::log_line(eva::LogLevel::info, "wrote " + path.string());
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path.string());
    out << text;
    eva::log_line(eva::LogLevel::info, "wrote " + path.string());
}

json checksum_entry(const fs::path& path) {
    return eva::to_hex(eva::fnv1a64_file(path));
}

int cmd_gen(const eva::PipelineConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const eva::PipelineInputs inputs = eva::generate_inputs(cfg);

    const std::vector<std::pair<std::string, const eva::BandedFeatureMap*>> banded = {
        {"ced_layer4.evaf", &inputs.ced.layer4},
        {"ced_layer8.evaf", &inputs.ced.layer8},
        {"ced_layer_final.evaf", &inputs.ced.layer_final},
    };
    json files;
    for (const auto& [name, map] : banded) {
        eva::write_features(out_dir / name, *map);
        files[name] = checksum_entry(out_dir / name);
    }
    eva::write_features(out_dir / "whisper.evaf", inputs.whisper.encoder);
    files["whisper.evaf"] = checksum_entry(out_dir / "whisper.evaf");
    eva::write_features(out_dir / "tokens.evaf", inputs.whisper.tokens);
    files["tokens.evaf"] = checksum_entry(out_dir / "tokens.evaf");

    const json manifest = {{"command", "gen"},
                           {"seed", cfg.seed},
                           {"config_hash", eva::config_hash(cfg)},
                           {"config", eva::config_to_json(cfg)},
                           {"files", files}};
    write_json_file(out_dir / "manifest.json", manifest);
    return kExitOk;
}

int cmd_pipeline(const eva::PipelineConfig& cfg, const fs::path& in_dir,
                 const fs::path& out_dir, const eva::BandMask& band_mask, bool mask_ced) {
    eva::PipelineInputs inputs;
    inputs.ced.layer4 = eva::read_banded(in_dir / "ced_layer4.evaf");
    inputs.ced.layer8 = eva::read_banded(in_dir / "ced_layer8.evaf");
    inputs.ced.layer_final = eva::read_banded(in_dir / "ced_layer_final.evaf");
    inputs.ced.timeline = inputs.ced.layer4.timeline;
    inputs.whisper.encoder = eva::read_temporal(in_dir / "whisper.evaf");
    inputs.whisper.tokens = eva::read_temporal(in_dir / "tokens.evaf");

    json input_checksums;
    for (const char* name : {"ced_layer4.evaf", "ced_layer8.evaf", "ced_layer_final.evaf",
                             "whisper.evaf", "tokens.evaf"}) {
        input_checksums[name] = checksum_entry(in_dir / name);
    }

    inputs.ced = eva::band_mask_apply(inputs.ced, band_mask);
    const eva::PipelineParams params = eva::params_from_config(cfg);
    const eva::PipelineOptions opts = eva::options_from_config(cfg, mask_ced);
    const eva::PipelineRun run = eva::run_pipeline(inputs, params, opts);

    fs::create_directories(out_dir);
    eva::write_features(out_dir / "fused.evaf", run.fused);

    const json summary = {{"command", "pipeline"},
                          {"seed", cfg.seed},
                          {"alpha", params.fusion.alpha},
                          {"band_mask", band_mask.to_string()},
                          {"mask_ced", mask_ced},
                          {"lengths",
                           {{"coarse", inputs.ced.layer4.steps},
                            {"fine", inputs.whisper.encoder.steps()},
                            {"fused", run.fused.steps()}}},
                          {"config_hash", eva::config_hash(cfg)},
                          {"config", eva::config_to_json(cfg)},
                          {"inputs", input_checksums},
                          {"outputs", {{"fused.evaf", checksum_entry(out_dir / "fused.evaf")}}}};
    write_json_file(out_dir / "summary.json", summary);
    return kExitOk;
}

int diag_bands(const eva::PipelineConfig& cfg, const fs::path& out_dir) {
    const eva::AblationReport report = eva::run_band_ablation(cfg);

    bool pass = true;
    const auto& configs = report.configs;
    const auto full = std::find_if(configs.begin(), configs.end(), [](const auto& c) {
        return c.mask == eva::BandMask{};
    });
    if (full != configs.end() && !cfg.events.empty()) {
        for (const auto& c : configs) {
            if (c.mean_detection > full->mean_detection + 1e-12) pass = false;
        }
        for (std::size_t e = 0; e < cfg.events.size(); ++e) {
            const auto masked_name = "mask band " + std::to_string(cfg.events[e].band_index);
            for (const auto& c : configs) {
                if (c.name == masked_name && !(c.detection[e] < full->detection[e])) {
                    pass = false;
                }
            }
        }
    }

    json j = eva::ablation_to_json(report);
    j["pass"] = pass;
    write_json_file(out_dir / "bands_report.json", j);
    write_text_file(out_dir / "bands_report.txt",
                    eva::ablation_to_text(report) +
                        std::string("RESULT: ") + (pass ? "PASS" : "FAIL") + "\n");
    return pass ? kExitOk : kExitDiagFail;
}

int diag_length(const eva::PipelineConfig& cfg, const fs::path& out_dir, std::size_t window,
                std::size_t queries) {
    eva::Rng rng = eva::Rng::substream(cfg.seed, 777);
    const eva::QFormerParams qf =
        eva::QFormerParams::seeded(window, queries, cfg.num_heads, cfg.dim_llm, rng);
    const std::vector<std::size_t> lengths = {1, 8, 100, 750};
    const auto rows = eva::sequence_length_report(lengths, qf);
    write_json_file(out_dir / "length_report.json", eva::length_report_to_json(rows, qf));
    write_text_file(out_dir / "length_report.txt", eva::length_report_to_text(rows));
    return kExitOk;
}

int diag_grad(const eva::PipelineConfig& cfg, const fs::path& out_dir) {
    const auto rows = eva::gradient_report(cfg);
    const bool pass = std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
    write_json_file(out_dir / "grad_report.json", eva::gradient_report_to_json(rows));
    write_text_file(out_dir / "grad_report.txt", eva::gradient_report_to_text(rows));
    return pass ? kExitOk : kExitDiagFail;
}

std::size_t pick_size(eva::Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1)) %
                    (hi - lo + 1);
}

int diag_dpi(const eva::PipelineConfig& cfg, const fs::path& out_dir, std::size_t trials) {
    std::size_t chain_held = 0, rule_held = 0, stochastic_held = 0;
    double max_residual = 0.0;

    for (std::size_t t = 0; t < trials; ++t) {
        eva::Rng rng = eva::Rng::substream(cfg.seed, 9000 + t);
        const std::size_t nz = pick_size(rng, 2, 8);
        const std::size_t nx = pick_size(rng, 2, 8);
        auto joint = eva::random_joint(rng, {{"z", nz}, {"x", nx}});
        const std::size_t nh = pick_size(rng, 1, 8);
        const std::size_t no = pick_size(rng, 1, 8);
        const std::size_t ny = pick_size(rng, 1, 8);
        const auto result = eva::verify_dpi_chain(joint, eva::random_map(rng, nx, nh),
                                                  eva::random_map(rng, nh, no),
                                                  eva::random_map(rng, no, ny));
        if (result.holds) ++chain_held;
    }

    for (std::size_t t = 0; t < trials; ++t) {
        eva::Rng rng = eva::Rng::substream(cfg.seed, 19000 + t);
        auto joint = eva::random_joint(rng, {{"z", pick_size(rng, 2, 8)},
                                             {"o1", pick_size(rng, 2, 8)},
                                             {"o2", pick_size(rng, 2, 8)}});
        const auto result = eva::verify_chain_rule(joint, "z", "o1", "o2");
        max_residual = std::max(max_residual, result.residual);
        if (result.residual <= 1e-10 && result.monotone) ++rule_held;
    }

    for (std::size_t t = 0; t < trials; ++t) {
        eva::Rng rng = eva::Rng::substream(cfg.seed, 29000 + t);
        const std::size_t nz = pick_size(rng, 2, 8);
        const std::size_t no = pick_size(rng, 2, 8);
        const std::size_t nu = pick_size(rng, 2, 6);
        auto joint_zo = eva::random_joint(rng, {{"z", nz}, {"o", no}});
        std::vector<double> u_probs(nu);
        double sum = 0.0;
        for (auto& p : u_probs) {
            p = rng.uniform() + 1e-12;
            sum += p;
        }
        for (auto& p : u_probs) p /= sum;
        auto joint = eva::product_with_independent(joint_zo, {"u", nu}, u_probs);
        const auto g = eva::random_map(rng, no * nu, pick_size(rng, 1, 8));
        const auto result = eva::verify_stochastic_decoding(joint, "z", "o", "u", g);
        if (result.holds) ++stochastic_held;
    }

    const bool pass =
        chain_held == trials && rule_held == trials && stochastic_held == trials;
    const json j = {{"trials", trials},
                    {"chain", {{"held", chain_held}, {"total", trials}}},
                    {"chain_rule",
                     {{"held", rule_held}, {"total", trials}, {"max_residual", max_residual}}},
                    {"stochastic", {{"held", stochastic_held}, {"total", trials}}},
                    {"pass", pass}};
    write_json_file(out_dir / "dpi_report.json", j);

    char text[256];
    std::snprintf(text, sizeof(text),
                  "dpi chain        %zu/%zu hold\n"
                  "chain rule       %zu/%zu hold (max residual %.3e)\n"
                  "stochastic       %zu/%zu hold\n"
                  "RESULT: %s\n",
                  chain_held, trials, rule_held, trials, max_residual, stochastic_held,
                  trials, pass ? "PASS" : "FAIL");
    write_text_file(out_dir / "dpi_report.txt", text);
    return pass ? kExitOk : kExitDiagFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evidence-preserving audio fusion pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::string band_mask_csv = "1,1,1,1";
    bool mask_ced = false;
    std::string out_dir = ".";
    std::string in_dir = ".";
    std::size_t trials = 200;
    std::size_t window = 8;
    std::size_t queries = 1;
    std::string diag_kind;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config JSON path");
        cmd->add_option("--seed", seed, "override the config seed");
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate synthetic encoder features");
    add_common(gen);

    CLI::App* pipeline =
        app.add_subcommand("pipeline", "aggregate, align and fuse generated features");
    add_common(pipeline);
    pipeline->add_option("--in", in_dir, "directory holding generated features");
    pipeline->add_option("--alpha", alpha, "override the fusion gate");
    pipeline->add_option("--band-mask", band_mask_csv, "keep flags per band, e.g. 1,0,1,1");
    pipeline->add_flag("--mask-ced", mask_ced, "drop the aggregated branch from fusion");

    CLI::App* diag = app.add_subcommand("diag", "run a diagnostic and write its reports");
    add_common(diag);
    diag->add_option("kind", diag_kind, "bands|length|grad|dpi")
        ->required()
        ->check(CLI::IsMember({"bands", "length", "grad", "dpi"}));
    diag->add_option("--trials", trials, "trial count for dpi");
    diag->add_option("--window", window, "compression window");
    diag->add_option("--queries", queries, "queries per window");
    diag->add_option("--alpha", alpha, "override the fusion gate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        eva::PipelineConfig cfg;
        if (!config_path.empty()) cfg = eva::load_config(config_path);
        for (CLI::App* cmd : {gen, pipeline, diag}) {
            if (!cmd->parsed()) continue;
            if (cmd->count("--seed")) cfg.seed = seed;
            const CLI::Option* alpha_opt = cmd->get_option_no_throw("--alpha");
            if (alpha_opt && alpha_opt->count()) cfg.alpha_init = alpha;
        }
        cfg.validate();

        if (gen->parsed()) return cmd_gen(cfg, out_dir);
        if (pipeline->parsed()) {
            return cmd_pipeline(cfg, in_dir, out_dir, eva::BandMask::parse(band_mask_csv),
                                mask_ced);
        }
        fs::create_directories(out_dir);
        if (diag_kind == "bands") return diag_bands(cfg, out_dir);
        if (diag_kind == "length") return diag_length(cfg, out_dir, window, queries);
        if (diag_kind == "grad") return diag_grad(cfg, out_dir);
        return diag_dpi(cfg, out_dir, trials);
    } catch (const eva::FeatureIoError& e) {
        eva::log_line(eva::LogLevel::error, e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        eva::log_line(eva::LogLevel::error, e.what());
        return kExitValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        eva::log_line(eva::LogLevel::error, e.what());
        return kExitIo;
    } catch (const std::runtime_error& e) {
        eva::log_line(eva::LogLevel::error, e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        eva::log_line(eva::LogLevel::error, e.what());
        return kExitValidation;
    }
}
