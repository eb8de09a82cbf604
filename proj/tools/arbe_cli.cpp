#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "arbe/harness.hpp"

namespace {

int run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
        const std::optional<std::size_t>& horizon, const std::optional<std::string>& out_dir,
        const std::optional<std::string>& algo, const std::optional<std::string>& env) {
    arbe::ExperimentConfig cfg = arbe::load_config(config_path);
    if (seed) cfg.seeds = {*seed};
    if (horizon) cfg.horizon = *horizon;
    if (out_dir) cfg.output = *out_dir;
    if (algo) cfg.algorithm = arbe::parse_algorithm(*algo);
    if (env) cfg.environment.kind = *env;
    cfg.validate();

    std::filesystem::create_directories(cfg.output);
    std::vector<arbe::RunRecord> records;
    std::vector<std::string> names;
    for (std::uint64_t s : cfg.seeds) {
        arbe::RunRecord rec = arbe::run_single(cfg, s);
        names.push_back(arbe::csv_name(s));
        arbe::write_run_csv(rec, (std::filesystem::path(cfg.output) / names.back()).string());
        rec.rows.clear();
        rec.rows.shrink_to_fit();
        records.push_back(std::move(rec));
    }
    const auto summary = (std::filesystem::path(cfg.output) / "summary.json").string();
    std::ofstream out(summary, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + summary);
    out << arbe::summary_json(records, cfg, names);
    std::cout << "wrote " << records.size() << " run(s) to " << cfg.output << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regret-balancing model selection simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> horizon;
    std::optional<std::string> out_dir, algo, env;
    auto* run_cmd = app.add_subcommand("run", "run an experiment");
    run_cmd->add_option("--config", config_path, "TOML config file")->required();
    run_cmd->add_option("--seed", seed, "single seed override");
    run_cmd->add_option("--horizon", horizon, "horizon override");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--algo", algo, "algorithm override");
    run_cmd->add_option("--env", env, "environment kind override");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "check a config file");
    validate_cmd->add_option("--config", validate_path, "TOML config file")->required();

    auto* version_cmd = app.add_subcommand("version", "print the version");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run_cmd) return run(config_path, seed, horizon, out_dir, algo, env);
        if (*validate_cmd) {
            arbe::load_config(validate_path);
            std::cout << "ok\n";
            return 0;
        }
        if (*version_cmd) {
            std::cout << arbe::kVersion << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
