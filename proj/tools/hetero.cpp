// Command-line front end: run experiments, build report tables, generate instances.
#include "hetero/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

std::optional<std::string> output_root_env() {
    if (const char* v = std::getenv("HETERO_OUTPUT_ROOT")) return std::string(v);
    return std::nullopt;
}

std::vector<std::filesystem::path> to_paths(const std::vector<std::string>& v) {
    return {v.begin(), v.end()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heterogeneous island-model portfolio optimiser"};
    app.require_subcommand(1);

    std::string config_path;
    int jobs = 0;
    auto* run = app.add_subcommand("run", "Run every seed of an experiment config");
    run->add_option("config", config_path, "INI config file")->required();
    run->add_option("-j,--jobs", jobs, "Runs executed in parallel (overrides [run] jobs)")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate-config", "Check a config and its instance without running");
    validate->add_option("config", config_path, "INI config file")->required();

    std::vector<std::string> dirs;
    bool csv = false;
    auto* table = app.add_subcommand("report-table", "Mean, min and max final objective per configuration");
    table->add_option("dirs", dirs, "Run directories (one benchmark)")->required();
    table->add_flag("--csv", csv, "Emit CSV instead of text");

    std::vector<std::string> only;
    auto* quart = app.add_subcommand("report-quartiles", "Runs per configuration in the pooled top quartile");
    quart->add_option("dirs", dirs, "Run directories (one benchmark)")->required();
    quart->add_option("--only", only, "Configurations to count (default: all)")->delimiter(',');
    quart->add_flag("--csv", csv, "Emit CSV instead of text");

    int items = 1000;
    std::uint64_t seed = 1;
    std::string out_path;
    auto* gen = app.add_subcommand("generate-bpp", "Write a random bin-packing instance (volumes in (0,1))");
    gen->add_option("-n,--items", items, "Number of items")->check(CLI::PositiveNumber);
    gen->add_option("-s,--seed", seed, "Generator seed");
    gen->add_option("-o,--output", out_path, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run) {
            auto cfg = hetero::load_config(config_path, output_root_env());
            if (jobs > 0) cfg.jobs = jobs;
            const auto dir = hetero::run_batch(cfg, std::cerr);
            std::cout << dir.string() << '\n';
        } else if (*validate) {
            auto cfg = hetero::load_config(config_path, output_root_env());
            hetero::validate_config(cfg);
            std::cout << "ok: " << cfg.problem.benchmark() << ", " << cfg.seeds.size() << " runs, planner "
                      << hetero::to_string(cfg.experiment.planner) << '\n';
        } else if (*table) {
            const auto rows = hetero::report_table(to_paths(dirs));
            std::cout << (csv ? hetero::render_table_csv(rows) : hetero::render_table_text(rows));
        } else if (*quart) {
            const auto rep = hetero::report_quartiles(to_paths(dirs), only);
            std::cout << (csv ? hetero::render_quartiles_csv(rep) : hetero::render_quartiles_text(rep));
        } else if (*gen) {
            const auto inst = hetero::generate_bpp(items, seed);
            if (out_path.empty()) {
                hetero::write_volume_list(inst, std::cout);
            } else {
                std::ofstream out(out_path);
                if (!out) throw std::runtime_error("cannot write " + out_path);
                hetero::write_volume_list(inst, out);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "hetero: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
