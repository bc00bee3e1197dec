// Command-line front end: run experiments from a config file, run the
// built-in self checks, aggregate existing trace files, and sweep one
// config key over a list of values.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "retro/experiment.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_run(const std::string& config_path,
            const std::string& output_override) {
    const auto cfg = retro::load_experiment_config(config_path);
    std::optional<fs::path> out;
    if (!output_override.empty()) out = fs::path(output_override);
    const auto result = retro::run_experiment(cfg, out);

    std::size_t completed = 0;
    for (const auto& outcome : result.outcomes) {
        if (outcome.ok) {
            ++completed;
        } else {
            std::cerr << "replication " << outcome.replication
                      << " failed: " << outcome.error << "\n";
        }
    }
    std::cout << "completed " << completed << "/" << result.outcomes.size()
              << " replications; output in " << result.output_dir.string()
              << "\n";
    return completed == result.outcomes.size() ? 0 : 1;
}

int cmd_check(const std::string& config_path) {
    const auto cfg = retro::load_experiment_config(config_path);
    const auto report = retro::self_check(cfg);
    for (const auto& item : report.items)
        std::cout << (item.passed ? "[PASS] " : "[FAIL] ") << item.name
                  << ": " << item.detail << "\n";
    return report.all_passed() ? 0 : 1;
}

int cmd_aggregate(const std::string& dir, const std::string& axis_name) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trace_r", 0) == 0 &&
            entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    if (files.empty()) {
        std::cerr << "no trace_r*.csv files in " << dir << "\n";
        return 1;
    }
    std::sort(files.begin(), files.end());
    std::vector<retro::RunTrace> traces;
    traces.reserve(files.size());
    for (const auto& f : files) traces.push_back(retro::read_trace_csv(f));
    const auto agg = retro::aggregate_traces(
        traces, retro::aggregate_axis_from_string(axis_name));
    const fs::path out = fs::path(dir) / "aggregate.json";
    std::ofstream os(out, std::ios::binary);
    os << retro::aggregate_to_json(agg).dump(2) << '\n';
    std::cout << "aggregated " << traces.size() << " traces into "
              << out.string() << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param) {
    const auto eq = param.find('=');
    if (eq == std::string::npos) {
        std::cerr << "--param expects key=v1,v2,...\n";
        return 1;
    }
    const std::string key = param.substr(0, eq);
    std::vector<std::string> values;
    std::stringstream ss(param.substr(eq + 1));
    std::string v;
    while (std::getline(ss, v, ',')) values.push_back(v);

    const auto cfg = retro::load_experiment_config(config_path);
    const auto results = retro::run_sweep(cfg, key, values);
    bool all_ok = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        std::size_t completed = 0;
        for (const auto& outcome : results[i].outcomes)
            completed += outcome.ok ? 1 : 0;
        all_ok &= completed == results[i].outcomes.size();
        std::cout << key << "=" << values[i] << ": " << completed << "/"
                  << results[i].outcomes.size() << " replications, output "
                  << results[i].output_dir.string() << "\n";
    }
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"retro_opt: sequential sample-average optimization runs "
                 "with SGD/Adam baselines"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;
    auto* run = app.add_subcommand("run", "run an experiment from a config");
    run->add_option("config", config_path, "config file (json)")->required();
    run->add_option("--output-dir", output_override,
                    "override the config's output directory");

    std::string check_config;
    auto* check = app.add_subcommand(
        "check", "self checks: gradients, schedule, certificates");
    check->add_option("config", check_config, "config file (json)")
        ->required();

    std::string agg_dir;
    std::string axis = "oracle_work";
    auto* agg = app.add_subcommand(
        "aggregate", "aggregate trace_r*.csv files in a directory");
    agg->add_option("dir", agg_dir, "directory with trace files")->required();
    agg->add_option("--x-axis", axis,
                    "oracle_work | gradient_evals | outer_iteration");

    std::string sweep_config;
    std::string param;
    auto* sweep =
        app.add_subcommand("sweep", "run once per value of one config key");
    sweep->add_option("config", sweep_config, "config file (json)")
        ->required();
    sweep->add_option("--param", param, "key=v1,v2,... (dotted key)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, output_override);
        if (check->parsed()) return cmd_check(check_config);
        if (agg->parsed()) return cmd_aggregate(agg_dir, axis);
        if (sweep->parsed()) return cmd_sweep(sweep_config, param);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
