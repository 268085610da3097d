#include "lilee/config.hpp"
#include "lilee/error.hpp"
#include "lilee/log.hpp"
#include "lilee/pipeline.hpp"
#include "lilee/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>

namespace {

struct Flags {
    std::string config = "lilee.cfg";
    std::optional<int> method;
    std::optional<std::string> ages;
    std::optional<std::string> granularity;
    std::optional<std::string> scenario;
    std::optional<double> eta;
    std::optional<int> horizon;
    std::string synth_out = "synthetic";
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

void print_error(const std::string &command, const std::string &kind, const std::string &message, int code) {
    nlohmann::json record{{"error", kind}, {"command", command}, {"message", message}, {"exit_code", code}};
    std::cerr << record.dump() << '\n';
}

lilee::Config load_config(const Flags &f) {
    lilee::Config cfg = lilee::Config::load(f.config);
    if (f.method) cfg.set("covid.method", std::to_string(*f.method));
    if (f.ages) {
        cfg.set("covid.ages", *f.ages);
        cfg.set("covid.granular_ages", *f.ages);
    }
    if (f.granularity) cfg.set("covid.granularity", *f.granularity);
    if (f.scenario) cfg.set("forecast.scenarios", *f.scenario);
    if (f.eta) cfg.set("forecast.eta", fmt::format("{}", *f.eta));
    if (f.horizon) cfg.set("forecast.horizon", std::to_string(*f.horizon));
    return cfg;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Li-Lee mortality baseline with a weekly COVID-19 layer"};
    app.require_subcommand(1);
    Flags f;
    app.add_flag("-v,--verbose", f.verbose, "Debug logging");

    auto *synth = app.add_subcommand("synth", "Write the bundled synthetic dataset and its configuration");
    synth->add_option("--out", f.synth_out, "Output directory");
    synth->add_option("--seed", f.seed, "Random seed");

    std::vector<std::string> commands = lilee::Pipeline::stages();
    commands.push_back("all");
    for (const auto &name : commands) {
        auto *sub = app.add_subcommand(name, name == "all" ? "Run every stage in order" : "Run the " + name + " stage");
        sub->add_option("-c,--config", f.config, "Run configuration file")->check(CLI::ExistingFile);
        sub->add_option("--method", f.method, "COVID layer method")->check(CLI::IsMember({1, 2}));
        sub->add_option("--ages", f.ages, "Calibration ages LO:HI");
        sub->add_option("--granularity", f.granularity, "Age granularity level")
            ->check(CLI::IsMember({"native", "1", "2", "3"}));
        sub->add_option("--scenario", f.scenario, "Scenario name, comma list or 'all'");
        sub->add_option("--eta", f.eta, "Scenario convergence speed")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--horizon", f.horizon, "Forecast horizon in years")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("", "config", e.what(), 2);
        return 2;
    }
    if (f.verbose) lilee::log().set_level(spdlog::level::debug);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "synth") {
            lilee::SyntheticOptions options;
            if (f.seed) options.seed = *f.seed;
            lilee::write_synthetic_dataset(lilee::generate_world(options), f.synth_out);
            return 0;
        }
        lilee::Pipeline pipeline(load_config(f));
        if (command == "all")
            pipeline.run_all();
        else
            pipeline.run(command);
    } catch (const lilee::Error &e) {
        const int code = lilee::exit_code(e.kind());
        print_error(command, lilee::to_string(e.kind()), e.what(), code);
        return code;
    } catch (const std::exception &e) {
        print_error(command, "internal", e.what(), 1);
        return 1;
    }
    return 0;
}
