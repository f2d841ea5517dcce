// SPDX-License-Identifier: Apache-2.0
// lagdrift: synth / train / predict / evaluate from one experiment config.
#include "lagdrift/app/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace lagdrift;
    CLI::App cli{"Lagrangian drifter prediction: physics baseline plus learned correction"};
    cli.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    app::RunOptions options;
    std::string mode = "single_step";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--seed", seed, "override run.seed");
        sub->add_flag("--serial", options.serial, "single-threaded, fixed ordering");
    };
    auto* synth = cli.add_subcommand("synth", "generate the synthetic dataset");
    auto* train = cli.add_subcommand("train", "split the data and train the correction");
    auto* predict = cli.add_subcommand("predict", "single-step or forecast prediction");
    auto* evaluate = cli.add_subcommand("evaluate", "metrics for the prediction outputs");
    for (auto* sub : {synth, train, predict, evaluate}) add_common(sub);
    predict->add_option("--mode", mode, "single_step or forecast")
        ->check(CLI::IsMember({"single_step", "forecast"}));
    for (auto* sub : {predict, evaluate}) {
        sub->add_flag("--baseline-only", options.baseline_only, "ignore any trained model");
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        options.seed = seed;
        const auto exp = app::make_experiment(app::Config::load(config_path), options);
        if (synth->parsed()) {
            app::cmd_synth(exp);
        } else if (train->parsed()) {
            app::cmd_train(exp);
        } else if (predict->parsed()) {
            app::cmd_predict(exp, app::predict_mode_from_string(mode));
        } else {
            const auto s = app::cmd_evaluate(exp);
            std::cout << "test drifters: " << s.drifters.size() << "\n"
                      << "median RMSE deterministic: " << s.median_rmse_deterministic << "\n"
                      << "median RMSE blended: " << s.median_rmse_blended << "\n"
                      << "fraction blended skill better: " << s.fraction_blended_better << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "lagdrift: " << e.what() << '\n';
        return app::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "lagdrift: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
