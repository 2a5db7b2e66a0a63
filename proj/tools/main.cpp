// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface for the detection pipeline:
//   tadet gen-data | train | detect | eval

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tadet/pipeline.hpp"

namespace {

struct CommonArgs {
    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file (overrides defaults)");
    cmd->add_option("--set", args.overrides,
                    "config override, section.key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal action detection pipeline"};
    app.require_subcommand(1);

    CommonArgs gen_args;
    std::string gen_out;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen, gen_args);
    gen->add_option("--out", gen_out, "output dataset directory")->required();

    CommonArgs train_args;
    std::string train_data;
    std::string train_ckpt;
    std::optional<std::string> train_log;
    CLI::App* train = app.add_subcommand("train", "train the proposal model");
    add_common(train, train_args);
    train->add_option("--data", train_data, "training split directory")->required();
    train->add_option("--out", train_ckpt, "output checkpoint path")->required();
    train->add_option("--log", train_log, "training log (JSON lines)");

    CommonArgs detect_args;
    std::string detect_data;
    std::string detect_ckpt;
    std::string detect_out;
    CLI::App* detect = app.add_subcommand("detect", "run sliding-window detection");
    add_common(detect, detect_args);
    detect->add_option("--data", detect_data, "split directory to detect on")->required();
    detect->add_option("--checkpoint", detect_ckpt, "model checkpoint")->required();
    detect->add_option("--out", detect_out, "output directory for detection documents")
        ->required();

    CommonArgs eval_args;
    std::string eval_dets;
    std::string eval_annotations;
    std::string eval_report;
    CLI::App* eval = app.add_subcommand("eval", "evaluate detections against annotations");
    add_common(eval, eval_args);
    eval->add_option("--detections", eval_dets, "directory with detections_<task>.json")
        ->required();
    eval->add_option("--annotations", eval_annotations, "annotations.json path")->required();
    eval->add_option("--out", eval_report, "output report path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto cfg = tadet::load_config(gen_args.config_path, gen_args.overrides);
            tadet::run_gen_data(cfg, gen_out);
            std::cout << "wrote dataset to " << gen_out << "\n";
        } else if (train->parsed()) {
            const auto cfg = tadet::load_config(train_args.config_path, train_args.overrides);
            const tadet::TrainResult result =
                tadet::run_train(cfg, train_data, train_ckpt, train_log);
            for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
                std::cout << "epoch " << e << " mean loss " << result.epoch_mean_loss[e]
                          << "\n";
            }
            std::cout << "wrote checkpoint to " << train_ckpt << "\n";
        } else if (detect->parsed()) {
            const auto cfg = tadet::load_config(detect_args.config_path, detect_args.overrides);
            tadet::run_detect(cfg, detect_ckpt, detect_data, detect_out);
            std::cout << "wrote detections to " << detect_out << "\n";
        } else if (eval->parsed()) {
            const auto cfg = tadet::load_config(eval_args.config_path, eval_args.overrides);
            const tadet::EvalReport report =
                tadet::run_eval(cfg, eval_dets, eval_annotations, eval_report);
            std::cout << tadet::render_report_table(report);
            std::cout << "wrote report to " << eval_report << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
