#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "promptcls/errors.hpp"
#include "promptcls/kvconfig.hpp"
#include "promptcls/run.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string seed, folds, out, strategy;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key=value config file")->required();
    cmd->add_option("--seed", flags.seed, "override the global seed");
    cmd->add_option("--folds", flags.folds, "override the fold count");
    cmd->add_option("--out", flags.out, "override the output directory");
    cmd->add_option("--strategy", flags.strategy,
                    "cls|prompt with optional ,ensemble ,rdrop ,eda");
}

promptcls::RunConfig load_config(const CommonFlags& flags) {
    promptcls::KvConfig kv = promptcls::KvConfig::load(flags.config_path);
    if (!flags.seed.empty()) kv.set_override("seed", flags.seed);
    if (!flags.folds.empty()) kv.set_override("folds", flags.folds);
    if (!flags.out.empty()) kv.set_override("out", flags.out);
    if (!flags.strategy.empty()) kv.set_override("strategy", flags.strategy);
    return promptcls::resolve_run_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"prompt-based paragraph classification pipeline"};
    app.require_subcommand(1);

    CommonFlags split_flags, train_flags, predict_flags, eval_flags, aug_flags;
    std::string predict_input, predict_output, eval_predictions, eval_gold, aug_output;

    CLI::App* split = app.add_subcommand("split", "write the k-fold manifest");
    add_common(split, split_flags);

    CLI::App* train = app.add_subcommand("train", "train per-fold models");
    add_common(train, train_flags);

    CLI::App* predict = app.add_subcommand("predict", "write ensemble predictions");
    add_common(predict, predict_flags);
    predict->add_option("--input", predict_input, "dataset to predict (default: config dataset)");
    predict->add_option("--output", predict_output, "predictions file path");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against gold labels");
    add_common(evaluate, eval_flags);
    evaluate->add_option("--predictions", eval_predictions, "predictions file")->required();
    evaluate->add_option("--gold", eval_gold, "gold dataset (default: config dataset)");

    CLI::App* augment = app.add_subcommand("augment", "write an augmented dataset");
    add_common(augment, aug_flags);
    augment->add_option("--output", aug_output, "augmented dataset path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (split->parsed()) {
            promptcls::cmd_split(load_config(split_flags));
        } else if (train->parsed()) {
            promptcls::cmd_train(load_config(train_flags));
        } else if (predict->parsed()) {
            const promptcls::RunConfig cfg = load_config(predict_flags);
            if (predict_output.empty()) predict_output = cfg.out_dir + "/predictions.tsv";
            promptcls::cmd_predict(cfg, predict_input, predict_output);
            std::printf("wrote %s\n", predict_output.c_str());
        } else if (evaluate->parsed()) {
            const promptcls::RunConfig cfg = load_config(eval_flags);
            const std::string report = promptcls::cmd_evaluate(cfg, eval_predictions, eval_gold);
            std::printf("%s\n", report.c_str());
        } else if (augment->parsed()) {
            const promptcls::RunConfig cfg = load_config(aug_flags);
            if (aug_output.empty()) aug_output = cfg.out_dir + "/augmented.tsv";
            promptcls::cmd_augment(cfg, aug_output);
            std::printf("wrote %s\n", aug_output.c_str());
        }
    } catch (const promptcls::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const promptcls::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const promptcls::TrainError& e) {
        std::fprintf(stderr, "training error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
