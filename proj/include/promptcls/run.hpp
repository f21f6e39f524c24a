#pragma once

#include <string>
#include <vector>

#include "promptcls/augment.hpp"
#include "promptcls/corpus.hpp"
#include "promptcls/kvconfig.hpp"
#include "promptcls/model.hpp"
#include "promptcls/prompt.hpp"
#include "promptcls/train.hpp"

namespace promptcls {

// Table-style strategy toggles: a base strategy (cls or prompt) plus
// additive options.
struct Strategy {
    bool cls_baseline = false;
    bool prompt = true;
    bool ensemble = false;
    bool rdrop = false;
    bool eda = false;

    static Strategy parse(const std::string& spec);  // cls|prompt[,ensemble][,rdrop][,eda]
    std::string to_string() const;
};

struct RunConfig {
    TaskKind task = TaskKind::binary;
    std::string dataset_path;
    DatasetSchema schema;
    std::string template_path;
    std::string lexicon_path;
    std::string frequency_path;
    int verbalizer_k = 3;
    std::vector<std::string> labels;                  // two entries, negative first
    std::vector<std::vector<std::string>> label_seeds;  // aligned with labels
    Strategy strategy;
    int folds = 10;
    bool stratified = false;
    std::uint64_t seed = 0;
    std::string out_dir;
    TrainConfig train;
    AugmentConfig augment;
    ModelConfig model;
    std::size_t vocab_max = 8000;

    const std::string& negative_label() const { return labels[0]; }
    const std::string& positive_label() const { return labels[1]; }

    void validate() const;
    std::string to_json() const;  // fully resolved values, defaults included
};

// Builds a RunConfig from a parsed key-value config; unknown keys are
// usage errors. CLI flags arrive as overrides already set on `kv`.
RunConfig resolve_run_config(const KvConfig& kv);

// Shared plumbing for the commands below: loads the dataset, templates,
// vocabulary, and verbalizer consistently.
struct RunContext {
    Dataset dataset;
    std::vector<RowDiagnostic> rejected;
    TaskPromptSet prompts;
    Vocabulary vocab;
    Verbalizer verbalizer;
    std::vector<Verbalizer::Dropped> dropped_words;
};

RunContext build_run_context(const RunConfig& cfg);

// Each command echoes the resolved config to <out>/config.<command>.json and
// throws typed errors (UsageError/DataError/TrainError) on failure.
void cmd_split(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg, const std::string& input_path,
                 const std::string& output_path);
std::string cmd_evaluate(const RunConfig& cfg, const std::string& predictions_path,
                         const std::string& gold_path);
void cmd_augment(const RunConfig& cfg, const std::string& output_path);

// Checkpoint layout helpers shared by train and predict.
std::string fold_dir(const RunConfig& cfg, int fold);
std::string mlm_checkpoint_path(const RunConfig& cfg, int fold);
std::string cls_checkpoint_path(const RunConfig& cfg, int fold, const std::string& category);

}  // namespace promptcls
