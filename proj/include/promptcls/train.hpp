#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "promptcls/corpus.hpp"
#include "promptcls/model.hpp"
#include "promptcls/prompt.hpp"
#include "promptcls/verbalizer.hpp"

namespace promptcls {

struct TrainConfig {
    double learning_rate = 1e-5;
    int max_epochs = 10;
    int batch_size = 16;
    int max_seq_len = 256;
    double rdrop_alpha = 1.0;  // 0 disables the consistency term (single pass)
    double dropout_rate = 0.1;
    int early_stop_patience = 3;
    double weight_decay = 0.01;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

// Tape-free reference losses, shared by tests and the evaluation paths.
double label_ce_loss(const MaskDistribution& dist, const std::string& gold,
                     const Verbalizer& verbalizer, double eps = 1e-12);
double bidirectional_kl(const std::vector<double>& p, const std::vector<double>& q,
                        double eps = 1e-12);

// One prompted training example. For multilabel tasks every (record,
// category) pair becomes one example and `category` indexes the category
// list; binary examples keep category = -1.
struct PromptExample {
    WrappedText wrapped;
    std::size_t gold = 0;  // verbalizer label index
    int category = -1;
};

std::vector<PromptExample> make_binary_examples(const DatasetView& view,
                                                const TaskPromptSet& prompts,
                                                const Verbalizer& verbalizer,
                                                const std::string& mask_token,
                                                const std::string& negative_label,
                                                const std::string& positive_label);

std::vector<PromptExample> make_multilabel_examples(const DatasetView& view,
                                                    const TaskPromptSet& prompts,
                                                    const Verbalizer& verbalizer,
                                                    const std::string& mask_token,
                                                    const std::string& no_label,
                                                    const std::string& yes_label);

// Mean over the batch of 1/2*(CE(p1)+CE(p2)) + alpha*BidirKL(p1,p2), where p1
// and p2 come from two dropout-sampled forward passes per example. Value
// only; the train loop builds the same expression on its own tape.
double rdrop_step_loss(TinyMlm& model, const std::vector<PromptExample>& batch,
                       const Verbalizer& verbalizer, double alpha, const TrainConfig& cfg,
                       Rng& rng);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_metric = 0.0;     // selection value (task metric, or -val_loss)
    bool metric_fallback = false;  // no positive golds: selection fell back to loss
    bool improved = false;
};

struct TrainReport {
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_metric = 0.0;
    std::string checkpoint;  // path of the persisted best model, when any
    std::string metric_name;

    void write_jsonl(const std::string& path) const;
};

class EarlyStopper {
public:
    explicit EarlyStopper(int patience);
    bool observe(double value);  // true when strictly better than the best so far
    bool should_stop() const { return bad_ >= patience_; }
    double best() const { return best_; }
    int best_index() const { return best_index_; }

private:
    int patience_;
    double best_;
    int best_index_ = -1;
    int seen_ = 0;
    int bad_ = 0;
};

// Decoupled weight decay Adam over a fixed parameter list.
class AdamW {
public:
    AdamW(std::vector<Param*> params, const TrainConfig& cfg);
    void step();

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_;
    double lr_, beta1_, beta2_, eps_, weight_decay_;
    long long t_ = 0;
};

// Validation pass: mean eval-mode CE loss plus the task metric (positive-class
// F1 for binary examples, unweighted macro-F1 over categories otherwise).
// metric_valid is false when the examples contain no positive gold.
struct ValScore {
    double loss = 0.0;
    double metric = 0.0;
    bool metric_valid = false;
};

ValScore evaluate_examples(TinyMlm& model, const std::vector<PromptExample>& examples,
                           const Verbalizer& verbalizer, std::size_t positive_index,
                           int n_categories, int max_seq_len);

using MlmFactory = std::function<std::unique_ptr<TinyMlm>()>;

struct FoldOutcome {
    TrainReport report;
    std::unique_ptr<TinyMlm> model;  // restored to the best epoch
};

// Fine-tunes a fresh model from `factory` on the train examples, evaluates on
// the validation examples each epoch, early-stops on the task metric
// (validation loss when the metric is undefined), and keeps the best epoch's
// parameters. `checkpoint_path` non-empty persists the best model there.
FoldOutcome train_fold(const MlmFactory& factory, const std::vector<PromptExample>& train,
                       const std::vector<PromptExample>& val, const Verbalizer& verbalizer,
                       std::size_t positive_index, int n_categories, const TrainConfig& cfg,
                       const std::string& checkpoint_path);

// CLS-head counterpart: raw texts with integer class golds, softmax
// cross-entropy over the label set, same early-stop and checkpoint contract.
struct ClsExample {
    std::string text;
    std::size_t gold = 0;
};

using ClsFactory = std::function<std::unique_ptr<ClsHead>()>;

struct ClsFoldOutcome {
    TrainReport report;
    std::unique_ptr<ClsHead> model;
};

ClsFoldOutcome train_cls_fold(const ClsFactory& factory, const std::vector<ClsExample>& train,
                              const std::vector<ClsExample>& val, std::size_t positive_index,
                              const TrainConfig& cfg, const std::string& checkpoint_path);

}  // namespace promptcls
