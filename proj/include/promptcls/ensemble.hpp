#pragma once

#include <string>
#include <vector>

#include "promptcls/model.hpp"
#include "promptcls/verbalizer.hpp"

namespace promptcls {

// Per-label arithmetic mean of each model's aggregated label scores. All
// models must share the verbalizer's vocabulary size.
LabelScores ensemble_scores(const std::vector<ScorerModel*>& models, const WrappedText& input,
                            const Verbalizer& verbalizer);

// Mean class distribution of CLS-head models sharing a label set.
std::vector<double> ensemble_cls_probs(const std::vector<ClsHead*>& models,
                                       const std::string& text);

// Argmax with the verbalizer tie rule: an exact tie goes to the earlier
// label, so listing the negative label first makes ties negative.
const std::string& decide_binary(const LabelScores& scores, const Verbalizer& verbalizer);

// Category kept iff its positive score strictly beats the negative score.
std::vector<std::string> decide_multilabel(
    const std::vector<std::pair<std::string, LabelScores>>& per_category,
    const std::vector<std::string>& category_list, const std::string& yes_label);

// Predictions file: one `id<TAB>value` line per record. Binary value is the
// label; multilabel value is a comma-joined category list (empty for none).
struct PredictionRow {
    std::string id;
    std::string value;
};

void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions(const std::string& path);

}  // namespace promptcls
