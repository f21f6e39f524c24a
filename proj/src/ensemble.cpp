#include "promptcls/ensemble.hpp"

#include <algorithm>
#include <fstream>

#include "promptcls/errors.hpp"

namespace promptcls {

LabelScores ensemble_scores(const std::vector<ScorerModel*>& models, const WrappedText& input,
                            const Verbalizer& verbalizer) {
    if (models.empty()) throw UsageError("ensemble: empty model list");
    LabelScores mean;
    mean.labels = verbalizer.label_order();
    mean.scores.assign(mean.labels.size(), 0.0);
    for (ScorerModel* model : models) {
        const MaskDistribution dist = model->score_mask(input);
        const LabelScores one = verbalizer.aggregate(dist);
        for (std::size_t i = 0; i < mean.scores.size(); ++i) mean.scores[i] += one.scores[i];
    }
    for (double& s : mean.scores) s /= static_cast<double>(models.size());
    return mean;
}

std::vector<double> ensemble_cls_probs(const std::vector<ClsHead*>& models,
                                       const std::string& text) {
    if (models.empty()) throw UsageError("ensemble: empty model list");
    const std::vector<std::string>& labels = models.front()->labels();
    std::vector<double> mean(labels.size(), 0.0);
    for (ClsHead* model : models) {
        if (model->labels() != labels)
            throw DataError("ensemble: classifier label sets differ");
        const std::vector<double> p = model->cls_forward(text);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
    }
    for (double& s : mean) s /= static_cast<double>(models.size());
    return mean;
}

const std::string& decide_binary(const LabelScores& scores, const Verbalizer& verbalizer) {
    return verbalizer.predict(scores);
}

std::vector<std::string> decide_multilabel(
    const std::vector<std::pair<std::string, LabelScores>>& per_category,
    const std::vector<std::string>& category_list, const std::string& yes_label) {
    if (per_category.size() != category_list.size())
        throw UsageError("decide_multilabel: category score list does not match category list");
    std::vector<std::string> out;
    for (std::size_t c = 0; c < category_list.size(); ++c) {
        if (per_category[c].first != category_list[c])
            throw UsageError("decide_multilabel: missing scores for category " + category_list[c]);
        const LabelScores& s = per_category[c].second;
        const double yes = s.score_of(yes_label);
        double best_other = 0.0;
        bool seen_other = false;
        for (std::size_t i = 0; i < s.labels.size(); ++i) {
            if (s.labels[i] == yes_label) continue;
            best_other = seen_other ? std::max(best_other, s.scores[i]) : s.scores[i];
            seen_other = true;
        }
        if (seen_other && yes > best_other) out.push_back(category_list[c]);
    }
    return out;
}

void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write predictions: " + path);
    for (const PredictionRow& row : rows) out << row.id << '\t' << row.value << '\n';
    if (!out) throw DataError("write failure on predictions: " + path);
}

std::vector<PredictionRow> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("predictions file not found: " + path);
    std::vector<PredictionRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("malformed prediction line (no tab): " + line);
        rows.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return rows;
}

}  // namespace promptcls
