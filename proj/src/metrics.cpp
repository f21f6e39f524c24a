#include "promptcls/metrics.hpp"

#include <cstdio>

#include <json.hpp>

#include "promptcls/errors.hpp"

namespace promptcls {

PrfScores prf(const ConfusionCounts& c) {
    PrfScores s;
    const long long pd = c.tp + c.fp;
    const long long rd = c.tp + c.fn;
    s.precision = pd > 0 ? static_cast<double>(c.tp) / static_cast<double>(pd) : 0.0;
    s.recall = rd > 0 ? static_cast<double>(c.tp) / static_cast<double>(rd) : 0.0;
    const double sum = s.precision + s.recall;
    s.f1 = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
    return s;
}

ConfusionCounts confusion(const std::vector<bool>& pred, const std::vector<bool>& gold) {
    if (pred.size() != gold.size())
        throw UsageError("metrics: prediction/gold length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && gold[i]) ++c.tp;
        else if (pred[i] && !gold[i]) ++c.fp;
        else if (!pred[i] && gold[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

BinaryReport f1_positive(const std::vector<bool>& pred, const std::vector<bool>& gold) {
    BinaryReport r;
    r.counts = confusion(pred, gold);
    r.scores = prf(r.counts);
    r.total = pred.size();
    return r;
}

MultilabelReport macro_f1(const std::vector<std::vector<bool>>& pred,
                          const std::vector<std::vector<bool>>& gold,
                          const std::vector<std::string>& categories) {
    if (pred.size() != gold.size())
        throw UsageError("metrics: prediction/gold length mismatch");
    MultilabelReport report;
    report.total = pred.size();
    const std::size_t nc = categories.size();
    for (std::size_t c = 0; c < nc; ++c) {
        std::vector<bool> p(pred.size()), g(gold.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i].size() != nc || gold[i].size() != nc)
                throw UsageError("metrics: row width does not match category count");
            p[i] = pred[i][c];
            g[i] = gold[i][c];
        }
        CategoryReport cr;
        cr.category = categories[c];
        cr.counts = confusion(p, g);
        cr.scores = prf(cr.counts);
        report.per_category.push_back(std::move(cr));
    }
    if (nc > 0) {
        for (const CategoryReport& cr : report.per_category) {
            report.macro_precision += cr.scores.precision;
            report.macro_recall += cr.scores.recall;
            report.macro_f1 += cr.scores.f1;
        }
        report.macro_precision /= static_cast<double>(nc);
        report.macro_recall /= static_cast<double>(nc);
        report.macro_f1 /= static_cast<double>(nc);
    }
    return report;
}

std::string format_ratio(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

namespace {

nlohmann::ordered_json counts_json(const ConfusionCounts& c) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

nlohmann::ordered_json scores_json(const PrfScores& s) {
    return {{"precision", format_ratio(s.precision)},
            {"recall", format_ratio(s.recall)},
            {"f1", format_ratio(s.f1)}};
}

}  // namespace

std::string to_json(const BinaryReport& r) {
    nlohmann::ordered_json j;
    j["task"] = "binary";
    j["records"] = r.total;
    j["counts"] = counts_json(r.counts);
    nlohmann::ordered_json s = scores_json(r.scores);
    for (auto& [k, v] : s.items()) j[k] = v;
    return j.dump(2);
}

std::string to_json(const MultilabelReport& r) {
    nlohmann::ordered_json j;
    j["task"] = "multilabel";
    j["records"] = r.total;
    j["macro_precision"] = format_ratio(r.macro_precision);
    j["macro_recall"] = format_ratio(r.macro_recall);
    j["macro_f1"] = format_ratio(r.macro_f1);
    nlohmann::ordered_json cats = nlohmann::ordered_json::array();
    for (const CategoryReport& cr : r.per_category) {
        nlohmann::ordered_json c;
        c["category"] = cr.category;
        c["counts"] = counts_json(cr.counts);
        nlohmann::ordered_json s = scores_json(cr.scores);
        for (auto& [k, v] : s.items()) c[k] = v;
        cats.push_back(std::move(c));
    }
    j["per_category"] = std::move(cats);
    return j.dump(2);
}

}  // namespace promptcls
