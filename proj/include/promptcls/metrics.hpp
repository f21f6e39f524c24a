#pragma once

#include <string>
#include <vector>

namespace promptcls {

struct ConfusionCounts {
    long long tp = 0, fp = 0, fn = 0, tn = 0;
};

// Precision, recall, F1 with the zero-denominator convention: any undefined
// ratio is 0.
struct PrfScores {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

PrfScores prf(const ConfusionCounts& c);
ConfusionCounts confusion(const std::vector<bool>& pred, const std::vector<bool>& gold);

struct BinaryReport {
    ConfusionCounts counts;
    PrfScores scores;
    std::size_t total = 0;
};

// Positive-class P/R/F1 over parallel prediction/gold vectors.
BinaryReport f1_positive(const std::vector<bool>& pred, const std::vector<bool>& gold);

struct CategoryReport {
    std::string category;
    ConfusionCounts counts;
    PrfScores scores;
};

struct MultilabelReport {
    std::vector<CategoryReport> per_category;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    std::size_t total = 0;
};

// Per-category binary P/R/F1 (membership as the positive class) plus
// unweighted macro averages. pred/gold are [record][category] membership
// flags aligned with `categories`.
MultilabelReport macro_f1(const std::vector<std::vector<bool>>& pred,
                          const std::vector<std::vector<bool>>& gold,
                          const std::vector<std::string>& categories);

// JSON renderings, 4 decimal places on every ratio.
std::string to_json(const BinaryReport& r);
std::string to_json(const MultilabelReport& r);

// "0.6667" style fixed 4-decimal formatting used across reports.
std::string format_ratio(double x);

}  // namespace promptcls
