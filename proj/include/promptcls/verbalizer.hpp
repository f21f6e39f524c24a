#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptcls/vocab.hpp"

namespace promptcls {

// Synonym dictionary, file format: `word<TAB>syn1,syn2,...`. Entry order is
// preserved; a word is always a candidate for itself.
struct SynonymLexicon {
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;

    const std::vector<std::string>* find(std::string_view word) const;
    static SynonymLexicon load(const std::string& path);
};

// Corpus usage counts, file format: `word<TAB>count`. Missing word => 0.
struct FrequencyTable {
    std::unordered_map<std::string, long long> counts;

    long long count(std::string_view word) const;
    static FrequencyTable load(const std::string& path);
};

// Per-label scores in label order, plus the argmax rule (exact tie -> the
// label earliest in label order).
struct LabelScores {
    std::vector<std::string> labels;
    std::vector<double> scores;

    std::size_t argmax_index() const;
    const std::string& argmax() const { return labels[argmax_index()]; }
    double score_of(std::string_view label) const;
};

struct LabelWord {
    std::string surface;
    int token_id = -1;
};

// Maps each label to its label-word set V_y and aggregates mask-position
// probabilities into label scores by the per-label mean.
class Verbalizer {
public:
    struct Dropped {
        std::string label, word, reason;
    };
    struct BuildResult;

    // V_y = top-k by corpus frequency among the label's seed words and their
    // lexicon synonyms that map to a single in-vocabulary token. Frequency
    // ties break lexicographically. A candidate reachable from several labels
    // is kept only where it ranks best (ties -> earliest label), so the sets
    // are pairwise disjoint. A label whose whole candidate set is filtered
    // out is an error.
    static BuildResult build(const std::vector<std::string>& labels,
                             const std::vector<std::vector<std::string>>& seed_words,
                             const SynonymLexicon& lexicon, const FrequencyTable& freq, int k,
                             const Vocabulary& vocab);

    // score(y) = (1/|V_y|) * sum_{v in V_y} dist[v]
    LabelScores aggregate(const MaskDistribution& dist) const;

    // Argmax over aggregated scores; ties resolve to the earliest label.
    const std::string& predict(const LabelScores& scores) const;

    const std::vector<std::string>& label_order() const { return label_order_; }
    const std::vector<LabelWord>& words(std::size_t label_idx) const { return words_[label_idx]; }
    std::size_t label_index(std::string_view label) const;

    // Token-id groups per label, in label order (training loss plumbing).
    const std::vector<std::vector<int>>& token_groups() const { return token_groups_; }

    void export_json(const std::string& path) const;

private:
    std::vector<std::string> label_order_;
    std::vector<std::vector<LabelWord>> words_;
    std::vector<std::vector<int>> token_groups_;
    std::size_t vocab_size_ = 0;
};

struct Verbalizer::BuildResult {
    Verbalizer verbalizer;
    std::vector<Dropped> dropped;
};

}  // namespace promptcls
