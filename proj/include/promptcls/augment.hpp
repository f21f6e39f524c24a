#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "promptcls/corpus.hpp"
#include "promptcls/rng.hpp"
#include "promptcls/verbalizer.hpp"

namespace promptcls {

struct AugmentConfig {
    double alpha_sr = 0.1, alpha_ri = 0.1, alpha_rs = 0.1;  // token fraction per op
    double p_rd = 0.1;                                      // per-token deletion probability
    int n_aug = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

// Case-preserving whitespace split; augmentation never touches the model
// tokenizer.
std::vector<std::string> split_whitespace(std::string_view text);

// Up to n distinct positions whose token has a usable synonym (one differing
// from the token itself) get a uniformly chosen synonym. Length unchanged.
std::vector<std::string> synonym_replace(const std::vector<std::string>& tokens, int n,
                                         const SynonymLexicon& lexicon, Rng& rng);

// n times: pick a uniform token that has usable synonyms and insert a uniform
// synonym at a uniform position. Grows by the number of successful
// insertions (< n only when no token has synonyms).
std::vector<std::string> random_insert(const std::vector<std::string>& tokens, int n,
                                       const SynonymLexicon& lexicon, Rng& rng);

// n uniform position pairs exchanged; multiset preserved. Fewer than two
// tokens: no-op.
std::vector<std::string> random_swap(const std::vector<std::string>& tokens, int n, Rng& rng);

// Each token independently deleted with probability p; when everything would
// go, one uniformly chosen token is retained.
std::vector<std::string> random_delete(const std::vector<std::string>& tokens, double p,
                                       Rng& rng);

// n_aug augmented copies of `text`. Per copy one operation is chosen
// uniformly; n = max(1, round(alpha * len)) for the count-based ops.
std::vector<std::string> eda(const std::string& text, const AugmentConfig& config,
                             const SynonymLexicon& lexicon);

// Augmented copies of each record (originals not included), ids suffixed
// `#aug<j>`, labels inherited. Each record draws from its own RNG stream
// derived from (config.seed, record id).
std::vector<ParagraphRecord> augment_records(const std::vector<ParagraphRecord>& records,
                                             const AugmentConfig& config,
                                             const SynonymLexicon& lexicon);

}  // namespace promptcls
