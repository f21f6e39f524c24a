#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "promptcls/prompt.hpp"

namespace promptcls {

// Probability vector over a scorer vocabulary at the mask position.
using MaskDistribution = std::vector<double>;

bool is_probability_vector(const std::vector<double>& p, double tol = 1e-6);

// Whitespace split + ASCII lowercase. The model-side tokenizer; augmentation
// uses its own case-preserving split.
std::vector<std::string> tokenize_whitespace_lower(std::string_view text);

// Token <-> contiguous id table with reserved specials at the front.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kMask = 2;
    static constexpr int kCls = 3;
    static constexpr int kNumSpecials = 4;

    Vocabulary() = default;

    // From an explicit full token list (specials first), e.g. a checkpoint.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    // Learn from corpus texts: count whitespace-lowercase tokens, force-include
    // `forced_tokens` (label words, template words), keep the most frequent up
    // to max_size total entries. Ties break lexicographically.
    static Vocabulary build(const std::vector<std::string>& corpus_texts,
                            const std::vector<std::string>& forced_tokens,
                            std::size_t max_size);

    int id_of(std::string_view token) const;      // -1 when absent
    int id_or_unk(std::string_view token) const;
    const std::string& token(int id) const;
    std::size_t size() const { return id_to_token_.size(); }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    // Display form used when wrapping prompts; lookups lowercase, so the
    // wrapped text round-trips to kMask.
    std::string mask_token() const { return "[MASK]"; }

private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

struct EncodedInput {
    std::vector<int> ids;
    int mask_pos = -1;  // -1 when the input has no mask (CLS path)
};

// Tokenize a wrapped prompt. The mask survives by construction: the text is
// split at the recorded spans and the mask contributes exactly one token.
// When the token count exceeds max_len, paragraph-body tokens are dropped
// from the rear so the template suffix and mask are never cut.
EncodedInput encode_wrapped(const Vocabulary& vocab, const WrappedText& wrapped,
                            std::size_t max_len);

// [CLS] + paragraph tokens, tail-truncated to max_len.
EncodedInput encode_cls(const Vocabulary& vocab, std::string_view text, std::size_t max_len);

}  // namespace promptcls
