#include "promptcls/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "promptcls/errors.hpp"

namespace promptcls {

namespace {

const std::vector<std::string>& special_tokens() {
    static const std::vector<std::string> specials = {"[pad]", "[unk]", "[mask]", "[cls]"};
    return specials;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

bool is_probability_vector(const std::vector<double>& p, double tol) {
    double sum = 0.0;
    for (const double x : p) {
        if (!(x >= 0.0)) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= tol;
}

std::vector<std::string> tokenize_whitespace_lower(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) tokens.push_back(lower(text.substr(i, j - i)));
        i = j;
    }
    return tokens;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    const auto& specials = special_tokens();
    if (tokens.size() < specials.size())
        throw DataError("vocabulary token list lacks the reserved specials");
    for (std::size_t i = 0; i < specials.size(); ++i)
        if (tokens[i] != specials[i])
            throw DataError("vocabulary token " + std::to_string(i) + " must be '" + specials[i] +
                            "', got '" + tokens[i] + "'");
    Vocabulary v;
    v.id_to_token_ = std::move(tokens);
    for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
        if (!v.token_to_id_.emplace(v.id_to_token_[i], static_cast<int>(i)).second)
            throw DataError("duplicate vocabulary token '" + v.id_to_token_[i] + "'");
    }
    return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus_texts,
                             const std::vector<std::string>& forced_tokens,
                             std::size_t max_size) {
    const auto& specials = special_tokens();
    if (max_size < specials.size() + 1) throw UsageError("vocabulary max_size too small");

    std::unordered_map<std::string, long long> counts;
    for (const auto& text : corpus_texts)
        for (auto& tok : tokenize_whitespace_lower(text)) ++counts[tok];

    std::vector<std::string> forced;
    for (const auto& raw : forced_tokens) {
        const auto toks = tokenize_whitespace_lower(raw);
        if (toks.size() != 1) continue;  // multi-token surfaces cannot be vocabulary entries
        if (std::find(specials.begin(), specials.end(), toks[0]) != specials.end()) continue;
        if (std::find(forced.begin(), forced.end(), toks[0]) == forced.end())
            forced.push_back(toks[0]);
    }

    std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> tokens = specials;
    for (const auto& tok : forced) tokens.push_back(tok);
    for (const auto& [tok, n] : ranked) {
        if (tokens.size() >= max_size) break;
        if (std::find(tokens.begin(), tokens.end(), tok) != tokens.end()) continue;
        tokens.push_back(tok);
    }
    return from_tokens(std::move(tokens));
}

int Vocabulary::id_of(std::string_view token) const {
    const auto it = token_to_id_.find(lower(token));
    return it == token_to_id_.end() ? -1 : it->second;
}

int Vocabulary::id_or_unk(std::string_view token) const {
    const int id = id_of(token);
    return id < 0 ? kUnk : id;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
        throw DataError("token id out of range: " + std::to_string(id));
    return id_to_token_[static_cast<std::size_t>(id)];
}

EncodedInput encode_wrapped(const Vocabulary& vocab, const WrappedText& wrapped,
                            std::size_t max_len) {
    const std::string& s = wrapped.text;
    if (wrapped.mask_end > s.size() || wrapped.body_end > s.size())
        throw DataError("wrapped text spans out of range");

    const bool body_first = wrapped.body_begin < wrapped.mask_begin;
    const std::size_t a0 = body_first ? wrapped.body_begin : wrapped.mask_begin;
    const std::size_t a1 = body_first ? wrapped.body_end : wrapped.mask_end;
    const std::size_t b0 = body_first ? wrapped.mask_begin : wrapped.body_begin;
    const std::size_t b1 = body_first ? wrapped.mask_end : wrapped.body_end;

    auto toks = [&](std::size_t from, std::size_t to) {
        return tokenize_whitespace_lower(std::string_view(s).substr(from, to - from));
    };
    std::vector<std::string> head = toks(0, a0);
    std::vector<std::string> body = toks(wrapped.body_begin, wrapped.body_end);
    std::vector<std::string> mid = toks(a1, b0);
    std::vector<std::string> tail = toks(b1, s.size());

    const std::size_t fixed = head.size() + mid.size() + tail.size() + 1;  // +1 for the mask
    if (fixed > max_len)
        throw DataError("template alone exceeds max sequence length " + std::to_string(max_len));
    if (fixed + body.size() > max_len) body.resize(max_len - fixed);

    EncodedInput out;
    out.ids.reserve(fixed + body.size());
    auto push_all = [&](const std::vector<std::string>& toks_vec) {
        for (const auto& t : toks_vec) out.ids.push_back(vocab.id_or_unk(t));
    };
    push_all(head);
    if (body_first) {
        push_all(body);
        push_all(mid);
        out.mask_pos = static_cast<int>(out.ids.size());
        out.ids.push_back(Vocabulary::kMask);
    } else {
        out.mask_pos = static_cast<int>(out.ids.size());
        out.ids.push_back(Vocabulary::kMask);
        push_all(mid);
        push_all(body);
    }
    push_all(tail);
    return out;
}

EncodedInput encode_cls(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
    if (text.empty()) throw DataError("cannot encode empty text");
    EncodedInput out;
    out.ids.push_back(Vocabulary::kCls);
    for (const auto& t : tokenize_whitespace_lower(text)) {
        if (out.ids.size() >= max_len) break;
        out.ids.push_back(vocab.id_or_unk(t));
    }
    return out;
}

}  // namespace promptcls
