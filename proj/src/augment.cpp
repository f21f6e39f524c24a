#include "promptcls/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "promptcls/errors.hpp"

namespace promptcls {

void AugmentConfig::validate() const {
    if (alpha_sr < 0.0 || alpha_sr > 1.0 || alpha_ri < 0.0 || alpha_ri > 1.0 ||
        alpha_rs < 0.0 || alpha_rs > 1.0)
        throw UsageError("augment config: alpha values must be in [0, 1]");
    if (p_rd < 0.0 || p_rd >= 1.0)
        throw UsageError("augment config: p_rd must be in [0, 1)");
    if (n_aug < 0) throw UsageError("augment config: n_aug must be >= 0");
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t b = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > b) out.emplace_back(text.substr(b, i - b));
    }
    return out;
}

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Synonyms of `token` other than the token itself (case-insensitive lookup).
std::vector<std::string> usable_synonyms(const std::string& token, const SynonymLexicon& lexicon) {
    const std::string key = ascii_lower(token);
    const std::vector<std::string>* syns = lexicon.find(key);
    std::vector<std::string> out;
    if (!syns) return out;
    for (const std::string& s : *syns)
        if (ascii_lower(s) != key) out.push_back(s);
    return out;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

}  // namespace

std::vector<std::string> synonym_replace(const std::vector<std::string>& tokens, int n,
                                         const SynonymLexicon& lexicon, Rng& rng) {
    if (n < 0) throw UsageError("synonym_replace: n must be >= 0");
    std::vector<std::string> out = tokens;
    if (n == 0) return out;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!usable_synonyms(tokens[i], lexicon).empty()) candidates.push_back(i);
    rng.shuffle(candidates);
    const std::size_t take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < take; ++c) {
        const std::size_t pos = candidates[c];
        const std::vector<std::string> syns = usable_synonyms(tokens[pos], lexicon);
        out[pos] = syns[rng.bounded(syns.size())];
    }
    return out;
}

std::vector<std::string> random_insert(const std::vector<std::string>& tokens, int n,
                                       const SynonymLexicon& lexicon, Rng& rng) {
    if (n < 0) throw UsageError("random_insert: n must be >= 0");
    std::vector<std::string> out = tokens;
    for (int step = 0; step < n; ++step) {
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!usable_synonyms(out[i], lexicon).empty()) candidates.push_back(i);
        if (candidates.empty()) break;
        const std::size_t pick = candidates[rng.bounded(candidates.size())];
        const std::vector<std::string> syns = usable_synonyms(out[pick], lexicon);
        const std::string& syn = syns[rng.bounded(syns.size())];
        const std::size_t where = rng.bounded(out.size() + 1);
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(where), syn);
    }
    return out;
}

std::vector<std::string> random_swap(const std::vector<std::string>& tokens, int n, Rng& rng) {
    if (n < 0) throw UsageError("random_swap: n must be >= 0");
    std::vector<std::string> out = tokens;
    if (out.size() < 2) return out;
    for (int step = 0; step < n; ++step) {
        const std::size_t i = rng.bounded(out.size());
        std::size_t j = rng.bounded(out.size() - 1);
        if (j >= i) ++j;
        std::swap(out[i], out[j]);
    }
    return out;
}

std::vector<std::string> random_delete(const std::vector<std::string>& tokens, double p,
                                       Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw UsageError("random_delete: p must be in [0, 1)");
    if (tokens.empty()) return {};
    std::vector<std::string> out;
    for (const std::string& t : tokens)
        if (!(rng.uniform() < p)) out.push_back(t);
    if (out.empty()) out.push_back(tokens[rng.bounded(tokens.size())]);
    return out;
}

std::vector<std::string> eda(const std::string& text, const AugmentConfig& config,
                             const SynonymLexicon& lexicon) {
    config.validate();
    std::vector<std::string> out;
    if (config.n_aug == 0) return out;
    Rng rng(config.seed);
    const std::vector<std::string> tokens = split_whitespace(text);
    out.reserve(static_cast<std::size_t>(config.n_aug));
    for (int j = 0; j < config.n_aug; ++j) {
        if (tokens.empty()) {
            out.push_back(text);
            continue;
        }
        const double len = static_cast<double>(tokens.size());
        auto count = [&](double alpha) {
            return std::max(1, static_cast<int>(std::lround(alpha * len)));
        };
        switch (rng.bounded(4)) {
            case 0: out.push_back(join(synonym_replace(tokens, count(config.alpha_sr), lexicon, rng))); break;
            case 1: out.push_back(join(random_insert(tokens, count(config.alpha_ri), lexicon, rng))); break;
            case 2: out.push_back(join(random_swap(tokens, count(config.alpha_rs), rng))); break;
            default: out.push_back(join(random_delete(tokens, config.p_rd, rng))); break;
        }
    }
    return out;
}

std::vector<ParagraphRecord> augment_records(const std::vector<ParagraphRecord>& records,
                                             const AugmentConfig& config,
                                             const SynonymLexicon& lexicon) {
    config.validate();
    std::vector<ParagraphRecord> out;
    out.reserve(records.size() * static_cast<std::size_t>(config.n_aug));
    for (const ParagraphRecord& rec : records) {
        AugmentConfig per_record = config;
        per_record.seed = hash_mix(config.seed, rec.id);
        const std::vector<std::string> texts = eda(rec.text, per_record, lexicon);
        for (std::size_t j = 0; j < texts.size(); ++j) {
            ParagraphRecord copy = rec;
            copy.id = rec.id + "#aug" + std::to_string(j);
            copy.text = texts[j];
            out.push_back(std::move(copy));
        }
    }
    return out;
}

}  // namespace promptcls
