#include "promptcls/verbalizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "promptcls/errors.hpp"

namespace promptcls {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace

const std::vector<std::string>* SynonymLexicon::find(std::string_view word) const {
    for (const auto& [w, syns] : entries)
        if (w == word) return &syns;
    return nullptr;
}

SynonymLexicon SynonymLexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("lexicon file not found: " + path);
    SynonymLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("lexicon line " + std::to_string(line_no) +
                            ": expected word<TAB>syn1,syn2,...");
        lex.entries.emplace_back(trim(line.substr(0, tab)), split_commas(line.substr(tab + 1)));
    }
    return lex;
}

long long FrequencyTable::count(std::string_view word) const {
    const auto it = counts.find(std::string(word));
    return it == counts.end() ? 0 : it->second;
}

FrequencyTable FrequencyTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("frequency file not found: " + path);
    FrequencyTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("frequency line " + std::to_string(line_no) + ": expected word<TAB>count");
        const std::string field = trim(line.substr(tab + 1));
        long long n = 0;
        std::size_t used = 0;
        try {
            n = std::stoll(field, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (field.empty() || used != field.size())
            throw DataError("frequency line " + std::to_string(line_no) + ": bad count '" + field +
                            "'");
        table.counts[trim(line.substr(0, tab))] = n;
    }
    return table;
}

std::size_t LabelScores::argmax_index() const {
    if (labels.empty()) throw DataError("argmax of empty label scores");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

double LabelScores::score_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return scores[i];
    throw DataError("unknown label '" + std::string(label) + "'");
}

Verbalizer::BuildResult Verbalizer::build(const std::vector<std::string>& labels,
                                          const std::vector<std::vector<std::string>>& seed_words,
                                          const SynonymLexicon& lexicon, const FrequencyTable& freq,
                                          int k, const Vocabulary& vocab) {
    if (labels.empty()) throw UsageError("verbalizer needs at least one label");
    if (labels.size() != seed_words.size())
        throw UsageError("one seed-word list per label required");
    if (k < 1) throw UsageError("verbalizer k must be >= 1");

    BuildResult result;
    Verbalizer& v = result.verbalizer;
    v.label_order_ = labels;
    v.vocab_size_ = vocab.size();

    struct Candidate {
        std::string surface;
        int token_id;
        long long freq;
    };
    std::vector<std::vector<Candidate>> per_label(labels.size());

    for (std::size_t li = 0; li < labels.size(); ++li) {
        if (seed_words[li].empty())
            throw UsageError("label '" + labels[li] + "' has no seed words");
        // Candidates: seeds, then each seed's synonyms, first occurrence wins.
        std::vector<std::string> raw;
        auto add = [&](const std::string& w) {
            const std::string t = trim(w);
            if (!t.empty() && std::find(raw.begin(), raw.end(), t) == raw.end()) raw.push_back(t);
        };
        for (const auto& seed : seed_words[li]) {
            add(seed);
            if (const auto* syns = lexicon.find(trim(seed)))
                for (const auto& s : *syns) add(s);
        }
        for (const auto& word : raw) {
            const auto toks = tokenize_whitespace_lower(word);
            if (toks.size() != 1) {
                result.dropped.push_back({labels[li], word, "not a single token"});
                continue;
            }
            const int id = vocab.id_of(toks[0]);
            if (id < 0) {
                result.dropped.push_back({labels[li], word, "out of vocabulary"});
                continue;
            }
            per_label[li].push_back({toks[0], id, freq.count(toks[0])});
        }
        std::sort(per_label[li].begin(), per_label[li].end(), [](const auto& a, const auto& b) {
            if (a.freq != b.freq) return a.freq > b.freq;
            return a.surface < b.surface;
        });
    }

    // Disjointness: a word reachable from several labels stays only where it
    // ranks best; rank ties go to the earlier label.
    std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> best;  // word -> (label, rank)
    for (std::size_t li = 0; li < per_label.size(); ++li) {
        for (std::size_t rank = 0; rank < per_label[li].size(); ++rank) {
            const auto& w = per_label[li][rank].surface;
            const auto it = best.find(w);
            if (it == best.end() || rank < it->second.second)
                best[w] = {li, rank};
        }
    }
    for (std::size_t li = 0; li < per_label.size(); ++li) {
        auto& cands = per_label[li];
        cands.erase(std::remove_if(cands.begin(), cands.end(),
                                   [&](const Candidate& c) {
                                       const bool keep = best.at(c.surface).first == li;
                                       if (!keep)
                                           result.dropped.push_back(
                                               {labels[li], c.surface, "assigned to another label"});
                                       return !keep;
                                   }),
                    cands.end());
    }

    for (std::size_t li = 0; li < per_label.size(); ++li) {
        const auto& cands = per_label[li];
        if (cands.empty())
            throw DataError("label '" + labels[li] +
                            "' has no usable label words (all candidates out of vocabulary)");
        std::vector<LabelWord> words;
        std::vector<int> ids;
        for (std::size_t i = 0; i < cands.size() && i < static_cast<std::size_t>(k); ++i) {
            words.push_back({cands[i].surface, cands[i].token_id});
            ids.push_back(cands[i].token_id);
        }
        v.words_.push_back(std::move(words));
        v.token_groups_.push_back(std::move(ids));
    }
    return result;
}

LabelScores Verbalizer::aggregate(const MaskDistribution& dist) const {
    if (dist.size() != vocab_size_)
        throw DataError("distribution length " + std::to_string(dist.size()) +
                        " does not match verbalizer vocabulary " + std::to_string(vocab_size_));
    LabelScores out;
    out.labels = label_order_;
    out.scores.reserve(label_order_.size());
    for (const auto& group : token_groups_) {
        double sum = 0.0;
        for (const int id : group) sum += dist[static_cast<std::size_t>(id)];
        out.scores.push_back(sum / static_cast<double>(group.size()));
    }
    return out;
}

const std::string& Verbalizer::predict(const LabelScores& scores) const {
    return scores.argmax();
}

std::size_t Verbalizer::label_index(std::string_view label) const {
    for (std::size_t i = 0; i < label_order_.size(); ++i)
        if (label_order_[i] == label) return i;
    throw DataError("label '" + std::string(label) + "' not in verbalizer label order");
}

void Verbalizer::export_json(const std::string& path) const {
    nlohmann::json j;
    j["labels"] = nlohmann::json::array();
    for (std::size_t i = 0; i < label_order_.size(); ++i) {
        nlohmann::json entry;
        entry["label"] = label_order_[i];
        entry["words"] = nlohmann::json::array();
        for (const auto& w : words_[i])
            entry["words"].push_back({{"surface", w.surface}, {"token_id", w.token_id}});
        j["labels"].push_back(entry);
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write verbalizer export: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace promptcls
