#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "promptcls/augment.hpp"
#include "promptcls/corpus.hpp"
#include "promptcls/ensemble.hpp"
#include "promptcls/errors.hpp"
#include "promptcls/metrics.hpp"
#include "promptcls/model.hpp"
#include "promptcls/prompt.hpp"
#include "promptcls/train.hpp"
#include "promptcls/verbalizer.hpp"

namespace py = pybind11;
using namespace promptcls;

namespace {

SynonymLexicon lexicon_from_pairs(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& pairs) {
    SynonymLexicon lex;
    lex.entries = pairs;
    return lex;
}

FrequencyTable freq_from_map(const std::map<std::string, long long>& counts) {
    FrequencyTable t;
    for (const auto& [w, c] : counts) t.counts[w] = c;
    return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "prompt-based paragraph classification core";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<TrainError>(m, "TrainError", PyExc_RuntimeError);

    py::class_<WrappedText>(m, "WrappedText")
        .def_readonly("text", &WrappedText::text)
        .def_readonly("mask_begin", &WrappedText::mask_begin)
        .def_readonly("mask_end", &WrappedText::mask_end)
        .def_readonly("body_begin", &WrappedText::body_begin)
        .def_readonly("body_end", &WrappedText::body_end)
        .def_readonly("source_id", &WrappedText::source_id);

    m.def(
        "validate_template",
        [](const std::string& pattern) {
            return validate_template(PromptTemplate{"t", pattern});
        },
        py::arg("pattern"), "Template violations; empty when the pattern is valid");

    m.def(
        "wrap",
        [](const std::string& text, const std::string& pattern, const std::string& mask_token,
           const std::string& source_id) {
            return wrap(text, PromptTemplate{"t", pattern}, mask_token, source_id);
        },
        py::arg("text"), py::arg("pattern"), py::arg("mask_token") = "[MASK]",
        py::arg("source_id") = "");

    m.def(
        "fold_of_ids",
        [](const std::vector<std::string>& ids, int k, std::uint64_t seed) {
            Dataset ds;
            for (const std::string& id : ids) {
                ParagraphRecord rec;
                rec.id = id;
                rec.text = id;
                ds.records.push_back(std::move(rec));
            }
            const FoldAssignment folds = split_folds(ds, k, seed);
            std::vector<int> out;
            out.reserve(ids.size());
            for (const std::string& id : ids) out.push_back(folds.fold_of(id));
            return out;
        },
        py::arg("ids"), py::arg("k"), py::arg("seed"),
        "Deterministic fold index per id, aligned with the input order");

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_static("from_tokens", &Vocabulary::from_tokens, py::arg("tokens"))
        .def_static(
            "build",
            [](const std::vector<std::string>& texts, const std::vector<std::string>& forced,
               std::size_t max_size) { return Vocabulary::build(texts, forced, max_size); },
            py::arg("corpus_texts"), py::arg("forced_tokens"), py::arg("max_size"))
        .def("id_of", &Vocabulary::id_of, py::arg("token"))
        .def("token", &Vocabulary::token, py::arg("id"))
        .def("__len__", &Vocabulary::size)
        .def_property_readonly("tokens", &Vocabulary::tokens)
        .def_property_readonly("mask_token", &Vocabulary::mask_token);

    py::class_<LabelScores>(m, "LabelScores")
        .def_readonly("labels", &LabelScores::labels)
        .def_readonly("scores", &LabelScores::scores)
        .def("argmax", [](const LabelScores& s) { return s.argmax(); });

    py::class_<Verbalizer>(m, "Verbalizer")
        .def_static(
            "build",
            [](const std::vector<std::string>& labels,
               const std::vector<std::vector<std::string>>& seeds,
               const std::vector<std::pair<std::string, std::vector<std::string>>>& lexicon,
               const std::map<std::string, long long>& frequency, int k, const Vocabulary& vocab) {
                auto result = Verbalizer::build(labels, seeds, lexicon_from_pairs(lexicon),
                                                freq_from_map(frequency), k, vocab);
                std::vector<std::tuple<std::string, std::string, std::string>> dropped;
                for (const auto& d : result.dropped)
                    dropped.emplace_back(d.label, d.word, d.reason);
                return py::make_tuple(std::move(result.verbalizer), std::move(dropped));
            },
            py::arg("labels"), py::arg("seeds"), py::arg("lexicon"), py::arg("frequency"),
            py::arg("k"), py::arg("vocab"),
            "Returns (verbalizer, dropped) where dropped lists (label, word, reason)")
        .def("aggregate", &Verbalizer::aggregate, py::arg("dist"))
        .def(
            "predict",
            [](const Verbalizer& v, const MaskDistribution& dist) {
                return v.predict(v.aggregate(dist));
            },
            py::arg("dist"))
        .def_property_readonly("labels", &Verbalizer::label_order)
        .def("label_words", [](const Verbalizer& v) {
            std::map<std::string, std::vector<std::string>> out;
            for (std::size_t i = 0; i < v.label_order().size(); ++i) {
                std::vector<std::string> words;
                for (const LabelWord& w : v.words(i)) words.push_back(w.surface);
                out[v.label_order()[i]] = std::move(words);
            }
            return out;
        });

    m.def(
        "label_ce_loss",
        [](const MaskDistribution& dist, const std::string& gold, const Verbalizer& v) {
            return label_ce_loss(dist, gold, v);
        },
        py::arg("dist"), py::arg("gold"), py::arg("verbalizer"));
    m.def(
        "bidirectional_kl",
        [](const std::vector<double>& p, const std::vector<double>& q) {
            return bidirectional_kl(p, q);
        },
        py::arg("p"), py::arg("q"));

    m.def(
        "synonym_replace",
        [](const std::vector<std::string>& tokens, int n,
           const std::vector<std::pair<std::string, std::vector<std::string>>>& lexicon,
           std::uint64_t seed) {
            Rng rng(seed);
            return synonym_replace(tokens, n, lexicon_from_pairs(lexicon), rng);
        },
        py::arg("tokens"), py::arg("n"), py::arg("lexicon"), py::arg("seed"));
    m.def(
        "random_insert",
        [](const std::vector<std::string>& tokens, int n,
           const std::vector<std::pair<std::string, std::vector<std::string>>>& lexicon,
           std::uint64_t seed) {
            Rng rng(seed);
            return random_insert(tokens, n, lexicon_from_pairs(lexicon), rng);
        },
        py::arg("tokens"), py::arg("n"), py::arg("lexicon"), py::arg("seed"));
    m.def(
        "random_swap",
        [](const std::vector<std::string>& tokens, int n, std::uint64_t seed) {
            Rng rng(seed);
            return random_swap(tokens, n, rng);
        },
        py::arg("tokens"), py::arg("n"), py::arg("seed"));
    m.def(
        "random_delete",
        [](const std::vector<std::string>& tokens, double p, std::uint64_t seed) {
            Rng rng(seed);
            return random_delete(tokens, p, rng);
        },
        py::arg("tokens"), py::arg("p"), py::arg("seed"));
    m.def(
        "eda",
        [](const std::string& text,
           const std::vector<std::pair<std::string, std::vector<std::string>>>& lexicon,
           int n_aug, std::uint64_t seed, double alpha_sr, double alpha_ri, double alpha_rs,
           double p_rd) {
            AugmentConfig cfg;
            cfg.n_aug = n_aug;
            cfg.seed = seed;
            cfg.alpha_sr = alpha_sr;
            cfg.alpha_ri = alpha_ri;
            cfg.alpha_rs = alpha_rs;
            cfg.p_rd = p_rd;
            return eda(text, cfg, lexicon_from_pairs(lexicon));
        },
        py::arg("text"), py::arg("lexicon"), py::arg("n_aug") = 4, py::arg("seed") = 0,
        py::arg("alpha_sr") = 0.1, py::arg("alpha_ri") = 0.1, py::arg("alpha_rs") = 0.1,
        py::arg("p_rd") = 0.1);

    m.def(
        "f1_positive",
        [](const std::vector<bool>& pred, const std::vector<bool>& gold) {
            const BinaryReport r = f1_positive(pred, gold);
            py::dict out;
            out["precision"] = r.scores.precision;
            out["recall"] = r.scores.recall;
            out["f1"] = r.scores.f1;
            out["tp"] = r.counts.tp;
            out["fp"] = r.counts.fp;
            out["fn"] = r.counts.fn;
            out["tn"] = r.counts.tn;
            return out;
        },
        py::arg("pred"), py::arg("gold"));
    m.def(
        "macro_f1",
        [](const std::vector<std::vector<bool>>& pred, const std::vector<std::vector<bool>>& gold,
           const std::vector<std::string>& categories) {
            const MultilabelReport r = macro_f1(pred, gold, categories);
            py::dict out;
            out["macro_precision"] = r.macro_precision;
            out["macro_recall"] = r.macro_recall;
            out["macro_f1"] = r.macro_f1;
            py::dict per;
            for (const CategoryReport& c : r.per_category) {
                py::dict one;
                one["precision"] = c.scores.precision;
                one["recall"] = c.scores.recall;
                one["f1"] = c.scores.f1;
                per[py::str(c.category)] = one;
            }
            out["per_category"] = per;
            return out;
        },
        py::arg("pred"), py::arg("gold"), py::arg("categories"));

    py::class_<TinyMlm>(m, "MaskScorer")
        .def_static(
            "load",
            [](const std::string& path) { return load_mlm_checkpoint(path); },
            py::arg("path"))
        .def_static(
            "fresh",
            [](const Vocabulary& vocab, int dim, int layers, int heads, int max_len,
               std::uint64_t seed) {
                ModelConfig cfg;
                cfg.dim = dim;
                cfg.layers = layers;
                cfg.heads = heads;
                cfg.max_len = max_len;
                return std::make_unique<TinyMlm>(vocab, cfg, seed);
            },
            py::arg("vocab"), py::arg("dim") = 64, py::arg("layers") = 2, py::arg("heads") = 4,
            py::arg("max_len") = 256, py::arg("seed") = 0,
            "Randomly initialized scorer, mainly for experiments")
        .def("save", [](TinyMlm& self, const std::string& path) { save_checkpoint(path, self); })
        .def(
            "score_prompt",
            [](TinyMlm& self, const std::string& text, const std::string& pattern) {
                const WrappedText wrapped =
                    wrap(text, PromptTemplate{"t", pattern}, self.mask_token());
                return self.score_mask(wrapped);
            },
            py::arg("text"), py::arg("pattern"),
            "Mask-position distribution for text wrapped in the cloze pattern")
        .def(
            "predict_label",
            [](TinyMlm& self, const std::string& text, const std::string& pattern,
               const Verbalizer& v) {
                const WrappedText wrapped =
                    wrap(text, PromptTemplate{"t", pattern}, self.mask_token());
                return v.predict(v.aggregate(self.score_mask(wrapped)));
            },
            py::arg("text"), py::arg("pattern"), py::arg("verbalizer"))
        .def_property_readonly("vocab", &TinyMlm::vocab)
        .def_property_readonly("param_count", &TinyMlm::scalar_param_count);
}
