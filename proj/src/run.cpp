#include "promptcls/run.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "promptcls/ensemble.hpp"
#include "promptcls/errors.hpp"
#include "promptcls/metrics.hpp"

namespace fs = std::filesystem;

namespace promptcls {

Strategy Strategy::parse(const std::string& spec) {
    Strategy s;
    s.prompt = false;
    std::vector<std::string> parts;
    std::string item;
    std::istringstream ss(spec);
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        parts.push_back(item.substr(b, e - b + 1));
    }
    if (parts.empty()) throw UsageError("strategy is empty");
    if (parts[0] == "cls")
        s.cls_baseline = true;
    else if (parts[0] == "prompt")
        s.prompt = true;
    else
        throw UsageError("strategy must start with 'cls' or 'prompt': " + spec);
    std::set<std::string> seen;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (!seen.insert(parts[i]).second)
            throw UsageError("strategy option repeated: " + parts[i]);
        if (parts[i] == "ensemble")
            s.ensemble = true;
        else if (parts[i] == "rdrop")
            s.rdrop = true;
        else if (parts[i] == "eda")
            s.eda = true;
        else
            throw UsageError("unknown strategy option: " + parts[i]);
    }
    return s;
}

std::string Strategy::to_string() const {
    std::string out = cls_baseline ? "cls" : "prompt";
    if (ensemble) out += ",ensemble";
    if (rdrop) out += ",rdrop";
    if (eda) out += ",eda";
    return out;
}

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "task",          "dataset",      "delimiter",     "id_column",
        "text_column",   "binary_column", "categories_column", "categories",
        "templates",     "lexicon",      "frequency",     "verbalizer_k",
        "labels",        "strategy",     "folds",         "stratified",
        "seed",          "out",          "learning_rate", "max_epochs",
        "batch_size",    "max_seq_len",  "rdrop_alpha",   "dropout",
        "patience",      "weight_decay", "dim",           "layers",
        "heads",         "ffn_mult",     "vocab_max",     "aug_alpha_sr",
        "aug_alpha_ri",  "aug_alpha_rs", "aug_p_rd",      "aug_n_aug",
        "aug_seed",
    };
    return keys;
}

char parse_delimiter(const std::string& s) {
    if (s == "tab" || s == "\\t") return '\t';
    if (s == "comma") return ',';
    if (s.size() == 1) return s[0];
    throw UsageError("delimiter must be 'tab', 'comma', or one character: " + s);
}

void require_file(const std::string& what, const std::string& path) {
    if (path.empty()) throw UsageError("config key required: " + what);
    if (!fs::exists(path)) throw DataError(what + " file not found: " + path);
}

}  // namespace

RunConfig resolve_run_config(const KvConfig& kv) {
    RunConfig cfg;
    cfg.task = parse_task_kind(kv.require_string("task"));
    cfg.dataset_path = kv.require_string("dataset");
    cfg.out_dir = kv.require_string("out");

    cfg.schema.delimiter = parse_delimiter(kv.get_string("delimiter", "tab"));
    cfg.schema.id_column = kv.get_string("id_column", "id");
    cfg.schema.text_column = kv.get_string("text_column", "text");
    if (cfg.task == TaskKind::binary) {
        cfg.schema.binary_column = kv.get_string("binary_column", "label");
        cfg.schema.categories_column = kv.get_string("categories_column", "");
        cfg.labels = kv.get_list("labels", {"negative", "positive"});
    } else {
        cfg.schema.binary_column = kv.get_string("binary_column", "");
        cfg.schema.categories_column = kv.get_string("categories_column", "categories");
        cfg.schema.category_list = kv.get_list("categories", {});
        cfg.labels = kv.get_list("labels", {"no", "yes"});
    }

    cfg.template_path = kv.get_string("templates", "");
    cfg.lexicon_path = kv.get_string("lexicon", "");
    cfg.frequency_path = kv.get_string("frequency", "");
    cfg.verbalizer_k = static_cast<int>(kv.get_int("verbalizer_k", 3));
    for (const std::string& label : cfg.labels)
        cfg.label_seeds.push_back(kv.get_list("seeds." + label, {label}));

    cfg.strategy = Strategy::parse(kv.get_string("strategy", "prompt"));
    cfg.folds = static_cast<int>(kv.get_int("folds", 10));
    cfg.stratified = kv.get_bool("stratified", false);
    cfg.seed = kv.get_u64("seed", 0);

    cfg.train.learning_rate = kv.get_double("learning_rate", 1e-5);
    cfg.train.max_epochs = static_cast<int>(kv.get_int("max_epochs", 10));
    cfg.train.batch_size = static_cast<int>(kv.get_int("batch_size", 16));
    cfg.train.max_seq_len = static_cast<int>(kv.get_int("max_seq_len", 256));
    cfg.train.rdrop_alpha = kv.get_double("rdrop_alpha", 1.0);
    cfg.train.dropout_rate = kv.get_double("dropout", 0.1);
    cfg.train.early_stop_patience = static_cast<int>(kv.get_int("patience", 3));
    cfg.train.weight_decay = kv.get_double("weight_decay", 0.01);
    cfg.train.seed = cfg.seed;

    cfg.model.dim = static_cast<int>(kv.get_int("dim", 64));
    cfg.model.layers = static_cast<int>(kv.get_int("layers", 2));
    cfg.model.heads = static_cast<int>(kv.get_int("heads", 4));
    cfg.model.ffn_mult = static_cast<int>(kv.get_int("ffn_mult", 4));
    cfg.model.max_len = cfg.train.max_seq_len;
    cfg.model.dropout = cfg.train.dropout_rate;
    cfg.vocab_max = static_cast<std::size_t>(kv.get_int("vocab_max", 8000));

    cfg.augment.alpha_sr = kv.get_double("aug_alpha_sr", 0.1);
    cfg.augment.alpha_ri = kv.get_double("aug_alpha_ri", 0.1);
    cfg.augment.alpha_rs = kv.get_double("aug_alpha_rs", 0.1);
    cfg.augment.p_rd = kv.get_double("aug_p_rd", 0.1);
    cfg.augment.n_aug = static_cast<int>(kv.get_int("aug_n_aug", 4));
    cfg.augment.seed = kv.get_u64("aug_seed", cfg.seed);

    std::set<std::string> allowed = known_keys();
    for (const std::string& label : cfg.labels) allowed.insert("seeds." + label);
    for (const std::string& key : kv.keys())
        if (!allowed.count(key)) throw UsageError("unknown config key: " + key);

    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (labels.size() != 2 || labels[0] == labels[1])
        throw UsageError("labels must be two distinct names (negative first)");
    if (folds < 2) throw UsageError("folds must be >= 2");
    if (verbalizer_k < 1) throw UsageError("verbalizer_k must be >= 1");
    if (vocab_max <= Vocabulary::kNumSpecials)
        throw UsageError("vocab_max must exceed the special token count");
    if (task == TaskKind::multilabel && schema.category_list.empty())
        throw UsageError("multilabel task requires the categories list");
    for (const auto& seeds : label_seeds)
        if (seeds.empty()) throw UsageError("every label needs at least one seed word");
    require_file("dataset", dataset_path);
    if (!template_path.empty() && !fs::exists(template_path))
        throw DataError("templates file not found: " + template_path);
    if (!lexicon_path.empty() && !fs::exists(lexicon_path))
        throw DataError("lexicon file not found: " + lexicon_path);
    if (!frequency_path.empty() && !fs::exists(frequency_path))
        throw DataError("frequency file not found: " + frequency_path);
    train.validate();
    model.validate();
    augment.validate();
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["task"] = promptcls::to_string(task);
    j["dataset"] = dataset_path;
    j["delimiter"] = schema.delimiter == '\t' ? "tab" : std::string(1, schema.delimiter);
    j["id_column"] = schema.id_column;
    j["text_column"] = schema.text_column;
    j["binary_column"] = schema.binary_column;
    j["categories_column"] = schema.categories_column;
    j["categories"] = schema.category_list;
    j["templates"] = template_path;
    j["lexicon"] = lexicon_path;
    j["frequency"] = frequency_path;
    j["verbalizer_k"] = verbalizer_k;
    j["labels"] = labels;
    for (std::size_t i = 0; i < labels.size(); ++i)
        j["seeds." + labels[i]] = label_seeds[i];
    j["strategy"] = strategy.to_string();
    j["folds"] = folds;
    j["stratified"] = stratified;
    j["seed"] = seed;
    j["out"] = out_dir;
    j["learning_rate"] = train.learning_rate;
    j["max_epochs"] = train.max_epochs;
    j["batch_size"] = train.batch_size;
    j["max_seq_len"] = train.max_seq_len;
    j["rdrop_alpha"] = train.rdrop_alpha;
    j["dropout"] = train.dropout_rate;
    j["patience"] = train.early_stop_patience;
    j["weight_decay"] = train.weight_decay;
    j["dim"] = model.dim;
    j["layers"] = model.layers;
    j["heads"] = model.heads;
    j["ffn_mult"] = model.ffn_mult;
    j["vocab_max"] = vocab_max;
    j["aug_alpha_sr"] = augment.alpha_sr;
    j["aug_alpha_ri"] = augment.alpha_ri;
    j["aug_alpha_rs"] = augment.alpha_rs;
    j["aug_p_rd"] = augment.p_rd;
    j["aug_n_aug"] = augment.n_aug;
    j["aug_seed"] = augment.seed;
    return j.dump(2);
}

namespace {

void ensure_out_dir(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
}

void echo_config(const RunConfig& cfg, const std::string& command) {
    ensure_out_dir(cfg);
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(cfg.to_json());
    j["command"] = command;
    std::ofstream os(fs::path(cfg.out_dir) / ("config." + command + ".json"));
    if (!os) throw DataError("cannot write config echo in " + cfg.out_dir);
    os << j.dump(2) << "\n";
}

void write_diagnostics(const RunConfig& cfg, const std::vector<RowDiagnostic>& rejected) {
    if (rejected.empty()) return;
    std::ofstream os(fs::path(cfg.out_dir) / "load_diagnostics.txt");
    for (const RowDiagnostic& d : rejected)
        os << "line " << d.line_no << ": " << d.message << "\n";
}

std::string manifest_path(const RunConfig& cfg) {
    return (fs::path(cfg.out_dir) / "folds.tsv").string();
}

std::vector<std::string> template_forced_tokens(const TaskPromptSet& prompts) {
    std::vector<std::string> out;
    auto add_pattern = [&](const std::string& pattern) {
        std::string cleaned = pattern;
        for (const char* slot : {"{text}", "{mask}"}) {
            const std::string needle = slot;
            for (std::size_t at = cleaned.find(needle); at != std::string::npos;
                 at = cleaned.find(needle))
                cleaned.replace(at, needle.size(), " ");
        }
        for (std::string& tok : tokenize_whitespace_lower(cleaned)) out.push_back(std::move(tok));
    };
    if (prompts.task_kind == TaskKind::binary) {
        add_pattern(prompts.binary_template.pattern);
    } else {
        for (const auto& [_, tmpl] : prompts.per_category) add_pattern(tmpl.pattern);
    }
    return out;
}

// Seeds plus their lexicon synonyms, the candidate pool the verbalizer
// filters. Forcing them into the vocabulary keeps the scorer able to rate
// every candidate; the verbalizer's own filters still apply.
std::vector<std::string> label_forced_tokens(const RunConfig& cfg, const SynonymLexicon& lexicon) {
    std::vector<std::string> out;
    for (const auto& seeds : cfg.label_seeds) {
        for (const std::string& seed : seeds) {
            out.push_back(seed);
            if (const auto* syns = lexicon.find(seed))
                for (const std::string& s : *syns) out.push_back(s);
        }
    }
    return out;
}

}  // namespace

RunContext build_run_context(const RunConfig& cfg) {
    require_file("templates", cfg.template_path);
    require_file("lexicon", cfg.lexicon_path);
    require_file("frequency", cfg.frequency_path);

    RunContext ctx;
    LoadResult loaded = load_dataset(cfg.dataset_path, cfg.schema);
    ctx.dataset = std::move(loaded.dataset);
    ctx.rejected = std::move(loaded.rejected);
    if (ctx.dataset.records.empty()) throw DataError("dataset has no usable records");

    const auto entries = load_template_file(cfg.template_path);
    ctx.prompts = make_prompt_set(entries, cfg.task, ctx.dataset.category_list);

    const SynonymLexicon lexicon = SynonymLexicon::load(cfg.lexicon_path);
    const FrequencyTable freq = FrequencyTable::load(cfg.frequency_path);

    std::vector<std::string> corpus_texts;
    corpus_texts.reserve(ctx.dataset.records.size());
    for (const ParagraphRecord& rec : ctx.dataset.records) corpus_texts.push_back(rec.text);
    std::vector<std::string> forced = template_forced_tokens(ctx.prompts);
    for (std::string& tok : label_forced_tokens(cfg, lexicon)) forced.push_back(std::move(tok));
    ctx.vocab = Vocabulary::build(corpus_texts, forced, cfg.vocab_max);

    auto built = Verbalizer::build(cfg.labels, cfg.label_seeds, lexicon, freq, cfg.verbalizer_k,
                                   ctx.vocab);
    ctx.verbalizer = std::move(built.verbalizer);
    ctx.dropped_words = std::move(built.dropped);
    return ctx;
}

std::string fold_dir(const RunConfig& cfg, int fold) {
    return (fs::path(cfg.out_dir) / ("fold" + std::to_string(fold))).string();
}

std::string mlm_checkpoint_path(const RunConfig& cfg, int fold) {
    return (fs::path(fold_dir(cfg, fold)) / "best.ckpt").string();
}

std::string cls_checkpoint_path(const RunConfig& cfg, int fold, const std::string& category) {
    const std::string name = category.empty() ? "best.ckpt" : "best." + category + ".ckpt";
    return (fs::path(fold_dir(cfg, fold)) / name).string();
}

void cmd_split(const RunConfig& cfg) {
    echo_config(cfg, "split");
    LoadResult loaded = load_dataset(cfg.dataset_path, cfg.schema);
    write_diagnostics(cfg, loaded.rejected);
    const FoldAssignment folds = split_folds(loaded.dataset, cfg.folds, cfg.seed, cfg.stratified);
    write_fold_manifest(manifest_path(cfg), loaded.dataset, folds);
}

namespace {

std::vector<int> folds_to_use(const RunConfig& cfg) {
    std::vector<int> out;
    if (cfg.strategy.ensemble) {
        for (int i = 0; i < cfg.folds; ++i) out.push_back(i);
    } else {
        out.push_back(0);
    }
    return out;
}

// Local dataset owning train records (plus any augmented copies) so the
// example builders can run over one view.
Dataset own_records(std::vector<ParagraphRecord> records, const Dataset& base) {
    Dataset out;
    out.records = std::move(records);
    out.category_list = base.category_list;
    out.schema_meta = base.schema_meta;
    return out;
}

DatasetView full_view(const Dataset& ds) {
    DatasetView v{&ds, {}};
    v.indices.resize(ds.records.size());
    for (std::size_t i = 0; i < v.indices.size(); ++i) v.indices[i] = i;
    return v;
}

std::vector<ClsExample> make_cls_examples(const DatasetView& view, const RunConfig& cfg,
                                          const std::string& category) {
    std::vector<ClsExample> out;
    out.reserve(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        const ParagraphRecord& rec = view[i];
        ClsExample ex;
        ex.text = rec.text;
        if (category.empty()) {
            if (!rec.binary_label) throw DataError("record has no binary label: " + rec.id);
            ex.gold = *rec.binary_label == BinaryLabel::positive ? 1 : 0;
        } else {
            const bool member = std::find(rec.categories.begin(), rec.categories.end(),
                                          category) != rec.categories.end();
            ex.gold = member ? 1 : 0;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

nlohmann::ordered_json fold_summary_entry(int fold, const TrainReport& report) {
    nlohmann::ordered_json j;
    j["fold"] = fold;
    j["skipped"] = false;
    j["metric"] = report.metric_name;
    j["best_epoch"] = report.best_epoch;
    j["best_metric"] = report.best_metric;
    j["epochs_run"] = report.history.size();
    j["checkpoint"] = report.checkpoint;
    return j;
}

}  // namespace

void cmd_train(const RunConfig& cfg) {
    echo_config(cfg, "train");
    RunContext ctx = build_run_context(cfg);
    write_diagnostics(cfg, ctx.rejected);
    ctx.verbalizer.export_json((fs::path(cfg.out_dir) / "verbalizer.json").string());
    if (!ctx.dropped_words.empty()) {
        std::ofstream os(fs::path(cfg.out_dir) / "verbalizer_dropped.txt");
        for (const auto& d : ctx.dropped_words)
            os << d.label << '\t' << d.word << '\t' << d.reason << "\n";
    }

    if (!fs::exists(manifest_path(cfg)))
        throw DataError("fold manifest missing (run the split command first): " +
                        manifest_path(cfg));
    const FoldAssignment folds = read_fold_manifest(manifest_path(cfg));
    if (folds.k != cfg.folds)
        throw UsageError("config expects " + std::to_string(cfg.folds) +
                         " folds but the manifest holds " + std::to_string(folds.k));
    for (const ParagraphRecord& rec : ctx.dataset.records) folds.fold_of(rec.id);

    std::optional<SynonymLexicon> lexicon;
    if (cfg.strategy.eda) lexicon = SynonymLexicon::load(cfg.lexicon_path);

    const std::size_t positive_index = ctx.verbalizer.label_index(cfg.positive_label());
    const int n_categories =
        cfg.task == TaskKind::multilabel ? static_cast<int>(ctx.dataset.category_list.size()) : 0;

    nlohmann::ordered_json summary;
    summary["strategy"] = cfg.strategy.to_string();
    summary["folds"] = nlohmann::ordered_json::array();
    double metric_sum = 0.0;
    int metric_count = 0;

    for (const int fold : folds_to_use(cfg)) {
        fs::create_directories(fold_dir(cfg, fold));
        auto [train_v, val_v] = fold_view(ctx.dataset, folds, fold);
        if (train_v.size() == 0)
            throw TrainError("fold " + std::to_string(fold) + " has an empty training split");

        std::vector<ParagraphRecord> train_records = train_v.materialize();
        if (cfg.strategy.eda) {
            AugmentConfig acfg = cfg.augment;
            std::vector<ParagraphRecord> extra = augment_records(train_records, acfg, *lexicon);
            for (ParagraphRecord& rec : extra) train_records.push_back(std::move(rec));
        }
        const Dataset train_ds = own_records(std::move(train_records), ctx.dataset);
        const DatasetView train_view = full_view(train_ds);

        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed + static_cast<std::uint64_t>(fold);
        if (!cfg.strategy.rdrop) tc.rdrop_alpha = 0.0;
        ModelConfig mc = cfg.model;
        mc.dropout = tc.dropout_rate;
        mc.max_len = tc.max_seq_len;

        try {
            if (cfg.strategy.prompt) {
                const std::string ckpt = mlm_checkpoint_path(cfg, fold);
                if (fs::exists(ckpt)) {
                    nlohmann::ordered_json j;
                    j["fold"] = fold;
                    j["skipped"] = true;
                    j["checkpoint"] = ckpt;
                    summary["folds"].push_back(std::move(j));
                    continue;
                }
                std::vector<PromptExample> train_ex, val_ex;
                if (cfg.task == TaskKind::binary) {
                    train_ex = make_binary_examples(train_view, ctx.prompts, ctx.verbalizer,
                                                    ctx.vocab.mask_token(), cfg.negative_label(),
                                                    cfg.positive_label());
                    val_ex = make_binary_examples(val_v, ctx.prompts, ctx.verbalizer,
                                                  ctx.vocab.mask_token(), cfg.negative_label(),
                                                  cfg.positive_label());
                } else {
                    train_ex = make_multilabel_examples(train_view, ctx.prompts, ctx.verbalizer,
                                                        ctx.vocab.mask_token(),
                                                        cfg.negative_label(), cfg.positive_label());
                    val_ex = make_multilabel_examples(val_v, ctx.prompts, ctx.verbalizer,
                                                      ctx.vocab.mask_token(), cfg.negative_label(),
                                                      cfg.positive_label());
                }
                const std::uint64_t model_seed = hash_mix(tc.seed, "model-init");
                MlmFactory factory = [&]() {
                    return std::make_unique<TinyMlm>(ctx.vocab, mc, model_seed);
                };
                FoldOutcome outcome = train_fold(factory, train_ex, val_ex, ctx.verbalizer,
                                                 positive_index, n_categories, tc, ckpt);
                outcome.report.write_jsonl(
                    (fs::path(fold_dir(cfg, fold)) / "train_report.jsonl").string());
                summary["folds"].push_back(fold_summary_entry(fold, outcome.report));
                metric_sum += outcome.report.best_metric;
                ++metric_count;
            } else {
                std::vector<std::string> categories{std::string()};
                if (cfg.task == TaskKind::multilabel) categories = ctx.dataset.category_list;
                double fold_metric = 0.0;
                bool skipped_all = true;
                for (const std::string& category : categories) {
                    const std::string ckpt = cls_checkpoint_path(cfg, fold, category);
                    if (fs::exists(ckpt)) continue;
                    skipped_all = false;
                    const auto train_ex = make_cls_examples(train_view, cfg, category);
                    const auto val_ex = make_cls_examples(val_v, cfg, category);
                    const std::uint64_t model_seed =
                        hash_mix(tc.seed, "cls-init:" + category);
                    ClsFactory factory = [&]() {
                        return std::make_unique<ClsHead>(ctx.vocab, mc, cfg.labels, model_seed);
                    };
                    ClsFoldOutcome outcome =
                        train_cls_fold(factory, train_ex, val_ex, 1, tc, ckpt);
                    const std::string report_name =
                        category.empty() ? "train_report.jsonl"
                                         : "train_report." + category + ".jsonl";
                    outcome.report.write_jsonl(
                        (fs::path(fold_dir(cfg, fold)) / report_name).string());
                    fold_metric += outcome.report.best_metric;
                }
                nlohmann::ordered_json j;
                j["fold"] = fold;
                j["skipped"] = skipped_all;
                if (!skipped_all) {
                    j["metric"] = cfg.task == TaskKind::multilabel ? "macro_f1" : "f1";
                    j["best_metric"] =
                        fold_metric / static_cast<double>(categories.size());
                    metric_sum += fold_metric / static_cast<double>(categories.size());
                    ++metric_count;
                }
                summary["folds"].push_back(std::move(j));
            }
        } catch (const UsageError&) {
            throw;
        } catch (const DataError& e) {
            throw TrainError("fold " + std::to_string(fold) + ": " + e.what());
        } catch (const TrainError& e) {
            throw TrainError("fold " + std::to_string(fold) + ": " + e.what());
        }
    }

    if (metric_count > 0)
        summary["mean_best_metric"] = metric_sum / static_cast<double>(metric_count);
    std::ofstream os(fs::path(cfg.out_dir) / "train_summary.json");
    if (!os) throw DataError("cannot write train summary in " + cfg.out_dir);
    os << summary.dump(2) << "\n";
}

namespace {

DatasetSchema unlabeled_schema(const RunConfig& cfg) {
    DatasetSchema s = cfg.schema;
    s.binary_column.clear();
    s.categories_column.clear();
    return s;
}

std::vector<std::unique_ptr<TinyMlm>> load_mlm_models(const RunConfig& cfg) {
    std::vector<std::unique_ptr<TinyMlm>> models;
    for (const int fold : folds_to_use(cfg)) {
        const std::string path = mlm_checkpoint_path(cfg, fold);
        if (!fs::exists(path)) throw DataError("checkpoint missing: " + path);
        models.push_back(load_mlm_checkpoint(path));
    }
    for (const auto& m : models)
        if (m->vocab().tokens() != models.front()->vocab().tokens())
            throw DataError("ensemble checkpoints have differing vocabularies");
    return models;
}

}  // namespace

void cmd_predict(const RunConfig& cfg, const std::string& input_path,
                 const std::string& output_path) {
    echo_config(cfg, "predict");
    require_file("templates", cfg.template_path);
    require_file("lexicon", cfg.lexicon_path);
    require_file("frequency", cfg.frequency_path);

    const std::string in_path = input_path.empty() ? cfg.dataset_path : input_path;
    LoadResult loaded = load_dataset(in_path, unlabeled_schema(cfg));
    write_diagnostics(cfg, loaded.rejected);
    const Dataset& ds = loaded.dataset;

    const auto entries = load_template_file(cfg.template_path);
    std::vector<std::string> categories;
    if (cfg.task == TaskKind::multilabel) categories = cfg.schema.category_list;
    const TaskPromptSet prompts = make_prompt_set(entries, cfg.task, categories);

    std::vector<PredictionRow> rows;
    rows.reserve(ds.records.size());

    if (cfg.strategy.prompt) {
        const std::vector<std::unique_ptr<TinyMlm>> models = load_mlm_models(cfg);
        const SynonymLexicon lexicon = SynonymLexicon::load(cfg.lexicon_path);
        const FrequencyTable freq = FrequencyTable::load(cfg.frequency_path);
        const Verbalizer verbalizer =
            Verbalizer::build(cfg.labels, cfg.label_seeds, lexicon, freq, cfg.verbalizer_k,
                              models.front()->vocab())
                .verbalizer;
        std::vector<ScorerModel*> raw;
        raw.reserve(models.size());
        for (const auto& m : models) raw.push_back(m.get());

        for (const ParagraphRecord& rec : ds.records) {
            if (cfg.task == TaskKind::binary) {
                const WrappedText wrapped =
                    wrap(rec.text, prompts.binary_template, models.front()->mask_token(), rec.id);
                const LabelScores scores = ensemble_scores(raw, wrapped, verbalizer);
                rows.push_back({rec.id, decide_binary(scores, verbalizer)});
            } else {
                std::vector<std::pair<std::string, LabelScores>> per_category;
                for (const auto& [category, wrapped] :
                     wrap_multilabel(rec, prompts, models.front()->mask_token())) {
                    per_category.emplace_back(category,
                                              ensemble_scores(raw, wrapped, verbalizer));
                }
                const auto decided =
                    decide_multilabel(per_category, categories, cfg.positive_label());
                std::string value;
                for (std::size_t i = 0; i < decided.size(); ++i) {
                    if (i) value += ',';
                    value += decided[i];
                }
                rows.push_back({rec.id, value});
            }
        }
    } else {
        if (cfg.task == TaskKind::binary) {
            std::vector<std::unique_ptr<ClsHead>> models;
            for (const int fold : folds_to_use(cfg)) {
                const std::string path = cls_checkpoint_path(cfg, fold, "");
                if (!fs::exists(path)) throw DataError("checkpoint missing: " + path);
                models.push_back(load_cls_checkpoint(path));
            }
            std::vector<ClsHead*> raw;
            for (const auto& m : models) raw.push_back(m.get());
            for (const ParagraphRecord& rec : ds.records) {
                const std::vector<double> p = ensemble_cls_probs(raw, rec.text);
                const std::size_t arg =
                    static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
                rows.push_back({rec.id, cfg.labels[arg]});
            }
        } else {
            std::vector<std::vector<std::unique_ptr<ClsHead>>> per_category_models;
            for (const std::string& category : categories) {
                std::vector<std::unique_ptr<ClsHead>> models;
                for (const int fold : folds_to_use(cfg)) {
                    const std::string path = cls_checkpoint_path(cfg, fold, category);
                    if (!fs::exists(path)) throw DataError("checkpoint missing: " + path);
                    models.push_back(load_cls_checkpoint(path));
                }
                per_category_models.push_back(std::move(models));
            }
            for (const ParagraphRecord& rec : ds.records) {
                std::string value;
                bool first = true;
                for (std::size_t c = 0; c < categories.size(); ++c) {
                    std::vector<ClsHead*> raw;
                    for (const auto& m : per_category_models[c]) raw.push_back(m.get());
                    const std::vector<double> p = ensemble_cls_probs(raw, rec.text);
                    if (p[1] > p[0]) {
                        if (!first) value += ',';
                        value += categories[c];
                        first = false;
                    }
                }
                rows.push_back({rec.id, value});
            }
        }
    }

    write_predictions(output_path, rows);
}

std::string cmd_evaluate(const RunConfig& cfg, const std::string& predictions_path,
                         const std::string& gold_path) {
    echo_config(cfg, "evaluate");
    const std::string gpath = gold_path.empty() ? cfg.dataset_path : gold_path;
    LoadResult loaded = load_dataset(gpath, cfg.schema);
    write_diagnostics(cfg, loaded.rejected);
    const Dataset& gold = loaded.dataset;
    if (gold.records.empty()) throw DataError("gold dataset has no usable records");

    const std::vector<PredictionRow> pred_rows = read_predictions(predictions_path);
    std::map<std::string, std::string> pred_of;
    for (const PredictionRow& row : pred_rows) {
        if (!pred_of.emplace(row.id, row.value).second)
            throw DataError("duplicate prediction id: " + row.id);
    }
    std::set<std::string> gold_ids;
    for (const ParagraphRecord& rec : gold.records) gold_ids.insert(rec.id);
    for (const PredictionRow& row : pred_rows)
        if (!gold_ids.count(row.id)) throw DataError("prediction for unknown id: " + row.id);

    std::string report_json;
    if (cfg.task == TaskKind::binary) {
        std::vector<bool> pred, truth;
        for (const ParagraphRecord& rec : gold.records) {
            const auto it = pred_of.find(rec.id);
            if (it == pred_of.end()) throw DataError("no prediction for id: " + rec.id);
            if (it->second != cfg.labels[0] && it->second != cfg.labels[1])
                throw DataError("unknown predicted label '" + it->second + "' for id " + rec.id);
            if (!rec.binary_label) throw DataError("gold record has no binary label: " + rec.id);
            pred.push_back(it->second == cfg.positive_label());
            truth.push_back(*rec.binary_label == BinaryLabel::positive);
        }
        report_json = to_json(f1_positive(pred, truth));
    } else {
        const std::vector<std::string>& categories = gold.category_list;
        std::vector<std::vector<bool>> pred, truth;
        for (const ParagraphRecord& rec : gold.records) {
            const auto it = pred_of.find(rec.id);
            if (it == pred_of.end()) throw DataError("no prediction for id: " + rec.id);
            std::vector<bool> p(categories.size(), false), g(categories.size(), false);
            std::istringstream ss(it->second);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (item.empty()) continue;
                const auto at = std::find(categories.begin(), categories.end(), item);
                if (at == categories.end())
                    throw DataError("unknown predicted category '" + item + "' for id " + rec.id);
                p[static_cast<std::size_t>(at - categories.begin())] = true;
            }
            for (const std::string& cat : rec.categories) {
                const auto at = std::find(categories.begin(), categories.end(), cat);
                g[static_cast<std::size_t>(at - categories.begin())] = true;
            }
            pred.push_back(std::move(p));
            truth.push_back(std::move(g));
        }
        report_json = to_json(macro_f1(pred, truth, categories));
    }

    std::ofstream os(fs::path(cfg.out_dir) / "eval_report.json");
    if (!os) throw DataError("cannot write eval report in " + cfg.out_dir);
    os << report_json << "\n";
    return report_json;
}

void cmd_augment(const RunConfig& cfg, const std::string& output_path) {
    echo_config(cfg, "augment");
    require_file("lexicon", cfg.lexicon_path);
    LoadResult loaded = load_dataset(cfg.dataset_path, cfg.schema);
    write_diagnostics(cfg, loaded.rejected);
    Dataset ds = std::move(loaded.dataset);
    if (ds.records.empty()) throw DataError("dataset has no usable records");

    const SynonymLexicon lexicon = SynonymLexicon::load(cfg.lexicon_path);
    std::vector<ParagraphRecord> extra = augment_records(ds.records, cfg.augment, lexicon);
    for (ParagraphRecord& rec : extra) ds.records.push_back(std::move(rec));
    write_dataset(output_path, ds);
}

}  // namespace promptcls
