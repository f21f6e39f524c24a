#include "promptcls/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "promptcls/errors.hpp"
#include "promptcls/metrics.hpp"

namespace promptcls {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw UsageError("train config: learning_rate must be > 0");
    if (max_epochs <= 0) throw UsageError("train config: max_epochs must be > 0");
    if (batch_size <= 0) throw UsageError("train config: batch_size must be > 0");
    if (max_seq_len <= 0) throw UsageError("train config: max_seq_len must be > 0");
    if (rdrop_alpha < 0.0) throw UsageError("train config: rdrop_alpha must be >= 0");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw UsageError("train config: dropout_rate must be in [0, 1)");
    if (early_stop_patience <= 0) throw UsageError("train config: early_stop_patience must be > 0");
    if (weight_decay < 0.0) throw UsageError("train config: weight_decay must be >= 0");
}

double label_ce_loss(const MaskDistribution& dist, const std::string& gold,
                     const Verbalizer& verbalizer, double eps) {
    const LabelScores scores = verbalizer.aggregate(dist);
    double total = 0.0;
    for (const double s : scores.scores) total += s;
    const double gold_score = scores.score_of(gold);
    const double ratio = total > 0.0 ? gold_score / total : 0.0;
    return -std::log(std::max(ratio, eps));
}

double bidirectional_kl(const std::vector<double>& p, const std::vector<double>& q, double eps) {
    if (p.size() != q.size()) throw UsageError("bidirectional_kl: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == q[i]) continue;
        const double lp = std::log(std::max(p[i], eps));
        const double lq = std::log(std::max(q[i], eps));
        acc += (p[i] - q[i]) * (lp - lq);
    }
    return 0.5 * acc;
}

std::vector<PromptExample> make_binary_examples(const DatasetView& view,
                                                const TaskPromptSet& prompts,
                                                const Verbalizer& verbalizer,
                                                const std::string& mask_token,
                                                const std::string& negative_label,
                                                const std::string& positive_label) {
    const std::size_t neg = verbalizer.label_index(negative_label);
    const std::size_t pos = verbalizer.label_index(positive_label);
    std::vector<PromptExample> out;
    out.reserve(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        const ParagraphRecord& rec = view[i];
        if (!rec.binary_label)
            throw DataError("record has no binary label: " + rec.id);
        PromptExample ex;
        ex.wrapped = wrap(rec.text, prompts.binary_template, mask_token, rec.id);
        ex.gold = *rec.binary_label == BinaryLabel::positive ? pos : neg;
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<PromptExample> make_multilabel_examples(const DatasetView& view,
                                                    const TaskPromptSet& prompts,
                                                    const Verbalizer& verbalizer,
                                                    const std::string& mask_token,
                                                    const std::string& no_label,
                                                    const std::string& yes_label) {
    const std::size_t no_idx = verbalizer.label_index(no_label);
    const std::size_t yes_idx = verbalizer.label_index(yes_label);
    std::vector<PromptExample> out;
    out.reserve(view.size() * prompts.per_category.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        const ParagraphRecord& rec = view[i];
        auto wrapped = wrap_multilabel(rec, prompts, mask_token);
        for (std::size_t c = 0; c < wrapped.size(); ++c) {
            PromptExample ex;
            ex.wrapped = std::move(wrapped[c].second);
            const bool member = std::find(rec.categories.begin(), rec.categories.end(),
                                          wrapped[c].first) != rec.categories.end();
            ex.gold = member ? yes_idx : no_idx;
            ex.category = static_cast<int>(c);
            out.push_back(std::move(ex));
        }
    }
    return out;
}

namespace {

// Verbalizer-normalized label distribution for one encoded example.
Tape::Ref label_dist(Tape& tape, TinyMlm& model, const EncodedInput& enc,
                     const Verbalizer& vb, bool train, Rng& rng) {
    Tape::Ref probs = tape.softmax_rows(model.mask_logits(tape, enc, train, rng));
    Tape::Ref s = tape.group_mean(probs, &vb.token_groups());
    return tape.normalize_row(s);
}

Tape::Ref example_loss(Tape& tape, TinyMlm& model, const PromptExample& ex,
                       const Verbalizer& vb, double alpha, bool two_pass,
                       const TrainConfig& cfg, Rng& rng) {
    const EncodedInput enc =
        encode_wrapped(model.vocab(), ex.wrapped, static_cast<std::size_t>(cfg.max_seq_len));
    const int gold = static_cast<int>(ex.gold);
    if (!two_pass) {
        Tape::Ref q = label_dist(tape, model, enc, vb, true, rng);
        return tape.pick_neg_log(q, gold);
    }
    Tape::Ref q1 = label_dist(tape, model, enc, vb, true, rng);
    Tape::Ref q2 = label_dist(tape, model, enc, vb, true, rng);
    Tape::Ref ce = tape.add_scaled({tape.pick_neg_log(q1, gold), tape.pick_neg_log(q2, gold)}, 0.5);
    if (alpha == 0.0) return ce;
    return tape.add(ce, tape.scale(tape.bidirectional_kl(q1, q2), alpha));
}

Tape::Ref batch_loss(Tape& tape, TinyMlm& model, const std::vector<PromptExample>& examples,
                     const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                     const Verbalizer& vb, double alpha, bool two_pass, const TrainConfig& cfg,
                     Rng& rng) {
    std::vector<Tape::Ref> losses;
    losses.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
        losses.push_back(example_loss(tape, model, examples[idx[i]], vb, alpha, two_pass, cfg, rng));
    return tape.add_scaled(losses, 1.0 / static_cast<double>(losses.size()));
}

}  // namespace

double rdrop_step_loss(TinyMlm& model, const std::vector<PromptExample>& batch,
                       const Verbalizer& verbalizer, double alpha, const TrainConfig& cfg,
                       Rng& rng) {
    if (alpha < 0.0) throw UsageError("rdrop_step_loss: alpha must be >= 0");
    if (batch.empty()) throw UsageError("rdrop_step_loss: empty batch");
    Tape tape;
    std::vector<Tape::Ref> losses;
    losses.reserve(batch.size());
    for (const PromptExample& ex : batch)
        losses.push_back(example_loss(tape, model, ex, verbalizer, alpha, true, cfg, rng));
    return tape.scalar(tape.add_scaled(losses, 1.0 / static_cast<double>(losses.size())));
}

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_(-std::numeric_limits<double>::infinity()) {
    if (patience <= 0) throw UsageError("early stop patience must be > 0");
}

bool EarlyStopper::observe(double value) {
    const int index = seen_++;
    if (value > best_) {
        best_ = value;
        best_index_ = index;
        bad_ = 0;
        return true;
    }
    ++bad_;
    return false;
}

AdamW::AdamW(std::vector<Param*> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      lr_(cfg.learning_rate),
      beta1_(cfg.adam_beta1),
      beta2_(cfg.adam_beta2),
      eps_(cfg.adam_eps),
      weight_decay_(cfg.weight_decay) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Param* p : params_) {
        m_.emplace_back(p->value.rows, p->value.cols);
        v_.emplace_back(p->value.rows, p->value.cols);
    }
}

void AdamW::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad.v[j];
            m.v[j] = beta1_ * m.v[j] + (1.0 - beta1_) * g;
            v.v[j] = beta2_ * v.v[j] + (1.0 - beta2_) * g * g;
            const double mhat = m.v[j] / bc1;
            const double vhat = v.v[j] / bc2;
            p.value.v[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * p.value.v[j]);
        }
    }
}

namespace {

// Positive iff the positive label's score strictly beats every other label.
bool strictly_positive(const LabelScores& scores, std::size_t positive_index) {
    const double sp = scores.scores[positive_index];
    for (std::size_t j = 0; j < scores.scores.size(); ++j) {
        if (j == positive_index) continue;
        if (!(sp > scores.scores[j])) return false;
    }
    return true;
}

}  // namespace

ValScore evaluate_examples(TinyMlm& model, const std::vector<PromptExample>& examples,
                           const Verbalizer& verbalizer, std::size_t positive_index,
                           int n_categories, int max_seq_len) {
    ValScore out;
    if (examples.empty()) return out;
    const ScorerMode saved = model.mode();
    model.set_mode(ScorerMode::eval);
    Rng unused(0);
    std::vector<bool> pred, gold;
    pred.reserve(examples.size());
    gold.reserve(examples.size());
    std::vector<int> category;
    category.reserve(examples.size());
    double loss = 0.0;
    for (const PromptExample& ex : examples) {
        const EncodedInput enc =
            encode_wrapped(model.vocab(), ex.wrapped, static_cast<std::size_t>(max_seq_len));
        const MaskDistribution dist = model.score_encoded(enc, false, unused);
        loss += label_ce_loss(dist, verbalizer.label_order()[ex.gold], verbalizer);
        const LabelScores scores = verbalizer.aggregate(dist);
        pred.push_back(strictly_positive(scores, positive_index));
        gold.push_back(ex.gold == positive_index);
        category.push_back(ex.category);
    }
    model.set_mode(saved);
    out.loss = loss / static_cast<double>(examples.size());
    out.metric_valid = std::find(gold.begin(), gold.end(), true) != gold.end();
    if (n_categories <= 0) {
        out.metric = f1_positive(pred, gold).scores.f1;
        return out;
    }
    double f1_sum = 0.0;
    for (int c = 0; c < n_categories; ++c) {
        std::vector<bool> pc, gc;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (category[i] != c) continue;
            pc.push_back(pred[i]);
            gc.push_back(gold[i]);
        }
        f1_sum += prf(confusion(pc, gc)).f1;
    }
    out.metric = f1_sum / static_cast<double>(n_categories);
    return out;
}

namespace {

std::vector<Tensor> snapshot_params(const std::vector<Param*>& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Param* p : params) out.push_back(p->value);
    return out;
}

void restore_params(const std::vector<Param*>& params, const std::vector<Tensor>& snap) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

FoldOutcome train_fold(const MlmFactory& factory, const std::vector<PromptExample>& train,
                       const std::vector<PromptExample>& val, const Verbalizer& verbalizer,
                       std::size_t positive_index, int n_categories, const TrainConfig& cfg,
                       const std::string& checkpoint_path) {
    cfg.validate();
    if (train.empty()) throw TrainError("train_fold: empty training view");
    FoldOutcome out;
    out.model = factory();
    TinyMlm& model = *out.model;
    out.report.metric_name = n_categories > 0 ? "macro_f1" : "f1";

    AdamW opt(model.params(), cfg);
    Rng shuffle_rng(cfg.seed);
    Rng dropout_rng(hash_mix(cfg.seed, "dropout"));
    EarlyStopper stopper(cfg.early_stop_patience);
    const bool two_pass = cfg.rdrop_alpha > 0.0;
    std::vector<Tensor> best = snapshot_params(model.params());

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        model.set_mode(ScorerMode::train);
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            Tape tape;
            Tape::Ref loss = batch_loss(tape, model, train, order, begin, end, verbalizer,
                                        cfg.rdrop_alpha, two_pass, cfg, dropout_rng);
            model.zero_grad();
            tape.backward(loss);
            opt.step();
            loss_sum += tape.scalar(loss) * static_cast<double>(end - begin);
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = train_loss;
        if (val.empty()) {
            stats.val_loss = 0.0;
            stats.metric_fallback = true;
            stats.val_metric = -train_loss;
        } else {
            const ValScore vs =
                evaluate_examples(model, val, verbalizer, positive_index, n_categories,
                                  cfg.max_seq_len);
            stats.val_loss = vs.loss;
            stats.metric_fallback = !vs.metric_valid;
            stats.val_metric = vs.metric_valid ? vs.metric : -vs.loss;
        }
        stats.improved = stopper.observe(stats.val_metric);
        if (stats.improved) best = snapshot_params(model.params());
        out.report.history.push_back(stats);
        if (stopper.should_stop()) break;
    }

    restore_params(model.params(), best);
    model.set_mode(ScorerMode::eval);
    out.report.best_epoch = stopper.best_index();
    out.report.best_metric = stopper.best();
    if (!checkpoint_path.empty()) {
        save_checkpoint(checkpoint_path, model);
        out.report.checkpoint = checkpoint_path;
    }
    return out;
}

ClsFoldOutcome train_cls_fold(const ClsFactory& factory, const std::vector<ClsExample>& train,
                              const std::vector<ClsExample>& val, std::size_t positive_index,
                              const TrainConfig& cfg, const std::string& checkpoint_path) {
    cfg.validate();
    if (train.empty()) throw TrainError("train_cls_fold: empty training view");
    ClsFoldOutcome out;
    out.model = factory();
    ClsHead& model = *out.model;
    out.report.metric_name = "f1";

    AdamW opt(model.params(), cfg);
    Rng shuffle_rng(cfg.seed);
    Rng dropout_rng(hash_mix(cfg.seed, "dropout"));
    EarlyStopper stopper(cfg.early_stop_patience);
    const bool two_pass = cfg.rdrop_alpha > 0.0;
    std::vector<Tensor> best = snapshot_params(model.params());

    auto probs_of = [&](Tape& tape, const ClsExample& ex, Rng& rng) {
        const EncodedInput enc =
            encode_cls(model.vocab(), ex.text, static_cast<std::size_t>(cfg.max_seq_len));
        return tape.softmax_rows(model.class_logits(tape, enc, true, rng));
    };

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        model.set_mode(ScorerMode::train);
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            Tape tape;
            std::vector<Tape::Ref> losses;
            losses.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                const ClsExample& ex = train[order[i]];
                const int gold = static_cast<int>(ex.gold);
                if (!two_pass) {
                    losses.push_back(tape.pick_neg_log(probs_of(tape, ex, dropout_rng), gold));
                    continue;
                }
                Tape::Ref q1 = probs_of(tape, ex, dropout_rng);
                Tape::Ref q2 = probs_of(tape, ex, dropout_rng);
                Tape::Ref ce = tape.add_scaled(
                    {tape.pick_neg_log(q1, gold), tape.pick_neg_log(q2, gold)}, 0.5);
                losses.push_back(
                    tape.add(ce, tape.scale(tape.bidirectional_kl(q1, q2), cfg.rdrop_alpha)));
            }
            Tape::Ref loss = tape.add_scaled(losses, 1.0 / static_cast<double>(losses.size()));
            model.zero_grad();
            tape.backward(loss);
            opt.step();
            loss_sum += tape.scalar(loss) * static_cast<double>(end - begin);
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = train_loss;
        if (val.empty()) {
            stats.metric_fallback = true;
            stats.val_metric = -train_loss;
        } else {
            model.set_mode(ScorerMode::eval);
            double loss = 0.0;
            std::vector<bool> pred, gold;
            for (const ClsExample& ex : val) {
                const std::vector<double> p = model.cls_forward(ex.text);
                loss += -std::log(std::max(p[ex.gold], 1e-12));
                const std::size_t arg = static_cast<std::size_t>(
                    std::max_element(p.begin(), p.end()) - p.begin());
                pred.push_back(arg == positive_index);
                gold.push_back(ex.gold == positive_index);
            }
            stats.val_loss = loss / static_cast<double>(val.size());
            const bool has_pos = std::find(gold.begin(), gold.end(), true) != gold.end();
            stats.metric_fallback = !has_pos;
            stats.val_metric =
                has_pos ? f1_positive(pred, gold).scores.f1 : -stats.val_loss;
        }
        stats.improved = stopper.observe(stats.val_metric);
        if (stats.improved) best = snapshot_params(model.params());
        out.report.history.push_back(stats);
        if (stopper.should_stop()) break;
    }

    restore_params(model.params(), best);
    model.set_mode(ScorerMode::eval);
    out.report.best_epoch = stopper.best_index();
    out.report.best_metric = stopper.best();
    if (!checkpoint_path.empty()) {
        save_checkpoint(checkpoint_path, model);
        out.report.checkpoint = checkpoint_path;
    }
    return out;
}

void TrainReport::write_jsonl(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write train report: " + path);
    for (const EpochStats& e : history) {
        nlohmann::ordered_json j;
        j["epoch"] = e.epoch;
        j["train_loss"] = e.train_loss;
        j["val_loss"] = e.val_loss;
        j["val_metric"] = e.val_metric;
        j["metric"] = metric_name;
        j["metric_fallback"] = e.metric_fallback;
        j["improved"] = e.improved;
        os << j.dump() << "\n";
    }
    nlohmann::ordered_json s;
    s["summary"] = true;
    s["epochs_run"] = history.size();
    s["best_epoch"] = best_epoch;
    s["best_metric"] = best_metric;
    s["metric"] = metric_name;
    if (!checkpoint.empty()) s["checkpoint"] = checkpoint;
    os << s.dump() << "\n";
    if (!os) throw DataError("write failed: " + path);
}

}  // namespace promptcls
