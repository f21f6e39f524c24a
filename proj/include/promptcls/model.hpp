#pragma once

#include <memory>
#include <string>
#include <vector>

#include "promptcls/tape.hpp"
#include "promptcls/vocab.hpp"

namespace promptcls {

enum class ScorerMode { train, eval };

// Anything that maps a wrapped prompt to a probability distribution over its
// vocabulary at the mask position. Eval mode must be deterministic.
class ScorerModel {
public:
    virtual ~ScorerModel() = default;
    virtual const Vocabulary& vocab() const = 0;
    virtual ScorerMode mode() const = 0;
    virtual void set_mode(ScorerMode m) = 0;
    virtual double dropout_rate() const = 0;
    virtual MaskDistribution score_mask(const WrappedText& input) = 0;
    std::string mask_token() const { return vocab().mask_token(); }
};

struct ModelConfig {
    int dim = 64;
    int layers = 2;
    int heads = 4;
    int ffn_mult = 4;
    int max_len = 256;
    double dropout = 0.1;

    void validate() const;
};

// Transformer encoder shared by the masked-LM scorer and the CLS baseline:
// learned token + position embeddings, pre-norm blocks of multi-head
// self-attention and a GELU feed-forward, dropout on both block outputs,
// final layer norm.
class Encoder {
public:
    Encoder(int vocab_size, const ModelConfig& cfg, Rng& init_rng);

    Tape::Ref encode(Tape& tape, const std::vector<int>& ids, bool train, Rng& rng);

    Param& token_embedding() { return tok_emb_; }
    std::vector<Param*> params();
    const ModelConfig& config() const { return cfg_; }

private:
    struct Block {
        Param ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
        Param ln2_g, ln2_b, w1, b1, w2, b2;
    };
    ModelConfig cfg_;
    Param tok_emb_, pos_emb_;
    std::vector<Block> blocks_;
    Param lnf_g_, lnf_b_;
};

// Reference masked-LM scorer: whitespace-lowercase tokenizer over a learned
// vocabulary, tied output projection to the token embedding, learned output
// bias. Small enough to train on a CPU.
class TinyMlm : public ScorerModel {
public:
    TinyMlm(Vocabulary vocab, ModelConfig cfg, std::uint64_t seed);

    const Vocabulary& vocab() const override { return vocab_; }
    ScorerMode mode() const override { return mode_; }
    void set_mode(ScorerMode m) override { mode_ = m; }
    double dropout_rate() const override { return cfg_.dropout; }

    MaskDistribution score_mask(const WrappedText& input) override;
    MaskDistribution score_encoded(const EncodedInput& enc, bool train, Rng& rng);

    // Vocabulary logits at the mask position, on the caller's tape.
    Tape::Ref mask_logits(Tape& tape, const EncodedInput& enc, bool train, Rng& rng);

    const ModelConfig& config() const { return cfg_; }
    std::vector<Param*> params();
    void zero_grad();
    std::size_t scalar_param_count();

private:
    Vocabulary vocab_;
    ModelConfig cfg_;
    Rng init_rng_;  // consumed during construction
    Encoder encoder_;
    Param out_bias_;
    ScorerMode mode_ = ScorerMode::eval;
    Rng score_rng_;  // dropout stream for train-mode score_mask calls
};

// Baseline classifier: same encoder, linear + softmax over the labels applied
// to the first-position ([CLS]) encoding.
class ClsHead {
public:
    ClsHead(Vocabulary vocab, ModelConfig cfg, std::vector<std::string> labels,
            std::uint64_t seed);

    const Vocabulary& vocab() const { return vocab_; }
    const std::vector<std::string>& labels() const { return labels_; }
    ScorerMode mode() const { return mode_; }
    void set_mode(ScorerMode m) { mode_ = m; }
    const ModelConfig& config() const { return cfg_; }

    // Probability vector over the labels; eval mode is deterministic.
    std::vector<double> cls_forward(const std::string& text);

    Tape::Ref class_logits(Tape& tape, const EncodedInput& enc, bool train, Rng& rng);

    std::vector<Param*> params();
    void zero_grad();

private:
    Vocabulary vocab_;
    ModelConfig cfg_;
    std::vector<std::string> labels_;
    Rng init_rng_;
    Encoder encoder_;
    Param head_w_, head_b_;
    ScorerMode mode_ = ScorerMode::eval;
    Rng score_rng_;
};

// Versioned binary checkpoint container. Round-trips exactly: a reloaded
// model produces bitwise-identical eval outputs.
void save_checkpoint(const std::string& path, TinyMlm& model);
void save_checkpoint(const std::string& path, ClsHead& model);
std::unique_ptr<TinyMlm> load_mlm_checkpoint(const std::string& path);
std::unique_ptr<ClsHead> load_cls_checkpoint(const std::string& path);

// Which kind of model a checkpoint holds.
enum class CheckpointKind { mlm, cls };
CheckpointKind peek_checkpoint_kind(const std::string& path);

}  // namespace promptcls
