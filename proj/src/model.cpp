#include "promptcls/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "promptcls/errors.hpp"

namespace promptcls {

void ModelConfig::validate() const {
    if (dim <= 0 || layers <= 0 || heads <= 0 || ffn_mult <= 0 || max_len <= 0)
        throw UsageError("model config: dim, layers, heads, ffn_mult, max_len must be positive");
    if (dim % heads != 0)
        throw UsageError("model config: dim must be divisible by heads");
    if (dropout < 0.0 || dropout >= 1.0)
        throw UsageError("model config: dropout must be in [0, 1)");
}

namespace {

Tensor normal_init(Rng& rng, int rows, int cols, double std_dev) {
    Tensor t(rows, cols);
    for (double& x : t.v) x = rng.normal() * std_dev;
    return t;
}

Param make_param(const std::string& name, Rng& rng, int rows, int cols, double std_dev) {
    Param p(name, rows, cols);
    if (std_dev > 0.0) p.value = normal_init(rng, rows, cols, std_dev);
    return p;
}

Param ones_param(const std::string& name, int cols) {
    Param p(name, 1, cols);
    p.value.fill(1.0);
    return p;
}

constexpr double kInitStd = 0.02;

}  // namespace

Encoder::Encoder(int vocab_size, const ModelConfig& cfg, Rng& init_rng) : cfg_(cfg) {
    cfg_.validate();
    tok_emb_ = make_param("tok_emb", init_rng, vocab_size, cfg_.dim, kInitStd);
    pos_emb_ = make_param("pos_emb", init_rng, cfg_.max_len, cfg_.dim, kInitStd);
    const int d = cfg_.dim;
    const int f = cfg_.ffn_mult * d;
    blocks_.reserve(static_cast<std::size_t>(cfg_.layers));
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string pre = "blk" + std::to_string(l) + ".";
        Block b{
            ones_param(pre + "ln1.g", d),
            Param(pre + "ln1.b", 1, d),
            make_param(pre + "attn.wq", init_rng, d, d, kInitStd),
            Param(pre + "attn.bq", 1, d),
            make_param(pre + "attn.wk", init_rng, d, d, kInitStd),
            Param(pre + "attn.bk", 1, d),
            make_param(pre + "attn.wv", init_rng, d, d, kInitStd),
            Param(pre + "attn.bv", 1, d),
            make_param(pre + "attn.wo", init_rng, d, d, kInitStd),
            Param(pre + "attn.bo", 1, d),
            ones_param(pre + "ln2.g", d),
            Param(pre + "ln2.b", 1, d),
            make_param(pre + "ffn.w1", init_rng, d, f, kInitStd),
            Param(pre + "ffn.b1", 1, f),
            make_param(pre + "ffn.w2", init_rng, f, d, kInitStd),
            Param(pre + "ffn.b2", 1, d),
        };
        blocks_.push_back(std::move(b));
    }
    lnf_g_ = ones_param("lnf.g", d);
    lnf_b_ = Param("lnf.b", 1, d);
}

Tape::Ref Encoder::encode(Tape& tape, const std::vector<int>& ids, bool train, Rng& rng) {
    if (ids.empty()) throw DataError("encoder: empty input");
    if (static_cast<int>(ids.size()) > cfg_.max_len)
        throw DataError("encoder: input longer than max_len");
    const double rate = train ? cfg_.dropout : 0.0;

    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
    Tape::Ref x = tape.add(tape.embed(tok_emb_, ids), tape.embed(pos_emb_, positions));

    const int d = cfg_.dim;
    const int dh = d / cfg_.heads;
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    for (Block& b : blocks_) {
        Tape::Ref h = tape.layer_norm(x, b.ln1_g, b.ln1_b);
        Tape::Ref q = tape.linear(h, b.wq, b.bq);
        Tape::Ref k = tape.linear(h, b.wk, b.bk);
        Tape::Ref v = tape.linear(h, b.wv, b.bv);
        std::vector<Tape::Ref> ctx;
        ctx.reserve(static_cast<std::size_t>(cfg_.heads));
        for (int hd = 0; hd < cfg_.heads; ++hd) {
            const int c0 = hd * dh, c1 = (hd + 1) * dh;
            Tape::Ref qh = tape.slice_cols(q, c0, c1);
            Tape::Ref kh = tape.slice_cols(k, c0, c1);
            Tape::Ref vh = tape.slice_cols(v, c0, c1);
            Tape::Ref scores = tape.scale(tape.matmul_nt(qh, kh), att_scale);
            Tape::Ref attn = tape.softmax_rows(scores);
            ctx.push_back(tape.matmul(attn, vh));
        }
        Tape::Ref merged = tape.concat_cols(ctx);
        Tape::Ref attn_out = tape.dropout(tape.linear(merged, b.wo, b.bo), rate, rng);
        x = tape.add(x, attn_out);

        Tape::Ref h2 = tape.layer_norm(x, b.ln2_g, b.ln2_b);
        Tape::Ref f = tape.linear(tape.gelu(tape.linear(h2, b.w1, b.b1)), b.w2, b.b2);
        x = tape.add(x, tape.dropout(f, rate, rng));
    }
    return tape.layer_norm(x, lnf_g_, lnf_b_);
}

std::vector<Param*> Encoder::params() {
    std::vector<Param*> out{&tok_emb_, &pos_emb_};
    for (Block& b : blocks_) {
        out.insert(out.end(), {&b.ln1_g, &b.ln1_b, &b.wq, &b.bq, &b.wk, &b.bk, &b.wv, &b.bv,
                               &b.wo, &b.bo, &b.ln2_g, &b.ln2_b, &b.w1, &b.b1, &b.w2, &b.b2});
    }
    out.push_back(&lnf_g_);
    out.push_back(&lnf_b_);
    return out;
}

TinyMlm::TinyMlm(Vocabulary vocab, ModelConfig cfg, std::uint64_t seed)
    : vocab_(std::move(vocab)),
      cfg_(cfg),
      init_rng_(seed),
      encoder_(static_cast<int>(vocab_.size()), cfg_, init_rng_),
      out_bias_("out_bias", 1, static_cast<int>(vocab_.size())),
      score_rng_(seed + 0x9e3779b97f4a7c15ull) {
    if (vocab_.size() == 0) throw DataError("scorer: empty vocabulary");
}

Tape::Ref TinyMlm::mask_logits(Tape& tape, const EncodedInput& enc, bool train, Rng& rng) {
    if (enc.mask_pos < 0) throw DataError("scorer: encoded input has no mask position");
    Tape::Ref seq = encoder_.encode(tape, enc.ids, train, rng);
    Tape::Ref h = tape.row(seq, enc.mask_pos);
    return tape.tied_vocab_logits(h, encoder_.token_embedding(), out_bias_);
}

MaskDistribution TinyMlm::score_encoded(const EncodedInput& enc, bool train, Rng& rng) {
    Tape tape;
    Tape::Ref probs = tape.softmax_rows(mask_logits(tape, enc, train, rng));
    return tape.value(probs).v;
}

MaskDistribution TinyMlm::score_mask(const WrappedText& input) {
    const EncodedInput enc = encode_wrapped(vocab_, input, static_cast<std::size_t>(cfg_.max_len));
    return score_encoded(enc, mode_ == ScorerMode::train, score_rng_);
}

std::vector<Param*> TinyMlm::params() {
    std::vector<Param*> out = encoder_.params();
    out.push_back(&out_bias_);
    return out;
}

void TinyMlm::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

std::size_t TinyMlm::scalar_param_count() {
    std::size_t n = 0;
    for (Param* p : params()) n += p->value.size();
    return n;
}

ClsHead::ClsHead(Vocabulary vocab, ModelConfig cfg, std::vector<std::string> labels,
                 std::uint64_t seed)
    : vocab_(std::move(vocab)),
      cfg_(cfg),
      labels_(std::move(labels)),
      init_rng_(seed),
      encoder_(static_cast<int>(vocab_.size()), cfg_, init_rng_),
      head_w_(make_param("head.w", init_rng_, cfg_.dim, static_cast<int>(labels_.size()), kInitStd)),
      head_b_("head.b", 1, static_cast<int>(labels_.size())),
      score_rng_(seed + 0x9e3779b97f4a7c15ull) {
    if (labels_.size() < 2) throw UsageError("classifier head needs at least two labels");
}

Tape::Ref ClsHead::class_logits(Tape& tape, const EncodedInput& enc, bool train, Rng& rng) {
    Tape::Ref seq = encoder_.encode(tape, enc.ids, train, rng);
    return tape.linear(tape.row(seq, 0), head_w_, head_b_);
}

std::vector<double> ClsHead::cls_forward(const std::string& text) {
    const EncodedInput enc = encode_cls(vocab_, text, static_cast<std::size_t>(cfg_.max_len));
    Tape tape;
    Tape::Ref probs =
        tape.softmax_rows(class_logits(tape, enc, mode_ == ScorerMode::train, score_rng_));
    return tape.value(probs).v;
}

std::vector<Param*> ClsHead::params() {
    std::vector<Param*> out = encoder_.params();
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
}

void ClsHead::zero_grad() {
    for (Param* p : params()) p->zero_grad();
}

namespace {

constexpr char kMagic[8] = {'P', 'C', 'L', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((x >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    put_u64(os, bits);
}

void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("checkpoint: truncated file");
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw DataError("checkpoint: truncated file");
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return x;
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

std::string get_str(std::istream& is) {
    const std::uint32_t n = get_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw DataError("checkpoint: truncated file");
    return s;
}

void put_config(std::ostream& os, const ModelConfig& cfg) {
    put_u32(os, static_cast<std::uint32_t>(cfg.dim));
    put_u32(os, static_cast<std::uint32_t>(cfg.layers));
    put_u32(os, static_cast<std::uint32_t>(cfg.heads));
    put_u32(os, static_cast<std::uint32_t>(cfg.ffn_mult));
    put_u32(os, static_cast<std::uint32_t>(cfg.max_len));
    put_f64(os, cfg.dropout);
}

ModelConfig get_config(std::istream& is) {
    ModelConfig cfg;
    cfg.dim = static_cast<int>(get_u32(is));
    cfg.layers = static_cast<int>(get_u32(is));
    cfg.heads = static_cast<int>(get_u32(is));
    cfg.ffn_mult = static_cast<int>(get_u32(is));
    cfg.max_len = static_cast<int>(get_u32(is));
    cfg.dropout = get_f64(is);
    return cfg;
}

void put_params(std::ostream& os, const std::vector<Param*>& params) {
    put_u64(os, params.size());
    for (const Param* p : params) {
        put_str(os, p->name);
        put_u32(os, static_cast<std::uint32_t>(p->value.rows));
        put_u32(os, static_cast<std::uint32_t>(p->value.cols));
        for (const double x : p->value.v) put_f64(os, x);
    }
}

void get_params(std::istream& is, const std::vector<Param*>& params) {
    const std::uint64_t n = get_u64(is);
    if (n != params.size()) throw DataError("checkpoint: parameter count mismatch");
    for (Param* p : params) {
        const std::string name = get_str(is);
        if (name != p->name) throw DataError("checkpoint: unexpected parameter " + name);
        const int rows = static_cast<int>(get_u32(is));
        const int cols = static_cast<int>(get_u32(is));
        if (rows != p->value.rows || cols != p->value.cols)
            throw DataError("checkpoint: shape mismatch for " + name);
        for (double& x : p->value.v) x = get_f64(is);
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("checkpoint: cannot write " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot read " + path);
    return is;
}

void put_header(std::ostream& os, CheckpointKind kind) {
    os.write(kMagic, 8);
    put_u32(os, kVersion);
    put_u32(os, kind == CheckpointKind::mlm ? 0u : 1u);
}

CheckpointKind get_header(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("checkpoint: bad magic");
    const std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t kind = get_u32(is);
    if (kind > 1) throw DataError("checkpoint: unknown model kind");
    return kind == 0 ? CheckpointKind::mlm : CheckpointKind::cls;
}

void put_strings(std::ostream& os, const std::vector<std::string>& v) {
    put_u64(os, v.size());
    for (const std::string& s : v) put_str(os, s);
}

std::vector<std::string> get_strings(std::istream& is) {
    const std::uint64_t n = get_u64(is);
    std::vector<std::string> v;
    v.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) v.push_back(get_str(is));
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, TinyMlm& model) {
    std::ofstream os = open_out(path);
    put_header(os, CheckpointKind::mlm);
    put_config(os, model.config());
    put_strings(os, model.vocab().tokens());
    put_strings(os, {});
    put_params(os, model.params());
    if (!os) throw DataError("checkpoint: write failed for " + path);
}

void save_checkpoint(const std::string& path, ClsHead& model) {
    std::ofstream os = open_out(path);
    put_header(os, CheckpointKind::cls);
    put_config(os, model.config());
    put_strings(os, model.vocab().tokens());
    put_strings(os, model.labels());
    put_params(os, model.params());
    if (!os) throw DataError("checkpoint: write failed for " + path);
}

std::unique_ptr<TinyMlm> load_mlm_checkpoint(const std::string& path) {
    std::ifstream is = open_in(path);
    if (get_header(is) != CheckpointKind::mlm)
        throw DataError("checkpoint: not a mask scorer: " + path);
    const ModelConfig cfg = get_config(is);
    Vocabulary vocab = Vocabulary::from_tokens(get_strings(is));
    get_strings(is);  // label list, empty for this kind
    auto model = std::make_unique<TinyMlm>(std::move(vocab), cfg, 0);
    get_params(is, model->params());
    return model;
}

std::unique_ptr<ClsHead> load_cls_checkpoint(const std::string& path) {
    std::ifstream is = open_in(path);
    if (get_header(is) != CheckpointKind::cls)
        throw DataError("checkpoint: not a classifier: " + path);
    const ModelConfig cfg = get_config(is);
    Vocabulary vocab = Vocabulary::from_tokens(get_strings(is));
    std::vector<std::string> labels = get_strings(is);
    auto model = std::make_unique<ClsHead>(std::move(vocab), cfg, std::move(labels), 0);
    get_params(is, model->params());
    return model;
}

CheckpointKind peek_checkpoint_kind(const std::string& path) {
    std::ifstream is = open_in(path);
    return get_header(is);
}

}  // namespace promptcls
