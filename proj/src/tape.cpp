#include "promptcls/tape.hpp"

#include <cmath>
#include <memory>

#include "promptcls/errors.hpp"

namespace promptcls {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Tape::Ref Tape::push(Tensor val, std::function<void()> back) {
    Node node;
    node.val = std::move(val);
    node.grad = Tensor(node.val.rows, node.val.cols);
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return static_cast<Ref>(nodes_.size() - 1);
}

double Tape::scalar(Ref r) const {
    const Tensor& t = value(r);
    if (t.rows != 1 || t.cols != 1) throw DataError("scalar() on non-1x1 tensor");
    return t.v[0];
}

Tape::Ref Tape::constant(Tensor t) { return push(std::move(t)); }

Tape::Ref Tape::embed(Param& table, std::vector<int> ids) {
    const int d = table.value.cols;
    Tensor out(static_cast<int>(ids.size()), d);
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < d; ++j) out.at(static_cast<int>(i), j) = table.value.at(ids[i], j);
    Param* tp = &table;
    auto idv = std::move(ids);
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, tp, idv]() {
        const Tensor& g = grad_at(r);
        for (std::size_t i = 0; i < idv.size(); ++i)
            for (int j = 0; j < g.cols; ++j)
                tp->grad.at(idv[i], j) += g.at(static_cast<int>(i), j);
    };
    return r;
}

Tape::Ref Tape::linear(Ref x, Param& w, Param& b) {
    const Tensor& xv = value(x);
    if (xv.cols != w.value.rows || w.value.cols != b.value.cols || b.value.rows != 1)
        throw DataError("linear: shape mismatch");
    Tensor out(xv.rows, w.value.cols);
    for (int i = 0; i < xv.rows; ++i)
        for (int k = 0; k < xv.cols; ++k) {
            const double xik = xv.at(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < w.value.cols; ++j) out.at(i, j) += xik * w.value.at(k, j);
        }
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) += b.value.at(0, j);
    Param* wp = &w;
    Param* bp = &b;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, x, wp, bp]() {
        const Tensor& g = grad_at(r);
        const Tensor& xv2 = value(x);
        Tensor& xg = grad_at(x);
        for (int i = 0; i < xv2.rows; ++i)
            for (int j = 0; j < g.cols; ++j) {
                const double gij = g.at(i, j);
                if (gij == 0.0) continue;
                for (int k = 0; k < xv2.cols; ++k) {
                    xg.at(i, k) += gij * wp->value.at(k, j);
                    wp->grad.at(k, j) += xv2.at(i, k) * gij;
                }
                bp->grad.at(0, j) += gij;
            }
    };
    return r;
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols != bv.rows) throw DataError("matmul: shape mismatch");
    Tensor out(av.rows, bv.cols);
    for (int i = 0; i < av.rows; ++i)
        for (int k = 0; k < av.cols; ++k) {
            const double aik = av.at(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < bv.cols; ++j) out.at(i, j) += aik * bv.at(k, j);
        }
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, a, b]() {
        const Tensor& g = grad_at(r);
        const Tensor& av2 = value(a);
        const Tensor& bv2 = value(b);
        Tensor& ag = grad_at(a);
        Tensor& bg = grad_at(b);
        for (int i = 0; i < av2.rows; ++i)
            for (int j = 0; j < bv2.cols; ++j) {
                const double gij = g.at(i, j);
                if (gij == 0.0) continue;
                for (int k = 0; k < av2.cols; ++k) {
                    ag.at(i, k) += gij * bv2.at(k, j);
                    bg.at(k, j) += av2.at(i, k) * gij;
                }
            }
    };
    return r;
}

Tape::Ref Tape::matmul_nt(Ref a, Ref b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols != bv.cols) throw DataError("matmul_nt: shape mismatch");
    Tensor out(av.rows, bv.rows);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < bv.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < av.cols; ++k) s += av.at(i, k) * bv.at(j, k);
            out.at(i, j) = s;
        }
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, a, b]() {
        const Tensor& g = grad_at(r);
        const Tensor& av2 = value(a);
        const Tensor& bv2 = value(b);
        Tensor& ag = grad_at(a);
        Tensor& bg = grad_at(b);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) {
                const double gij = g.at(i, j);
                if (gij == 0.0) continue;
                for (int k = 0; k < av2.cols; ++k) {
                    ag.at(i, k) += gij * bv2.at(j, k);
                    bg.at(j, k) += gij * av2.at(i, k);
                }
            }
    };
    return r;
}

Tape::Ref Tape::add(Ref a, Ref b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows != bv.rows || av.cols != bv.cols) throw DataError("add: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += bv.v[i];
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, a, b]() {
        const Tensor& g = grad_at(r);
        Tensor& ag = grad_at(a);
        Tensor& bg = grad_at(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ag.v[i] += g.v[i];
            bg.v[i] += g.v[i];
        }
    };
    return r;
}

Tape::Ref Tape::scale(Ref a, double c) {
    Tensor out = value(a);
    for (double& x : out.v) x *= c;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, a, c]() {
        const Tensor& g = grad_at(r);
        Tensor& ag = grad_at(a);
        for (std::size_t i = 0; i < g.size(); ++i) ag.v[i] += c * g.v[i];
    };
    return r;
}

Tape::Ref Tape::slice_cols(Ref a, int c0, int c1) {
    const Tensor& av = value(a);
    if (c0 < 0 || c1 > av.cols || c0 >= c1) throw DataError("slice_cols: bad range");
    Tensor out(av.rows, c1 - c0);
    for (int i = 0; i < av.rows; ++i)
        for (int j = c0; j < c1; ++j) out.at(i, j - c0) = av.at(i, j);
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, a, c0]() {
        const Tensor& g = grad_at(r);
        Tensor& ag = grad_at(a);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) ag.at(i, c0 + j) += g.at(i, j);
    };
    return r;
}

Tape::Ref Tape::concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw DataError("concat_cols: no parts");
    const int rows = value(parts[0]).rows;
    int cols = 0;
    for (const Ref p : parts) {
        if (value(p).rows != rows) throw DataError("concat_cols: row mismatch");
        cols += value(p).cols;
    }
    Tensor out(rows, cols);
    int offset = 0;
    for (const Ref p : parts) {
        const Tensor& pv = value(p);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < pv.cols; ++j) out.at(i, offset + j) = pv.at(i, j);
        offset += pv.cols;
    }
    auto parts_copy = parts;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, parts_copy]() {
        const Tensor& g = grad_at(r);
        int off = 0;
        for (const Ref p : parts_copy) {
            Tensor& pg = grad_at(p);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < pg.cols; ++j) pg.at(i, j) += g.at(i, off + j);
            off += pg.cols;
        }
    };
    return r;
}

Tape::Ref Tape::row(Ref a, int rix) {
    const Tensor& av = value(a);
    if (rix < 0 || rix >= av.rows) throw DataError("row: index out of range");
    Tensor out(1, av.cols);
    for (int j = 0; j < av.cols; ++j) out.at(0, j) = av.at(rix, j);
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, a, rix]() {
        const Tensor& g = grad_at(r);
        Tensor& ag = grad_at(a);
        for (int j = 0; j < g.cols; ++j) ag.at(rix, j) += g.at(0, j);
    };
    return r;
}

Tape::Ref Tape::layer_norm(Ref x, Param& gain, Param& bias, double eps) {
    const Tensor& xv = value(x);
    const int n = xv.rows, d = xv.cols;
    if (gain.value.cols != d || bias.value.cols != d) throw DataError("layer_norm: shape mismatch");
    Tensor out(n, d);
    // Normalized values and inverse stddev per row, kept for backward.
    auto xhat = std::make_shared<Tensor>(n, d);
    auto inv_std = std::make_shared<std::vector<double>>(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += xv.at(i, j);
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xv.at(i, j) - mean;
            var += c * c;
        }
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (int j = 0; j < d; ++j) {
            const double h = (xv.at(i, j) - mean) * is;
            xhat->at(i, j) = h;
            out.at(i, j) = gain.value.at(0, j) * h + bias.value.at(0, j);
        }
    }
    Param* gp = &gain;
    Param* bp = &bias;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, x, gp, bp, xhat, inv_std]() {
        const Tensor& g = grad_at(r);
        Tensor& xg = grad_at(x);
        const int n2 = g.rows, d2 = g.cols;
        for (int i = 0; i < n2; ++i) {
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (int j = 0; j < d2; ++j) {
                const double dxh = g.at(i, j) * gp->value.at(0, j);
                sum_dxhat += dxh;
                sum_dxhat_xhat += dxh * xhat->at(i, j);
                gp->grad.at(0, j) += g.at(i, j) * xhat->at(i, j);
                bp->grad.at(0, j) += g.at(i, j);
            }
            const double m1 = sum_dxhat / d2;
            const double m2 = sum_dxhat_xhat / d2;
            for (int j = 0; j < d2; ++j) {
                const double dxh = g.at(i, j) * gp->value.at(0, j);
                xg.at(i, j) += (*inv_std)[i] * (dxh - m1 - xhat->at(i, j) * m2);
            }
        }
    };
    return r;
}

Tape::Ref Tape::gelu(Ref x) {
    const Tensor& xv = value(x);
    Tensor out(xv.rows, xv.cols);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double t = xv.v[i];
        out.v[i] = 0.5 * t * (1.0 + std::erf(t * kInvSqrt2));
    }
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, x]() {
        const Tensor& g = grad_at(r);
        const Tensor& xv2 = value(x);
        Tensor& xg = grad_at(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double t = xv2.v[i];
            const double cdf = 0.5 * (1.0 + std::erf(t * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * t * t);
            xg.v[i] += g.v[i] * (cdf + t * pdf);
        }
    };
    return r;
}

Tape::Ref Tape::dropout(Ref x, double rate, Rng& rng) {
    if (rate <= 0.0) return x;
    if (rate >= 1.0) throw UsageError("dropout rate must be < 1");
    const Tensor& xv = value(x);
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(xv.size(), 0.0);
    Tensor out(xv.rows, xv.cols);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double m = rng.uniform() < keep ? 1.0 / keep : 0.0;
        (*mask)[i] = m;
        out.v[i] = xv.v[i] * m;
    }
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, x, mask]() {
        const Tensor& g = grad_at(r);
        Tensor& xg = grad_at(x);
        for (std::size_t i = 0; i < g.size(); ++i) xg.v[i] += g.v[i] * (*mask)[i];
    };
    return r;
}

Tape::Ref Tape::softmax_rows(Ref x) {
    const Tensor& xv = value(x);
    Tensor out(xv.rows, xv.cols);
    for (int i = 0; i < xv.rows; ++i) {
        double mx = xv.at(i, 0);
        for (int j = 1; j < xv.cols; ++j) mx = std::max(mx, xv.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < xv.cols; ++j) {
            const double e = std::exp(xv.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < xv.cols; ++j) out.at(i, j) /= sum;
    }
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, x]() {
        const Tensor& g = grad_at(r);
        const Tensor& y = value(r);
        Tensor& xg = grad_at(x);
        for (int i = 0; i < y.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < y.cols; ++j) dot += g.at(i, j) * y.at(i, j);
            for (int j = 0; j < y.cols; ++j) xg.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
        }
    };
    return r;
}

Tape::Ref Tape::tied_vocab_logits(Ref h, Param& emb, Param& out_bias) {
    const Tensor& hv = value(h);
    const int vocab = emb.value.rows, d = emb.value.cols;
    if (hv.rows != 1 || hv.cols != d || out_bias.value.cols != vocab)
        throw DataError("tied_vocab_logits: shape mismatch");
    Tensor out(1, vocab);
    for (int vtok = 0; vtok < vocab; ++vtok) {
        double s = out_bias.value.at(0, vtok);
        for (int j = 0; j < d; ++j) s += hv.at(0, j) * emb.value.at(vtok, j);
        out.at(0, vtok) = s;
    }
    Param* ep = &emb;
    Param* bp = &out_bias;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, h, ep, bp]() {
        const Tensor& g = grad_at(r);
        const Tensor& hv2 = value(h);
        Tensor& hg = grad_at(h);
        const int vocab2 = g.cols, d2 = hv2.cols;
        for (int vtok = 0; vtok < vocab2; ++vtok) {
            const double gv = g.at(0, vtok);
            if (gv == 0.0) continue;
            bp->grad.at(0, vtok) += gv;
            for (int j = 0; j < d2; ++j) {
                hg.at(0, j) += gv * ep->value.at(vtok, j);
                ep->grad.at(vtok, j) += gv * hv2.at(0, j);
            }
        }
    };
    return r;
}

Tape::Ref Tape::group_mean(Ref p, const std::vector<std::vector<int>>* groups) {
    const Tensor& pv = value(p);
    if (pv.rows != 1) throw DataError("group_mean: expects a single row");
    Tensor out(1, static_cast<int>(groups->size()));
    for (std::size_t gix = 0; gix < groups->size(); ++gix) {
        const auto& ids = (*groups)[gix];
        if (ids.empty()) throw DataError("group_mean: empty group");
        double sum = 0.0;
        for (const int id : ids) sum += pv.at(0, id);
        out.at(0, static_cast<int>(gix)) = sum / static_cast<double>(ids.size());
    }
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, p, groups]() {
        const Tensor& g = grad_at(r);
        Tensor& pg = grad_at(p);
        for (std::size_t gix = 0; gix < groups->size(); ++gix) {
            const auto& ids = (*groups)[gix];
            const double share = g.at(0, static_cast<int>(gix)) / static_cast<double>(ids.size());
            for (const int id : ids) pg.at(0, id) += share;
        }
    };
    return r;
}

Tape::Ref Tape::normalize_row(Ref s) {
    const Tensor& sv = value(s);
    if (sv.rows != 1) throw DataError("normalize_row: expects a single row");
    double total = 0.0;
    for (int j = 0; j < sv.cols; ++j) total += sv.at(0, j);
    if (total <= 0.0) throw DataError("normalize_row: non-positive total");
    Tensor out(1, sv.cols);
    for (int j = 0; j < sv.cols; ++j) out.at(0, j) = sv.at(0, j) / total;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, s, total]() {
        const Tensor& g = grad_at(r);
        const Tensor& q = value(r);
        Tensor& sg = grad_at(s);
        double dot = 0.0;
        for (int j = 0; j < q.cols; ++j) dot += g.at(0, j) * q.at(0, j);
        for (int j = 0; j < q.cols; ++j) sg.at(0, j) += (g.at(0, j) - dot) / total;
    };
    return r;
}

Tape::Ref Tape::pick_neg_log(Ref q, int index, double eps) {
    const Tensor& qv = value(q);
    if (qv.rows != 1 || index < 0 || index >= qv.cols) throw DataError("pick_neg_log: bad index");
    const double qi = qv.at(0, index);
    Tensor out(1, 1);
    out.v[0] = -std::log(std::max(qi, eps));
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, q, index, eps]() {
        const double g = grad_at(r).v[0];
        const double qi2 = value(q).at(0, index);
        if (qi2 > eps) grad_at(q).at(0, index) += -g / qi2;
    };
    return r;
}

Tape::Ref Tape::bidirectional_kl(Ref p, Ref q, double eps) {
    const Tensor& pv = value(p);
    const Tensor& qv = value(q);
    if (pv.rows != 1 || qv.rows != 1 || pv.cols != qv.cols)
        throw DataError("bidirectional_kl: shape mismatch");
    // 0.5 * sum (p_i - q_i)(log p~_i - log q~_i); identical to the two-sided
    // KL sum with 0*log(0/x) = 0 and eps-clamped denominators.
    double loss = 0.0;
    for (int j = 0; j < pv.cols; ++j) {
        const double pi = pv.at(0, j), qi = qv.at(0, j);
        if (pi == qi) continue;
        loss += (pi - qi) * (std::log(std::max(pi, eps)) - std::log(std::max(qi, eps)));
    }
    Tensor out(1, 1);
    out.v[0] = 0.5 * loss;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, p, q, eps]() {
        const double g = grad_at(r).v[0];
        const Tensor& pv2 = value(p);
        const Tensor& qv2 = value(q);
        Tensor& pg = grad_at(p);
        Tensor& qg = grad_at(q);
        for (int j = 0; j < pv2.cols; ++j) {
            const double pi = pv2.at(0, j), qi = qv2.at(0, j);
            const double logdiff = std::log(std::max(pi, eps)) - std::log(std::max(qi, eps));
            const double dp = 0.5 * (logdiff + (pi > eps ? (pi - qi) / pi : 0.0));
            const double dq = 0.5 * (-logdiff - (qi > eps ? (pi - qi) / qi : 0.0));
            pg.at(0, j) += g * dp;
            qg.at(0, j) += g * dq;
        }
    };
    return r;
}

Tape::Ref Tape::add_scaled(const std::vector<Ref>& xs, double c) {
    if (xs.empty()) throw DataError("add_scaled: no inputs");
    const Tensor& first = value(xs[0]);
    Tensor out(first.rows, first.cols);
    for (const Ref x : xs) {
        const Tensor& xv = value(x);
        if (xv.rows != out.rows || xv.cols != out.cols) throw DataError("add_scaled: shape mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += xv.v[i];
    }
    for (double& x : out.v) x *= c;
    auto xs_copy = xs;
    const Ref r = push(std::move(out));
    nodes_.back().back = [this, r, xs_copy, c]() {
        const Tensor& g = grad_at(r);
        for (const Ref x : xs_copy) {
            Tensor& xg = grad_at(x);
            for (std::size_t i = 0; i < g.size(); ++i) xg.v[i] += c * g.v[i];
        }
    };
    return r;
}

void Tape::backward(Ref loss) {
    Tensor& lg = grad_at(loss);
    if (lg.rows != 1 || lg.cols != 1) throw DataError("backward: loss must be scalar");
    lg.v[0] = 1.0;
    for (std::size_t i = static_cast<std::size_t>(loss) + 1; i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back();
    }
}

}  // namespace promptcls
