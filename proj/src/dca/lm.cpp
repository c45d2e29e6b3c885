// SPDX-License-Identifier: Apache-2.0
#include "grnlab/dca/lm.hpp"

#include <cmath>
#include <stdexcept>

#include "grnlab/autodiff/ops.hpp"
#include "grnlab/dca/attention.hpp"
#include "grnlab/grn/combine.hpp"

namespace grnlab::dca {
namespace {

constexpr const char* kRoles[3] = {"q", "k", "v"};

}  // namespace

std::string to_string(LmArch a) { return a == LmArch::Dca ? "dca" : "transformer"; }

LmArch parse_lm_arch(const std::string& s) {
    if (s == "dca") return LmArch::Dca;
    if (s == "transformer" || s == "baseline") return LmArch::Transformer;
    throw std::invalid_argument("unknown language-model architecture '" + s + "'");
}

void LmConfig::validate() const {
    if (vocab == 0 || d == 0 || seq == 0 || ffn_mult == 0) throw std::invalid_argument("lm config: zero dimension");
    if (heads == 0 || d % heads != 0) {
        throw std::invalid_argument("lm config: d = " + std::to_string(d) + " not divisible by heads = " +
                                    std::to_string(heads));
    }
}

ad::Parameter* LmModel::add(std::string name, Tensor value, bool decay) {
    params_.emplace_back(std::move(name), std::move(value), decay);
    return &params_.back();
}

LmModel::LmModel(LmConfig cfg, Rng& init) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg_.d, hidden = cfg_.ffn_mult * cfg_.d;
    const bool dca = cfg_.arch == LmArch::Dca;
    const double in_std = 1.0 / std::sqrt(double(d));
    const double out_scale = 1.0 / std::sqrt(2.0 * double(std::max<std::size_t>(cfg_.blocks, 1)));

    tok_emb_ = add("tok_emb", init.normal_tensor({cfg_.vocab, d}, 0.1), true);
    pos_emb_ = add("pos_emb", init.normal_tensor({cfg_.seq, d}, 0.1), true);
    blocks_.resize(cfg_.blocks);
    for (std::size_t i = 0; i < cfg_.blocks; ++i) {
        Block& b = blocks_[i];
        const std::string p = "block" + std::to_string(i) + ".";
        const std::size_t norms = dca && cfg_.separate_qkv_norms ? 3 : 1;
        for (std::size_t r = 0; r < norms; ++r) {
            const std::string ln = norms == 1 ? p + "ln1" : p + "ln1_" + kRoles[r];
            b.ln1_gain[r] = add(ln + ".gain", Tensor::ones({d}), false);
            b.ln1_bias[r] = add(ln + ".bias", Tensor::zeros({d}), false);
        }
        for (std::size_t r = norms; r < 3; ++r) {
            b.ln1_gain[r] = b.ln1_gain[0];
            b.ln1_bias[r] = b.ln1_bias[0];
        }
        b.wq = add(p + "attn.wq", init.normal_tensor({d, d}, in_std), true);
        b.wk = add(p + "attn.wk", init.normal_tensor({d, d}, in_std), true);
        b.wv = add(p + "attn.wv", init.normal_tensor({d, d}, in_std), true);
        b.wo = add(p + "attn.wo", init.normal_tensor({d, d}, in_std * out_scale), true);
        b.ln2_gain = add(p + "ln2.gain", Tensor::ones({d}), false);
        b.ln2_bias = add(p + "ln2.bias", Tensor::zeros({d}), false);
        b.w1 = add(p + "ffn.w1", init.normal_tensor({d, hidden}, in_std), true);
        b.b1 = add(p + "ffn.b1", Tensor::zeros({hidden}), false);
        b.w2 = add(p + "ffn.w2", init.normal_tensor({hidden, d}, out_scale / std::sqrt(double(hidden))), true);
        b.b2 = add(p + "ffn.b2", Tensor::zeros({d}), false);
        if (dca) {
            const std::size_t width = cfg_.stack.width_after(i + 1);
            for (std::size_t r = 0; r < 3; ++r) {
                const grn::GrnParams g = grn::GrnParams::init(grn::Variant::V3, d, width);
                b.grn_b[r] = add(p + "grn_" + kRoles[r] + ".b", g.b, false);
                b.grn_w[r] = add(p + "grn_" + kRoles[r] + ".w", g.w, false);
            }
        }
    }
    if (dca) {
        const grn::GrnParams g = grn::GrnParams::init(grn::Variant::V3, d, cfg_.stack.width_after(cfg_.blocks + 1));
        final_b_ = add("final_grn.b", g.b, false);
        final_w_ = add("final_grn.w", g.w, false);
    }
    lnf_gain_ = add("ln_f.gain", Tensor::ones({d}), false);
    lnf_bias_ = add("ln_f.bias", Tensor::zeros({d}), false);
    head_ = add("head.w", cfg_.zero_head ? Tensor::zeros({d, cfg_.vocab}) : init.normal_tensor({d, cfg_.vocab}, in_std),
                true);
}

ad::Var LmModel::norm(ad::Tape& tape, ad::Var x, const ad::Parameter* gain, const ad::Parameter* bias) const {
    return ad::add_row(ad::mul_row(ad::layernorm(x, 1), tape.param(*gain)), tape.param(*bias));
}

ad::Var LmModel::attend(ad::Tape& tape, const Block& b, ad::Var q, ad::Var k, ad::Var v) const {
    ad::Var a = causal_attention(ad::matmul(q, tape.param(*b.wq)), ad::matmul(k, tape.param(*b.wk)),
                                 ad::matmul(v, tape.param(*b.wv)), cfg_.heads);
    return ad::matmul(a, tape.param(*b.wo));
}

ad::Var LmModel::ffn(ad::Tape& tape, const Block& b, ad::Var x) const {
    ad::Var h = ad::relu(ad::add_row(ad::matmul(x, tape.param(*b.w1)), tape.param(*b.b1)));
    return ad::add_row(ad::matmul(h, tape.param(*b.w2)), tape.param(*b.b2));
}

ad::Var LmModel::embed(ad::Tape& tape, std::span<const std::size_t> tokens) const {
    if (tokens.empty()) throw std::invalid_argument("lm: empty token sequence");
    if (tokens.size() > cfg_.seq) {
        throw std::invalid_argument("lm: sequence of " + std::to_string(tokens.size()) + " exceeds context " +
                                    std::to_string(cfg_.seq));
    }
    for (std::size_t t : tokens) {
        if (t >= cfg_.vocab) {
            throw std::out_of_range("lm: token " + std::to_string(t) + " outside vocabulary of " +
                                    std::to_string(cfg_.vocab));
        }
    }
    ad::Var tok = ad::gather(tape.param(*tok_emb_), tokens);
    ad::Var pos = ad::slice_rows(tape.param(*pos_emb_), 0, tokens.size());
    return ad::add(tok, pos);
}

ad::Var LmModel::logits(ad::Tape& tape, std::span<const std::size_t> tokens) const {
    ad::Var x = embed(tape, tokens);
    ad::Var top;
    if (cfg_.arch == LmArch::Transformer) {
        ad::Var h = x;
        for (const Block& b : blocks_) {
            ad::Var n = norm(tape, h, b.ln1_gain[0], b.ln1_bias[0]);
            h = ad::add(h, attend(tape, b, n, n, n));
            h = ad::add(h, ffn(tape, b, norm(tape, h, b.ln2_gain, b.ln2_bias)));
        }
        top = h;
    } else {
        grn::LayerStack<ad::Var> stack(cfg_.stack);
        stack.push(x);
        for (const Block& b : blocks_) {
            ad::Var s[3];
            for (std::size_t r = 0; r < 3; ++r) {
                s[r] = grn::combine(stack.columns(), grn::Variant::V3, tape.param(*b.grn_b[r]), tape.param(*b.grn_w[r]));
            }
            ad::Var a = attend(tape, b, norm(tape, s[0], b.ln1_gain[0], b.ln1_bias[0]),
                               norm(tape, s[1], b.ln1_gain[1], b.ln1_bias[1]),
                               norm(tape, s[2], b.ln1_gain[2], b.ln1_bias[2]));
            ad::Var f = ffn(tape, b, norm(tape, ad::add(s[2], a), b.ln2_gain, b.ln2_bias));
            stack.push(ad::add(a, f));
        }
        top = grn::combine(stack.columns(), grn::Variant::V3, tape.param(*final_b_), tape.param(*final_w_));
    }
    return ad::matmul(norm(tape, top, lnf_gain_, lnf_bias_), tape.param(*head_));
}

ad::Var LmModel::loss(ad::Tape& tape, std::span<const std::size_t> window) const {
    if (window.size() < 2) throw std::invalid_argument("lm: a training window needs at least two tokens");
    const std::size_t n = window.size() - 1;
    return ad::cross_entropy(logits(tape, window.first(n)), window.subspan(1));
}

double LmModel::loss_value(std::span<const std::size_t> window) const {
    ad::Tape tape;
    return loss(tape, window).value().item();
}

std::vector<ad::Parameter*> LmModel::parameters() {
    std::vector<ad::Parameter*> out;
    for (ad::Parameter& p : params_) out.push_back(&p);
    return out;
}

std::vector<const ad::Parameter*> LmModel::parameters() const {
    std::vector<const ad::Parameter*> out;
    for (const ad::Parameter& p : params_) out.push_back(&p);
    return out;
}

const ad::Parameter* LmModel::find(const std::string& name) const {
    for (const ad::Parameter& p : params_)
        if (p.name() == name) return &p;
    return nullptr;
}

ad::Parameter* LmModel::find(const std::string& name) {
    for (ad::Parameter& p : params_)
        if (p.name() == name) return &p;
    return nullptr;
}

const ad::Parameter& LmModel::parameter(const std::string& name) const {
    if (const ad::Parameter* p = find(name)) return *p;
    throw std::out_of_range("lm: no parameter named '" + name + "'");
}

std::size_t LmModel::parameter_count() const {
    std::size_t n = 0;
    for (const ad::Parameter& p : params_) n += p.value().size();
    return n;
}

void retrofit_into(const LmModel& transformer, LmModel& dca) {
    const LmConfig& a = transformer.config();
    const LmConfig& b = dca.config();
    if (a.arch != LmArch::Transformer) throw std::invalid_argument("retrofit: source model is not a transformer");
    if (b.arch != LmArch::Dca) throw std::invalid_argument("retrofit: target model is not DCA");
    if (a.vocab != b.vocab || a.d != b.d || a.heads != b.heads || a.blocks != b.blocks || a.seq != b.seq ||
        a.ffn_mult != b.ffn_mult) {
        throw std::invalid_argument("retrofit: source and target dimensions differ");
    }
    for (ad::Parameter* p : dca.parameters()) {
        const std::string& name = p->name();
        if (name.find(".grn_") != std::string::npos || name.rfind("final_grn.", 0) == 0) {
            const bool is_b = name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0;
            p->value().fill(is_b ? 1.0 : 0.0);
            continue;
        }
        std::string src = name;
        if (const auto pos = src.find(".ln1_"); pos != std::string::npos) src.replace(pos, 6, ".ln1");
        const ad::Parameter* from = transformer.find(src);
        if (!from) throw std::invalid_argument("retrofit: transformer has no parameter '" + src + "'");
        require_same_shape(from->value(), p->value(), "retrofit");
        p->value() = from->value();
    }
}

std::unique_ptr<LmModel> retrofit(const LmModel& transformer, grn::StackPolicy stack, bool separate_qkv_norms) {
    LmConfig cfg = transformer.config();
    cfg.arch = LmArch::Dca;
    cfg.stack = stack;
    cfg.separate_qkv_norms = separate_qkv_norms;
    Rng scratch(0);
    auto out = std::make_unique<LmModel>(cfg, scratch);
    retrofit_into(transformer, *out);
    return out;
}

}  // namespace grnlab::dca
