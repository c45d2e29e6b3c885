// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "grnlab/autodiff/tape.hpp"
#include "grnlab/grn/stack.hpp"
#include "grnlab/numerics/rng.hpp"

namespace grnlab::dca {

enum class LmArch { Transformer, Dca };

std::string to_string(LmArch a);
LmArch parse_lm_arch(const std::string& s);

struct LmConfig {
    LmArch arch = LmArch::Dca;
    std::size_t vocab = 256;
    std::size_t d = 64;
    std::size_t heads = 4;
    std::size_t blocks = 4;
    /// Longest sequence the positional table covers.
    std::size_t seq = 64;
    std::size_t ffn_mult = 4;
    /// k-DCA when mode is FirstLastK; ignored by the transformer.
    grn::StackPolicy stack = grn::StackPolicy::full();
    /// One layernorm per q/k/v input instead of a shared one (DCA only).
    bool separate_qkv_norms = false;
    /// Start the output projection at zero (uniform predictions).
    bool zero_head = false;

    void validate() const;
};

/// Decoder-only language model over token ids.
///
/// Transformer block (pre-norm):
///   h <- h + attn(LN1(h));  h <- h + FFN(LN2(h))
/// DCA block over the stack G of the input and earlier block outputs:
///   s_q, s_k, s_v = three GRN-v3 combines of G
///   a = attn(LN1(s_q), LN1(s_k), LN1(s_v))
///   push a + FFN(LN2(s_v + a))
/// DCA ends with a GRN-v3 combine of the stack. Both end with LN_f and an
/// untied projection to the vocabulary.
class LmModel {
public:
    LmModel(LmConfig cfg, Rng& init);
    LmModel(const LmModel&) = delete;
    LmModel& operator=(const LmModel&) = delete;

    /// Logits [len x vocab] for tokens of length len <= cfg.seq.
    ad::Var logits(ad::Tape& tape, std::span<const std::size_t> tokens) const;
    /// Mean next-token cross-entropy: inputs window[0..n-1], targets window[1..n].
    ad::Var loss(ad::Tape& tape, std::span<const std::size_t> window) const;
    double loss_value(std::span<const std::size_t> window) const;

    const LmConfig& config() const noexcept { return cfg_; }
    std::vector<ad::Parameter*> parameters();
    std::vector<const ad::Parameter*> parameters() const;
    const ad::Parameter* find(const std::string& name) const;
    ad::Parameter* find(const std::string& name);
    const ad::Parameter& parameter(const std::string& name) const;
    std::size_t parameter_count() const;

private:
    struct Block {
        ad::Parameter* ln1_gain[3]{};
        ad::Parameter* ln1_bias[3]{};
        ad::Parameter* ln2_gain = nullptr;
        ad::Parameter* ln2_bias = nullptr;
        ad::Parameter* wq = nullptr;
        ad::Parameter* wk = nullptr;
        ad::Parameter* wv = nullptr;
        ad::Parameter* wo = nullptr;
        ad::Parameter* w1 = nullptr;
        ad::Parameter* b1 = nullptr;
        ad::Parameter* w2 = nullptr;
        ad::Parameter* b2 = nullptr;
        ad::Parameter* grn_b[3]{};
        ad::Parameter* grn_w[3]{};
    };

    ad::Parameter* add(std::string name, Tensor value, bool decay);
    ad::Var norm(ad::Tape& tape, ad::Var x, const ad::Parameter* gain, const ad::Parameter* bias) const;
    ad::Var attend(ad::Tape& tape, const Block& b, ad::Var q, ad::Var k, ad::Var v) const;
    ad::Var ffn(ad::Tape& tape, const Block& b, ad::Var x) const;
    ad::Var embed(ad::Tape& tape, std::span<const std::size_t> tokens) const;

    LmConfig cfg_;
    std::deque<ad::Parameter> params_;
    std::vector<Block> blocks_;
    ad::Parameter* tok_emb_ = nullptr;
    ad::Parameter* pos_emb_ = nullptr;
    ad::Parameter* final_b_ = nullptr;
    ad::Parameter* final_w_ = nullptr;
    ad::Parameter* lnf_gain_ = nullptr;
    ad::Parameter* lnf_bias_ = nullptr;
    ad::Parameter* head_ = nullptr;
};

/// Copies the transformer's weights into a DCA model by name and resets every
/// GRN to b = 1, w = 0, so `dca` computes the transformer's function. Throws
/// std::invalid_argument on an architecture or dimension mismatch.
void retrofit_into(const LmModel& transformer, LmModel& dca);

/// DCA wrapper around a transformer with the given stack policy.
std::unique_ptr<LmModel> retrofit(const LmModel& transformer, grn::StackPolicy stack = grn::StackPolicy::full(),
                                  bool separate_qkv_norms = false);

}  // namespace grnlab::dca
