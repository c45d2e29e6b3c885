// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include "grnlab/autodiff/ops.hpp"
#include "grnlab/dca/attention.hpp"
#include "grnlab/dca/checkpoint.hpp"
#include "grnlab/dca/lm.hpp"
#include "support/random.hpp"

using namespace grnlab;
using namespace grnlab::dca;
using grnlab::testing::Sampler;

namespace {

LmConfig small(LmArch arch) {
    LmConfig c;
    c.arch = arch;
    c.vocab = 20;
    c.d = 12;
    c.heads = 3;
    c.blocks = 3;
    c.seq = 10;
    c.ffn_mult = 2;
    return c;
}

std::vector<std::size_t> tokens(Sampler& rng, std::size_t n, std::size_t vocab) {
    std::vector<std::size_t> t(n);
    for (auto& v : t) v = rng.bits() % vocab;
    return t;
}

Tensor logits(const LmModel& m, std::span<const std::size_t> t) {
    ad::Tape tape;
    return m.logits(tape, t).value();
}

void jitter(LmModel& m, Sampler& rng, double s) {
    for (ad::Parameter* p : m.parameters())
        for (double& v : p->value().values()) v += s * rng.normal();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::filesystem::path temp_path(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / "grnlab_test_dca";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("causal attention") {
    SUBCASE("one position returns its value row") {
        Sampler rng(1);
        ad::Tape tape;
        const Tensor v = rng.normal_tensor({1, 4});
        const ad::Var out = causal_attention(tape.constant(rng.normal_tensor({1, 4})),
                                             tape.constant(rng.normal_tensor({1, 4})), tape.constant(v), 2);
        CHECK(max_abs_diff(out.value(), v) <= 1e-15);
    }
    SUBCASE("equal scores average the prefix") {
        Sampler rng(2);
        ad::Tape tape;
        const Tensor v = rng.normal_tensor({4, 6});
        const ad::Var out = causal_attention(tape.constant(Tensor({4, 6}, 0.3)), tape.constant(Tensor({4, 6}, 0.7)),
                                             tape.constant(v), 2);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t c = 0; c < 6; ++c) {
                double mean = 0.0;
                for (std::size_t j = 0; j <= i; ++j) mean += v(j, c);
                CHECK(out.value()(i, c) == doctest::Approx(mean / double(i + 1)).epsilon(1e-13));
            }
    }
    SUBCASE("two tokens, one head, hand computed") {
        const Tensor q = Tensor::matrix({{1.0, 0.0}, {0.5, -1.0}});
        const Tensor k = Tensor::matrix({{0.2, 0.4}, {-0.3, 1.0}});
        const Tensor v = Tensor::matrix({{1.0, 2.0}, {3.0, -1.0}});
        ad::Tape tape;
        const Tensor out = causal_attention(tape.constant(q), tape.constant(k), tape.constant(v), 1).value();
        const double s = 1.0 / std::sqrt(2.0);
        const double s10 = (0.5 * 0.2 - 1.0 * 0.4) * s, s11 = (0.5 * -0.3 - 1.0 * 1.0) * s;
        const double p0 = std::exp(s10) / (std::exp(s10) + std::exp(s11)), p1 = 1.0 - p0;
        CHECK(std::abs(out(0, 0) - 1.0) <= 1e-12);
        CHECK(std::abs(out(0, 1) - 2.0) <= 1e-12);
        CHECK(std::abs(out(1, 0) - (p0 * 1.0 + p1 * 3.0)) <= 1e-12);
        CHECK(std::abs(out(1, 1) - (p0 * 2.0 + p1 * -1.0)) <= 1e-12);
    }
    SUBCASE("heads must divide d") {
        ad::Tape tape;
        const ad::Var x = tape.constant(Tensor({2, 5}));
        CHECK_THROWS_AS(causal_attention(x, x, x, 2), ShapeError);
    }
}

TEST_CASE("config validation") {
    LmConfig c = small(LmArch::Dca);
    c.heads = 5;
    Rng r(0);
    CHECK_THROWS_AS(LmModel(c, r), std::invalid_argument);
    CHECK(parse_lm_arch("baseline") == LmArch::Transformer);
    CHECK_THROWS_AS(parse_lm_arch("rnn"), std::invalid_argument);
}

TEST_CASE("DCA at init computes the transformer") {
    Sampler rng(3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng a(seed), b(seed);
        const LmModel t(small(LmArch::Transformer), a), d(small(LmArch::Dca), b);
        const auto tk = tokens(rng, 10, 20);
        CHECK(max_abs_diff(logits(t, tk), logits(d, tk)) <= 1e-10);
        CHECK(std::abs(t.loss_value(tk) - d.loss_value(tk)) <= 1e-10);
    }
}

TEST_CASE("separate q/k/v norms start equal to the shared one") {
    Sampler rng(4);
    LmConfig c = small(LmArch::Dca);
    Rng a(7), b(7);
    const LmModel shared(c, a);
    c.separate_qkv_norms = true;
    const LmModel split(c, b);
    CHECK(split.find("block0.ln1_q.gain") != nullptr);
    CHECK(split.find("block0.ln1.gain") == nullptr);
    const auto tk = tokens(rng, 8, 20);
    CHECK(logits(shared, tk) == logits(split, tk));
}

TEST_CASE("q/k/v GRNs that select the input attend over the embeddings") {
    // With every block reading only the input column and the output combine
    // reading only the last block, earlier blocks cannot reach the logits.
    Sampler rng(5);
    const auto select = [](LmModel& m) {
        for (ad::Parameter* p : m.parameters()) {
            const auto& n = p->name();
            if (n.find("grn") == std::string::npos || n.back() != 'b') continue;
            Tensor& b = p->value();
            b.fill(0.0);
            const std::size_t col = n.rfind("final_grn", 0) == 0 ? b.cols() - 1 : 0;
            for (std::size_t i = 0; i < b.rows(); ++i) b(i, col) = 1.0;
        }
    };
    Rng a(9), c(9);
    LmModel m(small(LmArch::Dca), a), moved(small(LmArch::Dca), c);
    select(m);
    select(moved);
    for (const char* name : {"block0.ffn.w2", "block0.attn.wv", "block1.attn.wq", "block1.ln2.gain"})
        for (double& v : moved.find(name)->value().values()) v += 0.5;
    const auto tk = tokens(rng, 6, 20);
    CHECK(logits(moved, tk) == logits(m, tk));
    for (double& v : moved.find("block2.attn.wv")->value().values()) v += 0.5;
    CHECK(logits(moved, tk) != logits(m, tk));
}

TEST_CASE("k-DCA with k at least the depth equals full DCA") {
    Sampler rng(6);
    Rng a(1);
    LmModel full(small(LmArch::Dca), a);
    jitter(full, rng, 0.3);
    for (std::size_t k : {3u, 4u, 9u}) {
        LmConfig c = small(LmArch::Dca);
        c.stack = grn::StackPolicy::first_last(k);
        Rng b(2);
        LmModel trunc(c, b);
        const auto entries = snapshot(std::as_const(full).parameters());
        load_into(entries, trunc.parameters());
        const auto tk = tokens(rng, 10, 20);
        CHECK(max_abs_diff(logits(full, tk), logits(trunc, tk)) <= 1e-12);
    }
}

TEST_CASE("k-DCA with a short window still starts as the transformer") {
    Sampler rng(7);
    LmConfig c = small(LmArch::Dca);
    c.stack = grn::StackPolicy::first_last(1);
    Rng a(4), b(4);
    const LmModel t(small(LmArch::Transformer), a), d(c, b);
    const auto tk = tokens(rng, 10, 20);
    CHECK(max_abs_diff(logits(t, tk), logits(d, tk)) <= 1e-10);
}

TEST_CASE("logits are causal") {
    Sampler rng(8);
    for (LmArch arch : {LmArch::Transformer, LmArch::Dca}) {
        Rng a(5);
        LmModel m(small(arch), a);
        jitter(m, rng, 0.2);
        auto tk = tokens(rng, 10, 20);
        const Tensor before = logits(m, tk);
        for (std::size_t j = 0; j < tk.size(); ++j) {
            auto changed = tk;
            changed[j] = (changed[j] + 7) % 20;
            const Tensor after = logits(m, changed);
            for (std::size_t i = 0; i < j; ++i)
                for (std::size_t v = 0; v < 20; ++v) CHECK(after(i, v) == before(i, v));
        }
    }
}

TEST_CASE("zero output projection gives log V") {
    LmConfig c = small(LmArch::Dca);
    c.zero_head = true;
    Rng a(0);
    const LmModel m(c, a);
    Sampler rng(9);
    CHECK(m.loss_value(tokens(rng, 10, 20)) == doctest::Approx(std::log(20.0)).epsilon(1e-14));
}

TEST_CASE("every GRN b gets gradient after one backward pass") {
    Sampler rng(10);
    Rng a(6);
    const LmModel m(small(LmArch::Dca), a);
    ad::Tape tape;
    const ad::GradientMap g = tape.backward(m.loss(tape, tokens(rng, 10, 20)));
    std::size_t seen = 0;
    for (const ad::Parameter* p : m.parameters()) {
        const auto& n = p->name();
        if (n.size() < 2 || n.compare(n.size() - 2, 2, ".b") != 0 || n.find("grn") == std::string::npos) continue;
        ++seen;
        REQUIRE(g.find(*p) != nullptr);
        CHECK_MESSAGE(max_abs(*g.find(*p)) > 0.0, n);
    }
    CHECK(seen == 3 * 3 + 1);
}

TEST_CASE("token and length errors") {
    Rng a(0);
    const LmModel m(small(LmArch::Transformer), a);
    const std::vector<std::size_t> bad{1, 2, 20};
    CHECK_THROWS_AS(m.loss_value(bad), std::out_of_range);
    const std::vector<std::size_t> longer(12, 1);
    CHECK_THROWS_AS(m.loss_value(longer), std::invalid_argument);
    const std::vector<std::size_t> one{1};
    CHECK_THROWS_AS(m.loss_value(one), std::invalid_argument);
}

TEST_CASE("retrofit") {
    Sampler rng(11);
    Rng a(12);
    LmModel base(small(LmArch::Transformer), a);
    jitter(base, rng, 0.1);
    const auto tk = tokens(rng, 10, 20);
    for (bool separate : {false, true}) {
        const auto wrapped = retrofit(base, grn::StackPolicy::full(), separate);
        CHECK(wrapped->config().arch == LmArch::Dca);
        CHECK(max_abs_diff(logits(base, tk), logits(*wrapped, tk)) <= 1e-10);
        CHECK(std::abs(base.loss_value(tk) - wrapped->loss_value(tk)) <= 1e-6);
        for (const ad::Parameter* p : std::as_const(*wrapped).parameters()) {
            if (p->name().find("grn") == std::string::npos) continue;
            for (double v : p->value().values()) CHECK(v == (p->name().back() == 'b' ? 1.0 : 0.0));
        }
    }
    LmConfig other = small(LmArch::Dca);
    other.d = 16;
    other.heads = 4;
    Rng b(0);
    LmModel mismatch(other, b);
    CHECK_THROWS_AS(retrofit_into(base, mismatch), std::invalid_argument);
    CHECK_THROWS_AS(retrofit(*retrofit(base)), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
    Sampler rng(12);
    Rng a(13);
    LmModel m(small(LmArch::Dca), a);
    jitter(m, rng, 0.1);
    const auto p1 = temp_path("a.ckpt"), p2 = temp_path("b.ckpt");
    save_checkpoint(p1, std::as_const(m).parameters());
    const auto entries = load_checkpoint(p1);
    save_checkpoint(p2, entries);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(slurp(p1).compare(0, 8, std::string(kCheckpointMagic, 8)) == 0);

    Rng b(99);
    LmModel fresh(small(LmArch::Dca), b);
    load_into(entries, fresh.parameters());
    for (const ad::Parameter* p : std::as_const(m).parameters()) CHECK(fresh.parameter(p->name()).value() == p->value());
    CHECK_FALSE(std::filesystem::exists(p1.string() + ".tmp"));
}

TEST_CASE("checkpoint encoding") {
    std::vector<CheckpointEntry> e{{"a", Tensor::matrix({{1.5, -2.0}, {0.25, 3.0}}), DType::F64},
                                   {"b", Tensor::vector({0.1, 1e300}), DType::F64},
                                   {"s", Tensor::scalar(7.0), DType::F64}};
    const std::string bytes = encode_checkpoint(e);
    const auto back = decode_checkpoint(bytes);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].name == e[i].name);
        CHECK(back[i].value == e[i].value);
    }
    CHECK(encode_checkpoint(back) == bytes);

    SUBCASE("f32 stores single precision") {
        std::vector<CheckpointEntry> f{{"x", Tensor::vector({0.1, 2.0}), DType::F32}};
        const auto got = decode_checkpoint(encode_checkpoint(f));
        CHECK(got[0].dtype == DType::F32);
        CHECK(got[0].value[0] == static_cast<double>(0.1f));
        CHECK(got[0].value[1] == 2.0);
    }
    SUBCASE("malformed input") {
        std::string bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(decode_checkpoint(bad), CheckpointError);
        bad = bytes;
        bad[8] = 2;
        CHECK_THROWS_AS(decode_checkpoint(bad), CheckpointError);
        CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), CheckpointError);
        std::vector<CheckpointEntry> dup{e[0], e[0]};
        CHECK_THROWS_AS(decode_checkpoint(encode_checkpoint(dup)), CheckpointError);
    }
    SUBCASE("load_into wants the exact name set and shapes") {
        ad::Parameter a("a", Tensor({2, 2})), b("b", Tensor({2})), s("s", Tensor::scalar(0.0));
        ad::Parameter* all[] = {&a, &b, &s};
        load_into(back, all);
        CHECK(a.value() == e[0].value);
        ad::Parameter* fewer[] = {&a, &b};
        CHECK_THROWS_AS(load_into(back, fewer), CheckpointError);
        ad::Parameter wrong("a", Tensor({4}));
        ad::Parameter* shaped[] = {&wrong, &b, &s};
        CHECK_THROWS_AS(load_into(back, shaped), CheckpointError);
    }
}
