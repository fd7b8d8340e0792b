#include <cmath>
#include <vector>

#include "doctest.h"
#include "fedtst/errors.hpp"
#include "fedtst/gradcheck.hpp"
#include "fedtst/model.hpp"

using namespace fedtst;

namespace {

Tensor random_inputs(const TstConfig& c, std::size_t batch, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t = Tensor::zeros({batch, c.seq_len, c.n_features});
    for (double& v : t.values()) v = rng.uniform(-1.5, 1.5);
    return t;
}

// Scalar count implied by the architecture, written out dimension by
// dimension. Kept separate from the library so the two can disagree.
std::size_t expected_param_count(const TstConfig& c) {
    const std::size_t d = c.d_model;
    std::size_t n = c.n_features;                    // feature_weights
    n += c.n_features * d + d;                       // proj1
    n += d * d + d;                                  // proj2
    for (std::size_t l = 0; l < c.n_layers; ++l) {
        n += 4 * d * d + 3 * d;                      // q, k, v, o; no key bias
        n += 4 * d;                                  // two norms, gain + bias
        n += d * c.d_ff + c.d_ff;                    // ff1
        n += c.d_ff * d + d;                         // ff2
    }
    n += 2 * d;                                      // final norm
    n += d * c.n_outputs + c.n_outputs;              // output projection
    return n;
}

}  // namespace

TEST_CASE("config validation") {
    TstConfig c;
    CHECK_NOTHROW(c.validate());
    TstConfig odd = c;
    odd.d_model = 65;  // not divisible by 4 heads
    CHECK_THROWS_AS(odd.validate(), ConfigError);
    TstConfig zero = c;
    zero.n_layers = 0;
    CHECK_THROWS_AS(zero.validate(), ConfigError);
    TstConfig drop = c;
    drop.dropout_rate = 1.0;
    CHECK_THROWS_AS(drop.validate(), ConfigError);
}

TEST_CASE("initialization contract") {
    TstConfig c;
    ParamSet p = init_params(c, 7);

    for (double v : p.at("feature_weights").values()) {
        CHECK(v >= 1.5);
        CHECK(v <= 2.5);
    }
    for (double v : p.at("proj1.bias").values()) CHECK(v == 0.0);
    for (double v : p.at("layer00.ln1.gain").values()) CHECK(v == 1.0);

    // Glorot bound for proj1: sqrt(6/(10+64)).
    const double bound = std::sqrt(6.0 / 74.0);
    for (double v : p.at("proj1.weight").values()) {
        CHECK(std::abs(v) <= bound);
    }

    ParamSet q = init_params(c, 7);
    CHECK(p.flatten_values() == q.flatten_values());
    ParamSet r = init_params(c, 8);
    CHECK(p.flatten_values() != r.flatten_values());
}

TEST_CASE("parameter count matches the dimension arithmetic") {
    TstConfig c;
    ParamSet p = init_params(c, 1);
    CHECK(param_count(p) == expected_param_count(c));
    CHECK(param_count(p) == 72013u);
    CHECK(param_count(init_params(c, 99)) == param_count(p));

    TstConfig big = payload_matched_config();
    const std::size_t n = expected_param_count(big);
    CHECK(param_count(init_params(big, 1)) == n);
    const double mb = double(n) * 4.0 / 1e6;
    CHECK(mb >= 2.0);
    CHECK(mb <= 2.2);
}

TEST_CASE("positional encoding values") {
    Tensor pe = positional_encoding(15, 8);
    CHECK(pe.shape() == std::vector<std::size_t>{15, 8});
    // Position 0: sin(0)=0, cos(0)=1 alternating.
    for (std::size_t i = 0; i < 8; i += 2) {
        CHECK(pe.values()[i] == 0.0);
        CHECK(pe.values()[i + 1] == 1.0);
    }
    CHECK(pe.values()[1 * 8 + 0] == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
    for (double v : pe.values()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("forward shape contract and eval determinism") {
    TstConfig c;
    ParamSet p = init_params(c, 3);
    Rng rng(1);
    for (std::size_t b : {1u, 2u, 32u}) {
        Tape tape(false);
        Tensor out = forward(tape, c, p, random_inputs(c, b, b), false, rng);
        CHECK(out.shape() == std::vector<std::size_t>{b, c.n_outputs});
        for (double v : out.values()) CHECK(std::isfinite(v));
    }

    Tensor in = random_inputs(c, 4, 42);
    Tape tape(false);
    Rng r1(1), r2(999);
    Tensor a = forward(tape, c, p, in, false, r1);
    Tensor b = forward(tape, c, p, in, false, r2);
    // Eval mode is deterministic and ignores the generator entirely.
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == b.values()[i]);

    Tensor bad = Tensor::zeros({2, 14, 10});
    CHECK_THROWS_AS(forward(tape, c, p, bad, false, rng), DimensionError);
    Tensor nan_in = random_inputs(c, 1, 5);
    nan_in.values()[7] = std::nan("");
    CHECK_THROWS_AS(forward(tape, c, p, nan_in, false, rng), NumericError);
}

TEST_CASE("training mode dropout is stochastic but seed-reproducible") {
    TstConfig c;
    ParamSet p = init_params(c, 3);
    Tensor in = random_inputs(c, 2, 11);
    Tape tape(false);
    Rng r1(5), r2(5), r3(6);
    Tensor a = forward(tape, c, p, in, true, r1);
    Tensor b = forward(tape, c, p, in, true, r2);
    Tensor d = forward(tape, c, p, in, true, r3);
    CHECK(a.values()[0] == b.values()[0]);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a.values()[i] != d.values()[i];
    CHECK(any_diff);
}

TEST_CASE("doubling a feature weight equals doubling that input feature") {
    TstConfig c;
    ParamSet p = init_params(c, 17);
    const std::size_t f = 4;
    Tensor in = random_inputs(c, 3, 23);

    ParamSet p2 = p.clone();
    p2.at("feature_weights").values()[f] *= 2.0;

    Tensor in2 = in.clone();
    for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t t = 0; t < c.seq_len; ++t)
            in2.values()[(b * c.seq_len + t) * c.n_features + f] *= 2.0;

    Tape tape(false);
    Rng rng(1);
    Tensor ya = forward(tape, c, p2, in, false, rng);
    Tensor yb = forward(tape, c, p, in2, false, rng);
    for (std::size_t i = 0; i < ya.size(); ++i) {
        CHECK(ya.values()[i] == doctest::Approx(yb.values()[i]).epsilon(1e-12));
    }
}

TEST_CASE("swapping two features with their weights and projection rows is a no-op") {
    TstConfig c;
    ParamSet p = init_params(c, 29);
    const std::size_t f1 = 2, f2 = 7;
    Tensor in = random_inputs(c, 2, 31);

    ParamSet p2 = p.clone();
    std::swap(p2.at("feature_weights").values()[f1], p2.at("feature_weights").values()[f2]);
    auto w = p2.at("proj1.weight").values();
    for (std::size_t j = 0; j < c.d_model; ++j) {
        std::swap(w[f1 * c.d_model + j], w[f2 * c.d_model + j]);
    }

    Tensor in2 = in.clone();
    for (std::size_t r = 0; r < 2 * c.seq_len; ++r) {
        std::swap(in2.values()[r * c.n_features + f1], in2.values()[r * c.n_features + f2]);
    }

    Tape tape(false);
    Rng rng(1);
    Tensor ya = forward(tape, c, p, in, false, rng);
    Tensor yb = forward(tape, c, p2, in2, false, rng);
    for (std::size_t i = 0; i < ya.size(); ++i) {
        CHECK(std::abs(ya.values()[i] - yb.values()[i]) < 1e-9);
    }
}

TEST_CASE("attention block: single position puts weight 1 on itself") {
    TstConfig c;
    c.seq_len = 1;
    ParamSet p = init_params(c, 13);
    Rng rng(1);
    Tape tape(false);
    Tensor x = Tensor::zeros({2, c.d_model});
    Rng fill(3);
    for (double& v : x.values()) v = fill.uniform(-1.0, 1.0);

    Tensor attn;
    attention_block(tape, c, p, 0, x, 2, false, rng, &attn);
    CHECK(attn.shape() == std::vector<std::size_t>{2, c.n_heads, 1, 1});
    for (double v : attn.values()) CHECK(v == 1.0);
}

TEST_CASE("attention block: zero value/output projections leave a pure residual") {
    TstConfig c;
    ParamSet p = init_params(c, 14);
    for (const char* name :
         {"layer00.attn.wv", "layer00.attn.bv", "layer00.attn.wo", "layer00.attn.bo"}) {
        for (double& v : p.at(name).values()) v = 0.0;
    }
    Rng rng(1);
    Tape tape(false);
    Tensor x = Tensor::zeros({2 * c.seq_len, c.d_model});
    Rng fill(4);
    for (double& v : x.values()) v = fill.uniform(-1.0, 1.0);

    Tensor y = attention_block(tape, c, p, 0, x, 2, false, rng);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.values()[i] == x.values()[i]);
}

TEST_CASE("attention rows from a full forward sum to one") {
    TstConfig c;
    ParamSet p = init_params(c, 15);
    Tensor in = random_inputs(c, 2, 77);
    Tape tape(false);
    Rng rng(1);
    Tensor attn;
    forward(tape, c, p, in, false, rng, &attn);
    REQUIRE(attn.shape() ==
            std::vector<std::size_t>{2, c.n_heads, c.seq_len, c.seq_len});
    const std::size_t t = c.seq_len;
    for (std::size_t row = 0; row < 2 * c.n_heads * t; ++row) {
        double s = 0.0;
        for (std::size_t j = 0; j < t; ++j) s += attn.values()[row * t + j];
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("full model gradient check on a small architecture") {
    TstConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.d_ff = 16;
    c.dropout_rate = 0.0;
    ParamSet p = init_params(c, 19);
    Tensor in = random_inputs(c, 2, 101);
    Tensor target = Tensor::zeros({2, c.n_outputs});
    Rng tfill(6);
    for (double& v : target.values()) v = tfill.uniform(-1.0, 1.0);

    auto f = [&](Tape& tape, ParamSet& params) {
        Rng unused(0);
        Tensor pred = forward(tape, c, params, in, false, unused);
        return mean_all(tape, square(tape, sub(tape, pred, target)));
    };
    auto r = grad_check(f, p, 1e-5);
    INFO("worst: ", r.worst_param, "[", r.worst_index, "] analytic ", r.analytic,
         " numeric ", r.numeric);
    CHECK(r.max_rel_error < 1e-6);
}
