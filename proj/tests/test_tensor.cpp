#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fedtst/errors.hpp"
#include "fedtst/gradcheck.hpp"
#include "fedtst/params.hpp"
#include "fedtst/rng.hpp"
#include "fedtst/tensor.hpp"

using namespace fedtst;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

// Values bounded away from zero, for ops with a kink at the origin.
Tensor random_signed_tensor(std::vector<std::size_t> shape, Rng& rng, double lo_mag,
                            double hi_mag) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values()) {
        double m = rng.uniform(lo_mag, hi_mag);
        v = rng.uniform() < 0.5 ? -m : m;
    }
    return t;
}

}  // namespace

TEST_CASE("tensor factories and shape bookkeeping") {
    Tensor z = Tensor::zeros({2, 3});
    CHECK(z.size() == 6);
    CHECK(z.rows() == 2);
    CHECK(z.cols() == 3);
    for (double v : z.values()) CHECK(v == 0.0);

    Tensor f = Tensor::full({4}, 2.5);
    for (double v : f.values()) CHECK(v == 2.5);

    Tensor d = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    CHECK(d.values()[3] == 4.0);
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), DimensionError);

    Tensor s = Tensor::scalar(7.0);
    CHECK(s.item() == 7.0);
    CHECK_THROWS_AS(d.item(), DimensionError);
}

TEST_CASE("reshape shares storage, clone copies it") {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = a.reshape({4});
    b.values()[0] = 99.0;
    CHECK(a.values()[0] == 99.0);
    CHECK_THROWS_AS(a.reshape({3}), DimensionError);

    Tensor c = a.clone();
    c.values()[0] = -1.0;
    CHECK(a.values()[0] == 99.0);
    CHECK_FALSE(c.has_grad());
}

TEST_CASE("matmul against hand results") {
    Tape tape(false);
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor ai = matmul(tape, a, eye);
    for (std::size_t i = 0; i < 4; ++i) CHECK(ai.values()[i] == a.values()[i]);

    Tensor b = Tensor::from_data({2, 2}, {5, 6, 7, 8});
    Tensor c = matmul(tape, a, b);
    CHECK(c.values()[0] == 19.0);
    CHECK(c.values()[1] == 22.0);
    CHECK(c.values()[2] == 43.0);
    CHECK(c.values()[3] == 50.0);

    Tensor bad = Tensor::zeros({3, 2});
    CHECK_THROWS_AS(matmul(tape, a, bad), DimensionError);
}

TEST_CASE("elementwise arithmetic") {
    Tape tape(false);
    Tensor a = Tensor::from_data({3}, {1, 2, 3});
    Tensor b = Tensor::from_data({3}, {10, 20, 30});
    CHECK(add(tape, a, b).values()[2] == 33.0);
    CHECK(sub(tape, b, a).values()[0] == 9.0);
    CHECK(mul(tape, a, b).values()[1] == 40.0);
    CHECK(scale(tape, a, -2.0).values()[2] == -6.0);
    Tensor bad = Tensor::zeros({4});
    CHECK_THROWS_AS(add(tape, a, bad), DimensionError);
}

TEST_CASE("bias and row-wise broadcasts") {
    Tape tape(false);
    Tensor x = Tensor::from_data({2, 3}, {0, 0, 0, 1, 1, 1});
    Tensor bias = Tensor::from_data({3}, {1, 2, 3});
    Tensor y = add_bias(tape, x, bias);
    CHECK(y.values()[0] == 1.0);
    CHECK(y.values()[5] == 4.0);

    Tensor v = Tensor::from_data({3}, {2, 3, 4});
    Tensor w = mul_rows(tape, x, v);
    CHECK(w.values()[0] == 0.0);
    CHECK(w.values()[4] == 3.0);
    CHECK_THROWS_AS(add_bias(tape, x, v.reshape({3, 1})), DimensionError);
}

TEST_CASE("cyclic row table repeats with its period and takes no gradient") {
    Tape tape(true);
    Tensor x = Tensor::zeros({4, 2});
    Tensor table = Tensor::from_data({2, 2}, {1, 2, 10, 20});
    Tensor y = add_cyclic_rows(tape, x, table);
    CHECK(y.values()[0] == 1.0);
    CHECK(y.values()[2] == 10.0);
    CHECK(y.values()[4] == 1.0);
    CHECK(y.values()[7] == 20.0);

    Tensor loss = mean_all(tape, y);
    tape.backward(loss);
    CHECK(x.has_grad());
    CHECK_FALSE(table.has_grad());
}

TEST_CASE("gelu matches x times the normal CDF") {
    Tape tape(false);
    Tensor x = Tensor::from_data({3}, {1.0, -0.5, 2.3});
    Tensor y = gelu(tape, x);
    CHECK(y.values()[0] == doctest::Approx(0.8413447460685429).epsilon(1e-13));
    CHECK(y.values()[1] == doctest::Approx(-0.15426876936299344).epsilon(1e-13));
    CHECK(y.values()[2] == doctest::Approx(2.2753345469501456).epsilon(1e-13));
    Tensor zero = Tensor::scalar(0.0);
    CHECK(gelu(tape, zero).item() == 0.0);
}

TEST_CASE("tanh and piecewise ops") {
    Tape tape(false);
    Tensor x = Tensor::from_data({4}, {0.5, -2.0, 3.0, 0.0});
    CHECK(tanh_op(tape, x).values()[0] == doctest::Approx(0.46211715726000974).epsilon(1e-14));
    Tensor r = relu(tape, x);
    CHECK(r.values()[1] == 0.0);
    CHECK(r.values()[2] == 3.0);
    Tensor a = abs_op(tape, x);
    CHECK(a.values()[1] == 2.0);
    Tensor s = square(tape, x);
    CHECK(s.values()[2] == 9.0);
}

TEST_CASE("huber is quadratic inside delta and linear outside") {
    Tape tape(false);
    const double delta = 0.3;
    Tensor x = Tensor::from_data({3}, {0.1, -0.3, 2.0});
    Tensor h = huber(tape, x, delta);
    CHECK(h.values()[0] == doctest::Approx(0.5 * 0.1 * 0.1).epsilon(1e-14));
    // At |x| == delta the two branches agree (continuity).
    CHECK(h.values()[1] == doctest::Approx(0.5 * delta * delta).epsilon(1e-14));
    CHECK(h.values()[2] == doctest::Approx(delta * (2.0 - delta / 2.0)).epsilon(1e-14));
}

TEST_CASE("softmax rows: frozen examples and stability") {
    Tape tape(false);
    Tensor flat = softmax_rows(tape, Tensor::from_data({1, 3}, {0, 0, 0}));
    for (double v : flat.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    // Without max-subtraction exp(1000) overflows; the stabilized form is exact.
    Tensor big = softmax_rows(tape, Tensor::from_data({1, 2}, {1000.0, 1000.0}));
    CHECK(big.values()[0] == 0.5);
    CHECK(big.values()[1] == 0.5);

    Tensor skew = softmax_rows(tape, Tensor::from_data({1, 2}, {0.0, std::log(3.0)}));
    CHECK(skew.values()[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(skew.values()[1] == doctest::Approx(0.75).epsilon(1e-14));

    Rng rng(5);
    Tensor r = softmax_rows(tape, random_tensor({4, 7}, rng, -3.0, 3.0));
    for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 7; ++j) s += r.values()[i * 7 + j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("layer norm closed form on a two-point row") {
    Tape tape(false);
    Tensor x = Tensor::from_data({1, 2}, {1.0, -1.0});
    Tensor gain = Tensor::full({2}, 1.0);
    Tensor bias = Tensor::zeros({2});
    Tensor y = layer_norm(tape, x, gain, bias, 1e-5);
    const double c = 0.9999950000374997;  // 1/sqrt(1 + 1e-5)
    CHECK(y.values()[0] == doctest::Approx(c).epsilon(1e-14));
    CHECK(y.values()[1] == doctest::Approx(-c).epsilon(1e-14));

    Tensor gain2 = Tensor::from_data({2}, {2.0, 2.0});
    Tensor bias2 = Tensor::from_data({2}, {1.0, 1.0});
    Tensor y2 = layer_norm(tape, x, gain2, bias2, 1e-5);
    CHECK(y2.values()[0] == doctest::Approx(2.0 * c + 1.0).epsilon(1e-14));
}

TEST_CASE("attention degenerates to the value row for a single position") {
    Tape tape(false);
    Rng rng(9);
    Tensor q = random_tensor({1, 4}, rng);
    Tensor k = random_tensor({1, 4}, rng);
    Tensor v = random_tensor({1, 4}, rng);
    Tensor y = multihead_attention(tape, q, k, v, 1, 1, 2);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(y.values()[i] == doctest::Approx(v.values()[i]).epsilon(1e-14));
}

TEST_CASE("attention with identical keys averages the values") {
    Tape tape(false);
    Rng rng(10);
    Tensor q = random_tensor({3, 4}, rng);
    Tensor k = Tensor::zeros({3, 4});
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t j = 0; j < 4; ++j) k.values()[t * 4 + j] = 0.3 * double(j) - 0.5;
    Tensor v = random_tensor({3, 4}, rng);

    Tensor attn;
    Tensor y = multihead_attention(tape, q, k, v, 1, 3, 1, &attn);
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t j = 0; j < 4; ++j) {
            double mean = (v.values()[j] + v.values()[4 + j] + v.values()[8 + j]) / 3.0;
            CHECK(y.values()[t * 4 + j] == doctest::Approx(mean).epsilon(1e-12));
        }
    }

    // Attention weights are a proper distribution over key positions.
    CHECK(attn.shape() == std::vector<std::size_t>{1, 1, 3, 3});
    for (std::size_t t = 0; t < 3; ++t) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += attn.values()[t * 3 + j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }

    Tensor badq = Tensor::zeros({3, 5});
    CHECK_THROWS_AS(multihead_attention(tape, badq, badq, badq, 1, 3, 2), DimensionError);
}

TEST_CASE("pooling, slicing, concatenation") {
    Tape tape(false);
    Tensor x = Tensor::from_data({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    Tensor pooled = mean_pool_rows(tape, x, 2);
    CHECK(pooled.rows() == 2);
    CHECK(pooled.values()[0] == 2.0);
    CHECK(pooled.values()[1] == 3.0);
    CHECK(pooled.values()[2] == 6.0);

    CHECK(mean_all(tape, x).item() == 4.5);

    Tensor sl = slice_rows(tape, x, 1, 3);
    CHECK(sl.rows() == 2);
    CHECK(sl.values()[0] == 3.0);
    CHECK(sl.values()[3] == 6.0);
    CHECK_THROWS_AS(slice_rows(tape, x, 3, 2), DimensionError);

    Tensor cat = concat_rows(tape, sl, x);
    CHECK(cat.rows() == 6);
    CHECK(cat.values()[0] == 3.0);
    CHECK(cat.values()[4] == 1.0);
}

TEST_CASE("weighted sum of scalar terms") {
    Tape tape(false);
    std::vector<Tensor> terms = {Tensor::scalar(2.0), Tensor::scalar(10.0)};
    Tensor y = weighted_sum(tape, terms, {0.5, 0.1});
    CHECK(y.item() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(weighted_sum(tape, terms, {0.5}), DimensionError);
}

TEST_CASE("dropout zeroes or rescales, identity at rate zero") {
    Tape tape(false);
    Rng rng(21);
    Tensor x = Tensor::full({100}, 3.0);
    Tensor same = dropout(tape, x, 0.0, rng);
    for (double v : same.values()) CHECK(v == 3.0);

    const double rate = 0.4;
    Tensor y = dropout(tape, x, rate, rng);
    int kept = 0;
    for (double v : y.values()) {
        bool zero = v == 0.0;
        bool scaled = std::abs(v - 3.0 / (1.0 - rate)) < 1e-12;
        CHECK((zero || scaled));
        if (scaled) ++kept;
    }
    CHECK(kept > 30);
    CHECK(kept < 90);
}

TEST_CASE("tape mechanics") {
    SUBCASE("non-recording tape stores nothing") {
        Tape tape(false);
        Tensor x = Tensor::from_data({2}, {1, 2});
        square(tape, x);
        CHECK(tape.recorded_steps() == 0);
    }
    SUBCASE("backward consumes the tape") {
        Tape tape(true);
        Tensor x = Tensor::from_data({2}, {1, 2});
        Tensor loss = mean_all(tape, square(tape, x));
        CHECK(tape.recorded_steps() == 2);
        tape.backward(loss);
        CHECK(tape.recorded_steps() == 0);
        CHECK(x.grad()[0] == doctest::Approx(1.0).epsilon(1e-15));  // 2x/2
        CHECK(x.grad()[1] == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("loss must be scalar") {
        Tape tape(true);
        Tensor x = Tensor::from_data({2}, {1, 2});
        Tensor y = square(tape, x);
        CHECK_THROWS_AS(tape.backward(y), DimensionError);
    }
    SUBCASE("gradients accumulate when a tensor is used twice") {
        Tape tape(true);
        Tensor x = Tensor::scalar(3.0);
        Tensor y = add(tape, x, x);
        tape.backward(y);
        CHECK(x.grad()[0] == 2.0);
    }
}

TEST_CASE("parameter sets keep canonical order and flatten consistently") {
    ParamSet ps;
    ps.add("zebra", Tensor::from_data({2}, {5, 6}));
    ps.add("alpha", Tensor::from_data({2}, {1, 2}));
    ps.add("mid", Tensor::from_data({1}, {3}));
    CHECK(ps.names() == std::vector<std::string>{"alpha", "mid", "zebra"});
    CHECK(ps.element_count() == 5);
    CHECK(ps.tensor_count() == 3);

    auto flat = ps.flatten_values();
    CHECK(flat == std::vector<double>{1, 2, 3, 5, 6});

    std::vector<double> next = {10, 20, 30, 50, 60};
    ps.load_values(next);
    CHECK(ps.at("zebra").values()[1] == 60.0);
    CHECK_THROWS_AS(ps.load_values(std::vector<double>{1.0, 2.0}), DimensionError);
    CHECK_THROWS_AS(ps.add("mid", Tensor::scalar(0.0)), ConfigError);
    CHECK_THROWS_AS(ps.at("missing"), ConfigError);

    // Grads flatten as zeros until allocated, then round-trip.
    auto g0 = ps.flatten_grads();
    for (double v : g0) CHECK(v == 0.0);
    std::vector<double> g = {1, 1, 2, 3, 3};
    ps.load_grads(g);
    CHECK(ps.flatten_grads() == g);

    ParamSet copy = ps.clone();
    copy.at("alpha").values()[0] = -777.0;
    CHECK(ps.at("alpha").values()[0] == 10.0);
}

// ---------------------------------------------------------------------------
// Gradient checks: tape gradients vs central finite differences.
// ---------------------------------------------------------------------------

TEST_CASE("gradient check: affine chain") {
    Rng rng(100);
    ParamSet ps;
    ps.add("x", random_tensor({3, 4}, rng));
    ps.add("w", random_tensor({4, 2}, rng));
    ps.add("b", random_tensor({2}, rng));
    auto f = [](Tape& t, ParamSet& p) {
        Tensor h = add_bias(t, matmul(t, p.at("x"), p.at("w")), p.at("b"));
        return mean_all(t, square(t, h));
    };
    auto r = grad_check(f, ps);
    CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("gradient check: smooth elementwise ops") {
    Rng rng(101);
    ParamSet ps;
    ps.add("x", random_tensor({4, 3}, rng, -2.0, 2.0));
    SUBCASE("gelu") {
        auto f = [](Tape& t, ParamSet& p) { return mean_all(t, gelu(t, p.at("x"))); };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
    SUBCASE("tanh") {
        auto f = [](Tape& t, ParamSet& p) { return mean_all(t, tanh_op(t, p.at("x"))); };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
    SUBCASE("square") {
        auto f = [](Tape& t, ParamSet& p) { return mean_all(t, square(t, p.at("x"))); };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
    SUBCASE("scale and mul") {
        Rng rng2(55);
        Tensor other = random_tensor({4, 3}, rng2);
        auto f = [other](Tape& t, ParamSet& p) {
            return mean_all(t, mul(t, scale(t, p.at("x"), 1.7), other));
        };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
}

TEST_CASE("gradient check: kinked ops away from their kinks") {
    Rng rng(102);
    ParamSet ps;
    ps.add("x", random_signed_tensor({5, 3}, rng, 0.05, 0.25));
    SUBCASE("relu") {
        auto f = [](Tape& t, ParamSet& p) { return mean_all(t, relu(t, p.at("x"))); };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
    SUBCASE("abs") {
        auto f = [](Tape& t, ParamSet& p) { return mean_all(t, abs_op(t, p.at("x"))); };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
    SUBCASE("huber, both branches") {
        // delta = 0.15 splits the sampled magnitudes across branches while
        // keeping every point at least 0.05 from the kink.
        ParamSet ps2;
        Rng rng2(103);
        Tensor x = Tensor::zeros({6});
        for (std::size_t i = 0; i < 6; ++i) {
            double m = i % 2 == 0 ? rng2.uniform(0.02, 0.08) : rng2.uniform(0.25, 0.9);
            x.values()[i] = rng2.uniform() < 0.5 ? -m : m;
        }
        ps2.add("x", x);
        auto f = [](Tape& t, ParamSet& p) {
            return mean_all(t, huber(t, p.at("x"), 0.15));
        };
        CHECK(grad_check(f, ps2).max_rel_error < 1e-6);
    }
}

TEST_CASE("gradient check: softmax, layer norm, broadcasts") {
    Rng rng(104);
    ParamSet ps;
    ps.add("x", random_tensor({3, 5}, rng, -2.0, 2.0));
    ps.add("gain", random_tensor({5}, rng, 0.5, 1.5));
    ps.add("bias", random_tensor({5}, rng, -0.5, 0.5));
    Tensor target = random_tensor({3, 5}, rng);

    SUBCASE("softmax against a fixed target") {
        auto f = [target](Tape& t, ParamSet& p) {
            return mean_all(t, mul(t, softmax_rows(t, p.at("x")), target));
        };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
    SUBCASE("layer norm") {
        auto f = [target](Tape& t, ParamSet& p) {
            Tensor y = layer_norm(t, p.at("x"), p.at("gain"), p.at("bias"), 1e-5);
            return mean_all(t, mul(t, y, target));
        };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
    SUBCASE("mul_rows and add_bias") {
        auto f = [target](Tape& t, ParamSet& p) {
            Tensor y = mul_rows(t, add_bias(t, p.at("x"), p.at("bias")), p.at("gain"));
            return mean_all(t, mul(t, y, target));
        };
        CHECK(grad_check(f, ps).max_rel_error < 1e-6);
    }
}

TEST_CASE("gradient check: multi-head attention") {
    Rng rng(105);
    ParamSet ps;
    ps.add("q", random_tensor({6, 4}, rng));
    ps.add("k", random_tensor({6, 4}, rng));
    ps.add("v", random_tensor({6, 4}, rng));
    Tensor target = random_tensor({6, 4}, rng);
    auto f = [target](Tape& t, ParamSet& p) {
        Tensor y = multihead_attention(t, p.at("q"), p.at("k"), p.at("v"), 2, 3, 2);
        return mean_all(t, mul(t, y, target));
    };
    CHECK(grad_check(f, ps).max_rel_error < 1e-6);
}

TEST_CASE("gradient check: pooling, slicing, concatenation, weighted sum") {
    Rng rng(106);
    ParamSet ps;
    ps.add("x", random_tensor({6, 3}, rng));
    Tensor target = random_tensor({2, 3}, rng);
    auto f = [target](Tape& t, ParamSet& p) {
        Tensor head = slice_rows(t, p.at("x"), 0, 2);
        Tensor tail = slice_rows(t, p.at("x"), 4, 6);
        Tensor joined = concat_rows(t, head, tail);  // [4, 3]
        Tensor pooled = mean_pool_rows(t, joined, 2);  // [2, 3]
        Tensor a = mean_all(t, mul(t, pooled, target));
        Tensor b = mean_all(t, square(t, p.at("x")));
        return weighted_sum(t, {a, b}, {0.7, 0.3});
    };
    CHECK(grad_check(f, ps).max_rel_error < 1e-6);
}

TEST_CASE("gradient check: dropout with a replayed mask") {
    Rng rng(107);
    ParamSet ps;
    ps.add("x", random_tensor({4, 4}, rng));
    // The mask must be identical on every evaluation, so the generator is
    // re-seeded inside the loss function.
    auto f = [](Tape& t, ParamSet& p) {
        Rng mask_rng(4242);
        return mean_all(t, dropout(t, p.at("x"), 0.3, mask_rng));
    };
    CHECK(grad_check(f, ps).max_rel_error < 1e-6);
}

TEST_CASE("gradient check: cyclic table input gradient") {
    Rng rng(108);
    ParamSet ps;
    ps.add("x", random_tensor({4, 3}, rng));
    Tensor table = random_tensor({2, 3}, rng);
    auto f = [table](Tape& t, ParamSet& p) {
        return mean_all(t, square(t, add_cyclic_rows(t, p.at("x"), table)));
    };
    CHECK(grad_check(f, ps).max_rel_error < 1e-6);
}

TEST_CASE("grad_check rejects non-finite losses") {
    ParamSet ps;
    ps.add("x", Tensor::scalar(2.0));
    auto f = [](Tape& t, ParamSet& p) {
        return scale(t, p.at("x"), std::numeric_limits<double>::infinity());
    };
    CHECK_THROWS_AS(grad_check(f, ps), NumericError);
    auto g = [](Tape&, ParamSet&) { return Tensor::scalar(1.0); };
    CHECK_THROWS_AS(grad_check(g, ps, -1.0), ConfigError);
}
