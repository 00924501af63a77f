#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "advdial/autodiff.hpp"
#include "advdial/gradcheck.hpp"
#include "advdial/nn.hpp"
#include "advdial/parameters.hpp"
#include "advdial/rng.hpp"
#include "advdial/tensor.hpp"

using namespace advdial;

namespace {

// Independent single-step LSTM reference: plain loops over the gate
// equations, no tape involved.
RecurrentState lstm_reference(const Tensor& wx, const Tensor& wh, const Tensor& b,
                              const RecurrentState& prev, const Tensor& x) {
    std::size_t H = b.size() / 4;
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<double> z(4 * H, 0.0);
    for (std::size_t i = 0; i < 4 * H; ++i) {
        double acc = b[i];
        for (std::size_t j = 0; j < x.size(); ++j) acc += wx.at(i, j) * x[j];
        for (std::size_t j = 0; j < H; ++j) acc += wh.at(i, j) * prev.hidden[j];
        z[i] = acc;
    }
    RecurrentState out = RecurrentState::zeros(H);
    for (std::size_t i = 0; i < H; ++i) {
        double gi = sig(z[i]);
        double gf = sig(z[H + i]);
        double gc = std::tanh(z[2 * H + i]);
        double go = sig(z[3 * H + i]);
        out.cell[i] = gf * prev.cell[i] + gi * gc;
        out.hidden[i] = go * std::tanh(out.cell[i]);
    }
    return out;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& x : t.data()) x = rng.uniform(-scale, scale);
    return t;
}

}  // namespace

TEST_CASE("tensor invariants") {
    REQUIRE_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), DimensionError);
    Tensor t = Tensor::from_vector({1.0, 2.0, 3.0});
    REQUIRE(t.size() == 3);
    t[1] = std::nan("");
    REQUIRE_THROWS_AS(t.check_finite("t"), NumericError);
}

TEST_CASE("rng determinism and ranges") {
    Rng a(7), b(7);
    for (int i = 0; i < 1000; ++i) {
        double x = a.uniform();
        REQUIRE(x == b.uniform());
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }
    Rng c(3);
    for (int i = 0; i < 100; ++i) REQUIRE(c.uniform_index(5) < 5);
}

TEST_CASE("adam first step matches hand-evaluated recurrence") {
    ParameterSet ps;
    ps.add("w", Tensor::scalar(1.0));
    ps.at("w").grad[0] = 0.1;
    AdamConfig cfg;  // lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8
    adam_update(ps, cfg);

    // Hand evaluation of one Adam step at t=1.
    double m = (1.0 - 0.9) * 0.1;
    double v = (1.0 - 0.999) * 0.1 * 0.1;
    double mhat = m / (1.0 - 0.9);
    double vhat = v / (1.0 - 0.999);
    double expect = 1.0 - 1e-3 * mhat / (std::sqrt(vhat) + 1e-8);

    REQUIRE(ps.at("w").value[0] == Catch::Approx(expect).epsilon(1e-14));
    // Bias-corrected first step is close to lr * sign(g).
    REQUIRE(std::fabs((1.0 - ps.at("w").value[0]) - 1e-3) < 1e-9);
    REQUIRE(ps.step_count() == 1);
    REQUIRE(ps.at("w").grad[0] == 0.0);
}

TEST_CASE("adam zero gradient leaves fresh parameters unchanged") {
    ParameterSet ps;
    ps.add("w", Tensor::from_vector({2.0, -1.0}));
    adam_update(ps, AdamConfig{});
    REQUIRE(ps.at("w").value[0] == 2.0);
    REQUIRE(ps.at("w").value[1] == -1.0);
    REQUIRE(ps.at("w").adam_m[0] == 0.0);
}

TEST_CASE("adam runs are bitwise reproducible") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        ParameterSet ps;
        ps.add("w", xavier_uniform(4, 4, rng));
        for (int step = 0; step < 5; ++step) {
            for (double& g : ps.at("w").grad.data()) g = rng.uniform(-1, 1);
            clip_gradients(ps, 5.0);
            adam_update(ps, AdamConfig{});
        }
        return ps.at("w").value;
    };
    Tensor a = run(11), b = run(11);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
}

TEST_CASE("gradient clipping by global norm") {
    ParameterSet ps;
    ps.add("a", Tensor::from_vector({6.0, 0.0}));
    ps.add("b", Tensor::from_vector({0.0, 8.0}));
    ps.at("a").grad = Tensor::from_vector({6.0, 0.0});
    ps.at("b").grad = Tensor::from_vector({0.0, 8.0});
    // global norm 10 vs threshold 5: every gradient halved
    clip_gradients(ps, 5.0);
    REQUIRE(ps.at("a").grad[0] == Catch::Approx(3.0));
    REQUIRE(ps.at("b").grad[1] == Catch::Approx(4.0));

    // below threshold: unchanged
    ps.at("a").grad = Tensor::from_vector({1.0, 0.0});
    ps.at("b").grad = Tensor::from_vector({0.0, 2.0});
    clip_gradients(ps, 5.0);
    REQUIRE(ps.at("a").grad[0] == 1.0);
    REQUIRE(ps.at("b").grad[1] == 2.0);
}

TEST_CASE("clip post-norm equals min(original, threshold); idempotent") {
    Rng rng(5);
    ParameterSet ps;
    ps.add("w", Tensor::zeros({32}));
    for (int rep = 0; rep < 20; ++rep) {
        for (double& g : ps.at("w").grad.data()) g = rng.uniform(-3, 3);
        double before = ps.gradient_norm();
        double threshold = rng.uniform(0.5, 12.0);
        clip_gradients(ps, threshold);
        double after = ps.gradient_norm();
        REQUIRE(after == Catch::Approx(std::min(before, threshold)).margin(1e-9));
        Tensor once = ps.at("w").grad;
        clip_gradients(ps, threshold);
        for (std::size_t i = 0; i < once.size(); ++i) {
            REQUIRE(ps.at("w").grad[i] == Catch::Approx(once[i]).margin(1e-12));
        }
    }
}

TEST_CASE("dropout contract") {
    Rng rng(1);
    Tensor in = Tensor::from_vector({1.0, 2.0, 3.0});
    Tensor same = dropout(in, 0.5, false, rng);
    for (std::size_t i = 0; i < in.size(); ++i) REQUIRE(same[i] == in[i]);
    same = dropout(in, 0.0, true, rng);
    for (std::size_t i = 0; i < in.size(); ++i) REQUIRE(same[i] == in[i]);
    REQUIRE_THROWS_AS(dropout(in, 1.0, true, rng), ConfigError);
    REQUIRE_THROWS_AS(dropout(in, -0.1, true, rng), ConfigError);

    // law of large numbers: mean preserved within 1%
    Tensor big = Tensor::zeros({1000000});
    big.fill(1.0);
    Tensor out = dropout(big, 0.5, true, rng);
    double mean = 0.0;
    for (double x : out.data()) mean += x;
    mean /= static_cast<double>(out.size());
    REQUIRE(mean > 0.99);
    REQUIRE(mean < 1.01);
}

TEST_CASE("softmax properties: normalization, positivity, shift invariance") {
    Rng rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        Tensor logits = random_tensor({7}, rng, 4.0);
        Tape t;
        Tensor p = t.value(t.softmax(t.input(logits)));
        double sum = 0.0;
        for (double x : p.data()) {
            REQUIRE(x > 0.0);
            sum += x;
        }
        REQUIRE(std::fabs(sum - 1.0) < 1e-9);

        Tensor shifted = logits;
        for (double& x : shifted.data()) x += 3.25;
        Tape t2;
        Tensor q = t2.value(t2.softmax(t2.input(shifted)));
        for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(std::fabs(p[i] - q[i]) < 1e-9);
    }
}

TEST_CASE("lstm_step zero parameters and saturated forget gate") {
    Rng rng(2);
    std::size_t H = 4, in_w = 3;
    ParameterSet ps;
    ps.add("l.wx", Tensor::zeros({4 * H, in_w}));
    ps.add("l.wh", Tensor::zeros({4 * H, H}));
    ps.add("l.b", Tensor::zeros({4 * H}));

    RecurrentState prev = RecurrentState::zeros(H);
    Tensor x = random_tensor({in_w}, rng);
    RecurrentState out = lstm_step(ps, "l", prev, x);
    for (std::size_t i = 0; i < H; ++i) {
        REQUIRE(out.cell[i] == 0.0);
        REQUIRE(out.hidden[i] == 0.0);
    }

    // forget-gate bias +20 preserves the cell; hidden = 0.5*tanh(c)
    for (std::size_t i = H; i < 2 * H; ++i) ps.at("l.b").value[i] = 20.0;
    prev.cell = Tensor::from_vector({0.3, -1.2, 0.0, 2.0});
    out = lstm_step(ps, "l", prev, x);
    for (std::size_t i = 0; i < H; ++i) {
        REQUIRE(out.cell[i] == Catch::Approx(prev.cell[i]).margin(1e-8));
        REQUIRE(out.hidden[i] == Catch::Approx(0.5 * std::tanh(out.cell[i])).margin(1e-12));
    }
}

TEST_CASE("lstm_step matches independent gate-equation reference") {
    Rng rng(3);
    std::size_t H = 8, in_w = 8;
    ParameterSet ps;
    init_lstm(ps, "l", in_w, H, rng);
    RecurrentState prev{random_tensor({H}, rng), random_tensor({H}, rng)};
    Tensor x = random_tensor({in_w}, rng);

    RecurrentState got = lstm_step(ps, "l", prev, x);
    RecurrentState want = lstm_reference(ps.at("l.wx").value, ps.at("l.wh").value,
                                         ps.at("l.b").value, prev, x);
    for (std::size_t i = 0; i < H; ++i) {
        REQUIRE(got.hidden[i] == Catch::Approx(want.hidden[i]).margin(1e-12));
        REQUIRE(got.cell[i] == Catch::Approx(want.cell[i]).margin(1e-12));
    }

    // shape mismatch is a dimension error naming the offending tensor
    Tensor bad = random_tensor({in_w + 1}, rng);
    REQUIRE_THROWS_AS(lstm_step(ps, "l", prev, bad), DimensionError);
}

TEST_CASE("mlp_forward trivial and oracle cases") {
    // zero weights, softmax: uniform
    ParameterSet ps;
    ps.add("m.w1", Tensor::zeros({3, 4}));
    ps.add("m.b1", Tensor::zeros({3}));
    ps.add("m.w2", Tensor::zeros({5, 3}));
    ps.add("m.b2", Tensor::zeros({5}));
    Tensor in = Tensor::from_vector({1.0, -2.0, 0.5, 3.0});
    Tensor out = mlp_forward(ps, "m", in, Activation::kSoftmax);
    for (double x : out.data()) REQUIRE(x == Catch::Approx(0.2).margin(1e-12));

    // zero weights, sigmoid scalar head: 0.5
    ParameterSet ps2;
    ps2.add("m.w1", Tensor::zeros({3, 4}));
    ps2.add("m.b1", Tensor::zeros({3}));
    ps2.add("m.w2", Tensor::zeros({1, 3}));
    ps2.add("m.b2", Tensor::zeros({1}));
    Tensor s = mlp_forward(ps2, "m", in, Activation::kSigmoid);
    REQUIRE(s[0] == Catch::Approx(0.5).margin(1e-12));

    // random 4 -> 3 -> 2 net against independent matrix arithmetic
    Rng rng(17);
    ParameterSet ps3;
    init_mlp(ps3, "m", 4, 3, 2, rng);
    Tensor x = random_tensor({4}, rng);
    Tensor y = mlp_forward(ps3, "m", x, Activation::kLinear);

    const Tensor& w1 = ps3.at("m.w1").value;
    const Tensor& b1 = ps3.at("m.b1").value;
    const Tensor& w2 = ps3.at("m.w2").value;
    const Tensor& b2 = ps3.at("m.b2").value;
    std::vector<double> h(3);
    for (std::size_t i = 0; i < 3; ++i) {
        double acc = b1[i];
        for (std::size_t j = 0; j < 4; ++j) acc += w1.at(i, j) * x[j];
        h[i] = std::tanh(acc);
    }
    for (std::size_t i = 0; i < 2; ++i) {
        double acc = b2[i];
        for (std::size_t j = 0; j < 3; ++j) acc += w2.at(i, j) * h[j];
        REQUIRE(y[i] == Catch::Approx(acc).margin(1e-12));
    }
}

TEST_CASE("backward: sum of a parameter gives all-ones gradient") {
    ParameterSet ps;
    ps.add("w", Tensor::from_vector({1.0, 2.0, 3.0}));
    Tape t;
    t.backward(t.sum(t.param(ps, "w")));
    for (double g : ps.at("w").grad.data()) REQUIRE(g == 1.0);
}

TEST_CASE("backward: batch gradient equals sum of single-example gradients") {
    Rng rng(23);
    ParameterSet ps;
    init_mlp(ps, "m", 5, 4, 3, rng);
    Tensor x1 = random_tensor({5}, rng), x2 = random_tensor({5}, rng);

    auto example_loss = [&](Tape& t, const Tensor& x) {
        auto y = mlp_forward(t, ps, "m", t.input(x), Activation::kSoftmax);
        return t.sum(t.mul(y, y));
    };

    ps.zero_gradients();
    {
        Tape t;
        t.backward(example_loss(t, x1));
    }
    {
        Tape t;
        t.backward(example_loss(t, x2));
    }
    std::map<std::string, Tensor> summed;
    for (auto& [name, e] : ps.entries()) summed.emplace(name, e.grad);

    ps.zero_gradients();
    {
        Tape t;
        t.backward(t.add(example_loss(t, x1), example_loss(t, x2)));
    }
    for (auto& [name, e] : ps.entries()) {
        for (std::size_t i = 0; i < e.grad.size(); ++i) {
            REQUIRE(std::fabs(e.grad[i] - summed.at(name)[i]) < 1e-10);
        }
    }
    ps.zero_gradients();
}

TEST_CASE("backward: non-finite loss raises a numeric error") {
    ParameterSet ps;
    ps.add("w", Tensor::scalar(1e308));
    Tape t;
    auto y = t.mul(t.param(ps, "w"), t.param(ps, "w"));  // overflows to inf
    REQUIRE_THROWS_AS(t.backward(y), NumericError);
}

TEST_CASE("backward: non-scalar loss rejected") {
    ParameterSet ps;
    ps.add("w", Tensor::from_vector({1.0, 2.0}));
    Tape t;
    REQUIRE_THROWS_AS(t.backward(t.param(ps, "w")), DimensionError);
}

TEST_CASE("check_gradients: exact linear model") {
    ParameterSet ps;
    ps.add("w", Tensor::from_vector({0.7, -1.3}));
    Tensor x = Tensor::from_vector({2.0, 0.5});
    auto build = [&](Tape& t) {
        auto y = t.sum(t.mul(t.param(ps, "w"), t.input(x)));
        return t.mul(y, y);
    };
    auto report = check_gradients(build, ps, 1e-4);
    REQUIRE(report.passed());
    REQUIRE(report.max_rel_err < 1e-9);
}

TEST_CASE("check_gradients: mlp and lstm at rtol 1e-4") {
    Rng rng(31);
    ParameterSet ps;
    init_mlp(ps, "m", 6, 5, 4, rng);
    init_lstm(ps, "l", 6, 5, rng);
    Tensor x = random_tensor({6}, rng);
    Tensor h0 = random_tensor({5}, rng), c0 = random_tensor({5}, rng);

    auto build = [&](Tape& t) {
        auto p = mlp_forward(t, ps, "m", t.input(x), Activation::kSoftmax);
        auto r = lstm_step(t, ps, "l", t.input(h0), t.input(c0), t.input(x));
        auto r2 = lstm_step(t, ps, "l", r.hidden, r.cell, t.input(x));
        return t.add(t.pick_log_softmax(p, 1), t.sum(t.mul(r2.hidden, r2.hidden)));
    };
    auto report = check_gradients(build, ps, 1e-4);
    INFO("max rel err " << report.max_rel_err);
    REQUIRE(report.passed());
}

TEST_CASE("check_gradients: corrupted analytic gradient is caught") {
    ParameterSet ps;
    ps.add("w", Tensor::from_vector({0.4, 1.1}));
    Tensor x = Tensor::from_vector({1.0, -2.0});
    int calls = 0;
    auto build = [&](Tape& t) {
        auto y = t.sum(t.mul(t.param(ps, "w"), t.input(x)));
        auto loss = t.mul(y, y);
        // First call feeds the backward pass a doubled loss, emulating a
        // backward implementation whose gradients are off by a factor of 2.
        if (calls++ == 0) return t.scale(loss, 2.0);
        return loss;
    };
    auto report = check_gradients(build, ps, 1e-4);
    REQUIRE_FALSE(report.passed());
}

TEST_CASE("tape ops cover pooling and losses used by the models") {
    Rng rng(41);
    // max over explicit vectors
    Tape t;
    auto a = t.input(Tensor::from_vector({1.0, -2.0}));
    auto b = t.input(Tensor::from_vector({0.0, 5.0}));
    Tensor mx = t.value(t.max_list({a, b}));
    REQUIRE(mx[0] == 1.0);
    REQUIRE(mx[1] == 5.0);

    // bce matches -log sigmoid at both labels
    Tape t2;
    auto z = t2.input(Tensor::scalar(0.7));
    double lp = t2.value(t2.bce_with_logits(z, 1.0))[0];
    double ln = t2.value(t2.bce_with_logits(z, 0.0))[0];
    double p = 1.0 / (1.0 + std::exp(-0.7));
    REQUIRE(lp == Catch::Approx(-std::log(p)).margin(1e-12));
    REQUIRE(ln == Catch::Approx(-std::log(1.0 - p)).margin(1e-12));

    // weighted_sum with one-hot weights selects a single vector
    Tape t3;
    auto h1 = t3.input(random_tensor({3}, rng));
    auto h2 = t3.input(random_tensor({3}, rng));
    auto w = t3.input(Tensor::from_vector({0.0, 1.0}));
    Tensor sel = t3.value(t3.weighted_sum({h1, h2}, w));
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(sel[i] == t3.value(h2)[i]);
}
