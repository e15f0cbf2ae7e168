#include <doctest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "gaitscore/errors.hpp"
#include "gaitscore/kernels.hpp"
#include "gaitscore/rng.hpp"

using namespace gaitscore;
using oracle::dvec;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t[i] = static_cast<float>(uniform_range(rng, lo, hi));
    }
    return t;
}

}  // namespace

TEST_CASE("conv1d forward hand-evaluated cases") {
    // [[1,2,3]] * [[[1,0,-1]]] -> [[-2]]
    Tensor input({1, 3}, {1, 2, 3});
    Tensor weight({1, 1, 3}, {1, 0, -1});
    Tensor bias({1}, {0});
    Tensor out = conv1d_forward(input, weight, bias, 1, 0);
    REQUIRE(out.shape() == std::vector<std::size_t>{1, 1});
    CHECK(out[0] == doctest::Approx(-2.0f));

    // identity kernel K=1
    Tensor id_w({1, 1, 1}, {1});
    Tensor id_out = conv1d_forward(input, id_w, bias, 1, 0);
    REQUIRE(id_out.shape() == std::vector<std::size_t>{1, 3});
    CHECK(id_out[0] == 1.0f);
    CHECK(id_out[1] == 2.0f);
    CHECK(id_out[2] == 3.0f);
}

TEST_CASE("conv1d output shape formula") {
    Rng rng = make_rng(11);
    Tensor input = random_tensor({51, 32}, rng);
    Tensor weight = random_tensor({64, 51, 3}, rng);
    Tensor bias = random_tensor({64}, rng);
    Tensor out = conv1d_forward(input, weight, bias, 1, 1);
    CHECK(out.shape() == std::vector<std::size_t>{64, 32});

    // strided variants
    CHECK(conv1d_forward(input, weight, bias, 2, 1).shape() == std::vector<std::size_t>{64, 16});
    CHECK(conv1d_forward(input, weight, bias, 3, 1).shape() == std::vector<std::size_t>{64, 11});
}

TEST_CASE("conv1d with K=1 identity weight is the identity map") {
    Rng rng = make_rng(12);
    const std::size_t c = 4, L = 9;
    Tensor input = random_tensor({c, L}, rng);
    Tensor weight({c, c, 1});
    for (std::size_t i = 0; i < c; ++i) weight.at(i, i, 0) = 1.0f;
    Tensor bias({c});
    Tensor out = conv1d_forward(input, weight, bias, 1, 0);
    CHECK(out == input);
}

TEST_CASE("conv1d rejects mismatched shapes with a diagnostic") {
    Tensor input({2, 5});
    Tensor weight({3, 4, 3});  // wants 4 input channels, input has 2
    Tensor bias({3});
    CHECK_THROWS_AS(conv1d_forward(input, weight, bias, 1, 1), ShapeError);
    CHECK_THROWS_WITH_AS(conv1d_forward(input, weight, bias, 1, 1),
                         doctest::Contains("input channels"), ShapeError);

    Tensor short_input({1, 2});
    Tensor k3({1, 1, 3});
    Tensor b1({1});
    CHECK_THROWS_AS(conv1d_forward(short_input, k3, b1, 1, 0), ShapeError);

    // grad_out shape must match the forward output shape
    Tensor ok_in({1, 5});
    Tensor bad_grad({1, 9});
    CHECK_THROWS_AS(conv1d_backward(bad_grad, ok_in, k3, 1, 0), ShapeError);
}

TEST_CASE("conv1d backward single-tap chain rule") {
    Tensor input({1, 3}, {1, 2, 3});
    Tensor weight({1, 1, 3}, {1, 0, -1});
    Tensor grad_out({1, 1}, {1});
    Conv1dGrads g = conv1d_backward(grad_out, input, weight, 1, 0);
    CHECK(g.grad_weight[0] == doctest::Approx(1.0f));
    CHECK(g.grad_weight[1] == doctest::Approx(2.0f));
    CHECK(g.grad_weight[2] == doctest::Approx(3.0f));
    CHECK(g.grad_bias[0] == doctest::Approx(1.0f));
}

TEST_CASE("conv1d grad_bias equals per-channel sum of grad_out") {
    Rng rng = make_rng(13);
    for (int inst = 0; inst < 5; ++inst) {
        Tensor input = random_tensor({3, 10}, rng);
        Tensor weight = random_tensor({4, 3, 3}, rng);
        Tensor grad_out = random_tensor({4, 10}, rng);
        Conv1dGrads g = conv1d_backward(grad_out, input, weight, 1, 1);
        for (std::size_t c = 0; c < 4; ++c) {
            double sum = 0.0;
            for (std::size_t t = 0; t < 10; ++t) sum += static_cast<double>(grad_out.at(c, t));
            CHECK(g.grad_bias[c] == doctest::Approx(sum).epsilon(1e-5));
        }
    }
}

TEST_CASE("conv1d backward matches the finite-difference oracle") {
    Rng rng = make_rng(101);
    int instances = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t c_in = 1 + static_cast<std::size_t>(uniform_index(rng, 4));
        const std::size_t c_out = 1 + static_cast<std::size_t>(uniform_index(rng, 4));
        const std::size_t K = 1 + static_cast<std::size_t>(uniform_index(rng, 3));
        const std::size_t stride = 1 + static_cast<std::size_t>(uniform_index(rng, 2));
        const std::size_t padding = static_cast<std::size_t>(uniform_index(rng, 2));
        const std::size_t L = K + 3 + static_cast<std::size_t>(uniform_index(rng, 6));

        Tensor input = random_tensor({c_in, L}, rng);
        Tensor weight = random_tensor({c_out, c_in, K}, rng);
        Tensor bias = random_tensor({c_out}, rng);
        Tensor out = conv1d_forward(input, weight, bias, stride, padding);
        Tensor grad_out = random_tensor(out.shape(), rng);
        Conv1dGrads g = conv1d_backward(grad_out, input, weight, stride, padding);

        const dvec go = oracle::to_dvec(grad_out);
        auto weighted_sum = [&](const dvec& conv_out) {
            double acc = 0.0;
            for (std::size_t i = 0; i < conv_out.size(); ++i) acc += go[i] * conv_out[i];
            return acc;
        };
        const dvec in_d = oracle::to_dvec(input);
        const dvec w_d = oracle::to_dvec(weight);
        const dvec b_d = oracle::to_dvec(bias);

        dvec fd_w = oracle::fd_gradient(
            [&](const dvec& w) {
                return weighted_sum(oracle::conv1d_ref(in_d, c_in, L, w, c_out, K, b_d, stride, padding));
            },
            w_d);
        dvec fd_in = oracle::fd_gradient(
            [&](const dvec& x) {
                return weighted_sum(oracle::conv1d_ref(x, c_in, L, w_d, c_out, K, b_d, stride, padding));
            },
            in_d);
        dvec fd_b = oracle::fd_gradient(
            [&](const dvec& b) {
                return weighted_sum(oracle::conv1d_ref(in_d, c_in, L, w_d, c_out, K, b, stride, padding));
            },
            b_d);

        CHECK(oracle::rel_error(fd_w, oracle::to_dvec(g.grad_weight)) < 1e-3);
        CHECK(oracle::rel_error(fd_in, oracle::to_dvec(g.grad_input)) < 1e-3);
        CHECK(oracle::rel_error(fd_b, oracle::to_dvec(g.grad_bias)) < 1e-3);
        ++instances;
    }
    CHECK(instances == 20);
}

TEST_CASE("conv1d backward 8x51x3 case matches finite differences") {
    Rng rng = make_rng(102);
    Tensor input = random_tensor({51, 16}, rng);
    Tensor weight = random_tensor({8, 51, 3}, rng, -0.2, 0.2);
    Tensor bias = random_tensor({8}, rng);
    Tensor out = conv1d_forward(input, weight, bias, 1, 1);
    Tensor grad_out = random_tensor(out.shape(), rng);
    Conv1dGrads g = conv1d_backward(grad_out, input, weight, 1, 1);

    const dvec go = oracle::to_dvec(grad_out);
    const dvec in_d = oracle::to_dvec(input);
    const dvec b_d = oracle::to_dvec(bias);
    dvec fd_w = oracle::fd_gradient(
        [&](const dvec& w) {
            dvec o = oracle::conv1d_ref(in_d, 51, 16, w, 8, 3, b_d, 1, 1);
            double acc = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) acc += go[i] * o[i];
            return acc;
        },
        oracle::to_dvec(weight));
    CHECK(oracle::rel_error(fd_w, oracle::to_dvec(g.grad_weight)) < 1e-3);
}

TEST_CASE("linear forward examples") {
    Tensor input({1, 2}, {1, 0});
    Tensor weight({2, 2}, {2, 3, 4, 5});
    Tensor bias({2}, {0, 0});
    Tensor out = linear_forward(input, weight, bias);
    CHECK(out.at(0, 0) == doctest::Approx(2.0f));
    CHECK(out.at(0, 1) == doctest::Approx(4.0f));

    // identity weight, zero bias
    Rng rng = make_rng(14);
    Tensor x = random_tensor({3, 4}, rng);
    Tensor id({4, 4});
    for (std::size_t i = 0; i < 4; ++i) id.at(i, i) = 1.0f;
    Tensor zb({4});
    CHECK(linear_forward(x, id, zb) == x);

    Tensor bad_w({2, 3});
    CHECK_THROWS_AS(linear_forward(input, bad_w, bias), ShapeError);
}

TEST_CASE("linear backward matches the finite-difference oracle") {
    Rng rng = make_rng(103);
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t n = 1 + static_cast<std::size_t>(uniform_index(rng, 5));
        const std::size_t d_in = 1 + static_cast<std::size_t>(uniform_index(rng, 8));
        const std::size_t d_out = 1 + static_cast<std::size_t>(uniform_index(rng, 4));
        Tensor input = random_tensor({n, d_in}, rng);
        Tensor weight = random_tensor({d_out, d_in}, rng);
        Tensor bias = random_tensor({d_out}, rng);
        Tensor grad_out = random_tensor({n, d_out}, rng);
        LinearGrads g = linear_backward(grad_out, input, weight);

        const dvec go = oracle::to_dvec(grad_out);
        const dvec in_d = oracle::to_dvec(input);
        const dvec w_d = oracle::to_dvec(weight);
        const dvec b_d = oracle::to_dvec(bias);
        auto weighted = [&](const dvec& out) {
            double acc = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) acc += go[i] * out[i];
            return acc;
        };
        dvec fd_in = oracle::fd_gradient(
            [&](const dvec& x) { return weighted(oracle::linear_ref(x, n, d_in, w_d, d_out, b_d)); },
            in_d);
        dvec fd_w = oracle::fd_gradient(
            [&](const dvec& w) { return weighted(oracle::linear_ref(in_d, n, d_in, w, d_out, b_d)); },
            w_d);
        dvec fd_b = oracle::fd_gradient(
            [&](const dvec& b) { return weighted(oracle::linear_ref(in_d, n, d_in, w_d, d_out, b)); },
            b_d);
        CHECK(oracle::rel_error(fd_in, oracle::to_dvec(g.grad_input)) < 1e-3);
        CHECK(oracle::rel_error(fd_w, oracle::to_dvec(g.grad_weight)) < 1e-3);
        CHECK(oracle::rel_error(fd_b, oracle::to_dvec(g.grad_bias)) < 1e-3);
    }
}

TEST_CASE("linear backward on the spec's 4x8->2 case") {
    Rng rng = make_rng(104);
    Tensor input = random_tensor({4, 8}, rng);
    Tensor weight = random_tensor({2, 8}, rng);
    Tensor grad_out = random_tensor({4, 2}, rng);
    LinearGrads g = linear_backward(grad_out, input, weight);
    const dvec go = oracle::to_dvec(grad_out);
    const dvec in_d = oracle::to_dvec(input);
    dvec zeros(2, 0.0);
    dvec fd_w = oracle::fd_gradient(
        [&](const dvec& w) {
            dvec o = oracle::linear_ref(in_d, 4, 8, w, 2, zeros);
            double acc = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) acc += go[i] * o[i];
            return acc;
        },
        oracle::to_dvec(weight));
    CHECK(oracle::rel_error(fd_w, oracle::to_dvec(g.grad_weight)) < 1e-3);
}

TEST_CASE("relu forward, backward and idempotence") {
    Tensor x({3}, {-1, 0, 2});
    Tensor y = relu_forward(x);
    CHECK(y[0] == 0.0f);
    CHECK(y[1] == 0.0f);
    CHECK(y[2] == 2.0f);

    Tensor grad({3}, {5, 5, 5});
    Tensor gx = relu_backward(grad, x);
    CHECK(gx[0] == 0.0f);
    CHECK(gx[1] == 0.0f);  // subgradient 0 at exactly 0
    CHECK(gx[2] == 5.0f);

    Rng rng = make_rng(15);
    Tensor r = random_tensor({4, 7}, rng, -2.0, 2.0);
    CHECK(relu_forward(relu_forward(r)) == relu_forward(r));
}

TEST_CASE("relu backward matches finite differences away from the kink") {
    Rng rng = make_rng(105);
    for (int inst = 0; inst < 20; ++inst) {
        Tensor x({12});
        for (std::size_t i = 0; i < x.numel(); ++i) {
            // keep |x| > 0.05 so the central difference straddles no kink
            double v = uniform_range(rng, 0.05, 1.0);
            if (uniform01(rng) < 0.5) v = -v;
            x[i] = static_cast<float>(v);
        }
        Tensor grad_out({12});
        for (std::size_t i = 0; i < 12; ++i) {
            grad_out[i] = static_cast<float>(uniform_range(rng, -1.0, 1.0));
        }
        Tensor g = relu_backward(grad_out, x);

        const dvec go = oracle::to_dvec(grad_out);
        dvec fd = oracle::fd_gradient(
            [&](const dvec& v) {
                dvec y = oracle::relu_ref(v);
                double acc = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) acc += go[i] * y[i];
                return acc;
            },
            oracle::to_dvec(x));
        CHECK(oracle::rel_error(fd, oracle::to_dvec(g)) < 1e-3);
    }
}

TEST_CASE("global average pool examples") {
    Tensor x({1, 2}, {2, 4});
    Tensor y = global_avg_pool_forward(x);
    CHECK(y[0] == doctest::Approx(3.0f));

    // L = 1 is the identity per channel
    Tensor one({3, 1}, {5, -1, 0.5f});
    Tensor oy = global_avg_pool_forward(one);
    CHECK(oy[0] == 5.0f);
    CHECK(oy[1] == -1.0f);
    CHECK(oy[2] == 0.5f);

    Tensor grad({1}, {6});
    Tensor gx = global_avg_pool_backward(grad, 3);
    CHECK(gx.at(0, 0) == doctest::Approx(2.0f));
    CHECK(gx.at(0, 1) == doctest::Approx(2.0f));
    CHECK(gx.at(0, 2) == doctest::Approx(2.0f));
}

TEST_CASE("global average pool backward matches finite differences") {
    Rng rng = make_rng(106);
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t c = 1 + static_cast<std::size_t>(uniform_index(rng, 5));
        const std::size_t L = 1 + static_cast<std::size_t>(uniform_index(rng, 9));
        Tensor x = random_tensor({c, L}, rng);
        Tensor grad_out = random_tensor({c}, rng);
        Tensor g = global_avg_pool_backward(grad_out, L);
        const dvec go = oracle::to_dvec(grad_out);
        dvec fd = oracle::fd_gradient(
            [&](const dvec& v) {
                dvec y = oracle::gap_ref(v, c, L);
                double acc = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) acc += go[i] * y[i];
                return acc;
            },
            oracle::to_dvec(x));
        CHECK(oracle::rel_error(fd, oracle::to_dvec(g)) < 1e-3);
    }
}

TEST_CASE("softmax cross entropy examples and stabilization") {
    Tensor logits({1, 2}, {0, 0});
    SoftmaxCrossEntropy r = softmax_cross_entropy(logits, {0});
    CHECK(r.mean_loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    Tensor big({1, 2}, {1000, 0});
    SoftmaxCrossEntropy rb = softmax_cross_entropy(big, {0});
    CHECK(std::isfinite(rb.mean_loss));
    CHECK(rb.mean_loss == doctest::Approx(0.0).epsilon(1e-6));

    CHECK_THROWS_AS(softmax_cross_entropy(logits, {2}), InvalidDatasetError);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1}), InvalidDatasetError);
}

TEST_CASE("softmax cross entropy loss is nonnegative and ln C for uniform logits") {
    for (std::size_t c : {2ul, 3ul, 5ul, 9ul}) {
        Tensor logits({2, c}, std::vector<float>(2 * c, 0.7f));
        SoftmaxCrossEntropy r = softmax_cross_entropy(logits, {0, static_cast<int>(c - 1)});
        CHECK(r.mean_loss == doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-6));
    }
    Rng rng = make_rng(16);
    for (int inst = 0; inst < 10; ++inst) {
        Tensor logits = random_tensor({3, 4}, rng, -3.0, 3.0);
        SoftmaxCrossEntropy r = softmax_cross_entropy(logits, {0, 1, 2});
        CHECK(r.mean_loss >= 0.0f);
    }
}

TEST_CASE("softmax cross entropy gradient matches finite differences") {
    Rng rng = make_rng(107);
    for (int inst = 0; inst < 20; ++inst) {
        const std::size_t n = 4, c = 2;
        Tensor logits = random_tensor({n, c}, rng, -2.0, 2.0);
        std::vector<int> targets(n);
        for (auto& t : targets) t = static_cast<int>(uniform_index(rng, c));
        SoftmaxCrossEntropy r = softmax_cross_entropy(logits, targets);
        dvec fd = oracle::fd_gradient(
            [&](const dvec& v) { return oracle::softmax_ce_ref(v, n, c, targets); },
            oracle::to_dvec(logits));
        CHECK(oracle::rel_error(fd, oracle::to_dvec(r.grad_logits)) < 1e-3);
    }
}

TEST_CASE("l2 normalize and cosine similarity") {
    Tensor a({2}, {1, 0});
    Tensor b({2}, {0, 1});
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));

    Rng rng = make_rng(17);
    for (int inst = 0; inst < 10; ++inst) {
        Tensor v = random_tensor({8}, rng);
        CHECK(cosine_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-6));
    }

    Tensor u({2}, {3, 4});
    Tensor u10({2}, {30, 40});
    CHECK(cosine_similarity(u, u10) == doctest::Approx(1.0).epsilon(1e-6));

    // norm stays 1 for inputs spanning 1e-6 .. 1e6
    for (double mag : {1e-6, 1e-3, 1.0, 1e3, 1e6}) {
        Tensor v({3}, {static_cast<float>(mag), static_cast<float>(-0.5 * mag),
                       static_cast<float>(0.25 * mag)});
        Tensor n = l2_normalize(v);
        double norm = 0.0;
        for (std::size_t i = 0; i < n.numel(); ++i) norm += static_cast<double>(n[i]) * n[i];
        CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);
    }

    Tensor zero({2});
    CHECK_THROWS_AS(l2_normalize(zero), NumericError);
    CHECK_THROWS_WITH_AS(l2_normalize(zero), doctest::Contains("degenerate"), NumericError);
    CHECK_THROWS_AS(cosine_similarity(zero, a), NumericError);
}

TEST_CASE("l2 normalize backward matches finite differences") {
    Rng rng = make_rng(108);
    for (int inst = 0; inst < 20; ++inst) {
        Tensor x = random_tensor({6}, rng, 0.2, 1.0);
        Tensor grad_out = random_tensor({6}, rng);
        Tensor g = l2_normalize_backward(grad_out, x);
        const dvec go = oracle::to_dvec(grad_out);
        dvec fd = oracle::fd_gradient(
            [&](const dvec& v) {
                double norm = 0.0;
                for (double d : v) norm += d * d;
                norm = std::sqrt(norm);
                double acc = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) acc += go[i] * v[i] / norm;
                return acc;
            },
            oracle::to_dvec(x));
        CHECK(oracle::rel_error(fd, oracle::to_dvec(g)) < 1e-3);
    }
}

TEST_CASE("kernels keep finite inputs finite") {
    Rng rng = make_rng(18);
    Tensor input = random_tensor({8, 20}, rng, -10.0, 10.0);
    Tensor weight = random_tensor({4, 8, 3}, rng, -2.0, 2.0);
    Tensor bias = random_tensor({4}, rng, -5.0, 5.0);
    Tensor out = conv1d_forward(input, weight, bias, 2, 1);
    CHECK(out.all_finite());
    CHECK(relu_forward(out).all_finite());
    CHECK(global_avg_pool_forward(out).all_finite());
}
