#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "propnet/common.hpp"
#include "propnet/nncore/checkpoint.hpp"
#include "propnet/nncore/gradcheck.hpp"
#include "propnet/nncore/ops.hpp"
#include "propnet/nncore/optimizer.hpp"
#include "propnet/nncore/tape.hpp"

using namespace propnet;
using namespace propnet::nncore;

namespace {

NumArray random_array(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    return random_uniform(std::move(shape), lo, hi, rng);
}

}  // namespace

TEST_CASE("linear_forward identity and hand sums") {
    NumArray x = NumArray::matrix(1, 2, {1, 2});
    NumArray w = NumArray::matrix(2, 2, {1, 0, 0, 1});
    NumArray b = NumArray::vector({0, 0});
    NumArray out = linear_forward(x, w, b);
    CHECK(out.at(0, 0) == doctest::Approx(1.0));
    CHECK(out.at(0, 1) == doctest::Approx(2.0));

    NumArray x2 = NumArray::matrix(1, 2, {1, 1});
    NumArray w2 = NumArray::matrix(2, 1, {2, 3});
    NumArray b2 = NumArray::vector({1});
    CHECK(linear_forward(x2, w2, b2).at(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("linear_forward matches naive oracle") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        NumArray x = random_array({3, 4}, rng);
        NumArray w = random_array({4, 2}, rng);
        NumArray b = random_array({2}, rng);
        NumArray got = linear_forward(x, w, b);
        NumArray want = oracles::naive_linear(x, w, b);
        for (std::size_t i = 0; i < got.numel(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("linear_forward shape mismatch names both shapes") {
    NumArray x = NumArray::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    NumArray w = NumArray::matrix(2, 2, {1, 0, 0, 1});
    NumArray b = NumArray::vector({0, 0});
    try {
        linear_forward(x, w, b);
        FAIL("expected dimension error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Dimension);
        CHECK(std::string(e.what()).find("[2x3]") != std::string::npos);
        CHECK(std::string(e.what()).find("[2x2]") != std::string::npos);
    }
}

TEST_CASE("softmax analytic cases") {
    NumArray a = softmax(NumArray::vector({0, 0}));
    CHECK(a[0] == doctest::Approx(0.5));
    CHECK(a[1] == doctest::Approx(0.5));

    NumArray b = softmax(NumArray::vector({std::log(2.0), 0}));
    CHECK(b[0] == doctest::Approx(2.0 / 3.0));
    CHECK(b[1] == doctest::Approx(1.0 / 3.0));

    NumArray c = softmax(NumArray::vector({1000, 0}));
    CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.all_finite());

    CHECK_THROWS_AS(softmax(NumArray::vector({})), Error);
}

TEST_CASE("softmax properties over random inputs") {
    Rng rng(23);
    for (int seed = 0; seed < 25; ++seed) {
        std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_index(8));
        NumArray v = random_array({n}, rng, -30.0, 30.0);
        NumArray s = softmax(v);
        double sum = 0.0;
        std::size_t argmax_in = 0, argmax_out = 0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(s[i] >= 0.0);
            sum += s[i];
            if (v[i] > v[argmax_in]) argmax_in = i;
            if (s[i] > s[argmax_out]) argmax_out = i;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        CHECK(argmax_in == argmax_out);
    }
}

TEST_CASE("conv2d_forward basics and oracle") {
    Rng rng(31);
    NumArray zeros4 = NumArray::zeros({4, 4});
    NumArray anyk = random_array({3, 3}, rng);
    NumArray z = conv2d_forward(zeros4, anyk, 0.0);
    for (double v : z.data) CHECK(v == 0.0);
    CHECK(z.shape[0] == 2);

    NumArray ones3 = NumArray::full({3, 3}, 1.0);
    CHECK(conv2d_forward(ones3, ones3, 0.0).at(0, 0) == doctest::Approx(9.0));

    for (int trial = 0; trial < 10; ++trial) {
        NumArray in = random_array({5, 5}, rng);
        NumArray k = random_array({3, 3}, rng);
        double bias = rng.uniform(-0.5, 0.5);
        NumArray got = conv2d_forward(in, k, bias);
        NumArray want = oracles::naive_conv3x3_relu(in, k, bias);
        for (std::size_t i = 0; i < got.numel(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(conv2d_forward(NumArray::zeros({2, 5}), anyk, 0.0), Error);
}

TEST_CASE("global_max_pool value, tie routing, oracle") {
    NumArray m = NumArray::matrix(2, 2, {1, 2, 3, 0});
    CHECK(global_max_pool(m) == doctest::Approx(3.0));

    // all-equal: gradient routes to the first index only
    GradTape tape;
    auto in = tape.input(NumArray::full({2, 3}, 4.0));
    auto pooled = tape.global_max_pool(in);
    tape.backward(pooled);
    CHECK(tape.grad(in)[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < 6; ++i) CHECK(tape.grad(in)[i] == 0.0);

    Rng rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        NumArray r = random_array({4, 4}, rng);
        CHECK(global_max_pool(r) == doctest::Approx(oracles::linear_scan_max(r)));
    }

    CHECK_THROWS_AS(global_max_pool(NumArray::vector({})), Error);
}

TEST_CASE("cross_entropy_loss cases") {
    CHECK(cross_entropy_loss(NumArray::vector({1, 0}), 0) == doctest::Approx(0.0));
    CHECK(cross_entropy_loss(NumArray::vector({0.5, 0.5}), 1) == doctest::Approx(std::log(2.0)));
    CHECK(cross_entropy_loss(NumArray::vector({0, 1}), 0) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(cross_entropy_loss(NumArray::vector({0.5, 0.5}), 2), Error);
}

TEST_CASE("adam_step zero gradient leaves params unchanged") {
    std::vector<NumArray> params = {NumArray::vector({1.0, -2.0})};
    std::vector<NumArray> grads = {NumArray::zeros({2})};
    OptimizerState state = OptimizerState::for_params(params, 0.1);
    adam_step(params, grads, state);
    CHECK(params[0][0] == doctest::Approx(1.0));
    CHECK(params[0][1] == doctest::Approx(-2.0));
}

TEST_CASE("adam_step single step with unit gradient moves by ~lr") {
    // first step bias correction: mhat = g, vhat = g^2, so delta = lr * 1/(1+eps)
    std::vector<NumArray> params = {NumArray::vector({0.5})};
    std::vector<NumArray> grads = {NumArray::vector({1.0})};
    OptimizerState state = OptimizerState::for_params(params, 0.1);
    adam_step(params, grads, state);
    CHECK(params[0][0] == doctest::Approx(0.5 - 0.1).epsilon(1e-6));
}

TEST_CASE("adam_step deterministic") {
    auto run = [] {
        std::vector<NumArray> params = {NumArray::vector({1.0, 2.0, 3.0})};
        std::vector<NumArray> grads = {NumArray::vector({0.3, -0.7, 0.1})};
        OptimizerState state = OptimizerState::for_params(params, 0.05);
        for (int i = 0; i < 5; ++i) adam_step(params, grads, state);
        return params[0];
    };
    NumArray a = run(), b = run();
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("grad_check: linear + cross entropy") {
    Rng rng(7);
    NumArray x = random_array({2, 3}, rng);
    auto build = [&x](GradTape& tape, const std::vector<GradTape::Ref>& params) {
        auto xr = tape.constant(x);
        auto z = tape.add_rowvec(tape.matmul(xr, params[0]), params[1]);
        auto p = tape.softmax_rows(z);
        return tape.mean_cross_entropy_rows(p, {0, 1}, {1.0, 1.0});
    };
    std::vector<NumArray> params = {random_array({3, 2}, rng), random_array({2}, rng)};
    auto report = grad_check(build, params);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("grad_check: conv + pool + loss") {
    Rng rng(13);
    NumArray input = random_array({5, 5}, rng);
    auto build = [&input](GradTape& tape, const std::vector<GradTape::Ref>& params) {
        auto in = tape.constant(input);
        auto fm1 = tape.conv2d(in, params[0], params[1]);
        auto fm2 = tape.conv2d(in, params[2], params[3]);
        auto h = tape.stack_rows({tape.global_max_pool(fm1), tape.global_max_pool(fm2)});
        auto logits = tape.add_rowvec(tape.matmul(tape.transpose(h), params[4]), params[5]);
        auto probs = tape.softmax_rows(logits);
        return tape.cross_entropy(probs, 1);
    };
    std::vector<NumArray> params = {random_array({3, 3}, rng), random_array({1}, rng),
                                    random_array({3, 3}, rng), random_array({1}, rng),
                                    random_array({2, 3}, rng), random_array({3}, rng)};
    auto report = grad_check(build, params);
    CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("grad_check flags a corrupted backward rule") {
    Rng rng(17);
    NumArray x = random_array({2, 3}, rng);
    std::vector<NumArray> params = {random_array({3, 2}, rng), random_array({2}, rng)};

    auto loss_fn = [&x](const std::vector<NumArray>& p) {
        GradTape tape;
        auto xr = tape.constant(x);
        auto z = tape.add_rowvec(tape.matmul(xr, tape.input(p[0])), tape.input(p[1]));
        auto probs = tape.softmax_rows(z);
        auto loss = tape.mean_cross_entropy_rows(probs, {0, 1}, {1.0, 1.0});
        return tape.value(loss)[0];
    };
    auto corrupted_grads = [&x](const std::vector<NumArray>& p) {
        GradTape tape;
        auto xr = tape.constant(x);
        auto w = tape.input(p[0]);
        auto b = tape.input(p[1]);
        auto z = tape.add_rowvec(tape.matmul(xr, w), b);
        auto probs = tape.softmax_rows(z);
        auto loss = tape.mean_cross_entropy_rows(probs, {0, 1}, {1.0, 1.0});
        tape.backward(loss);
        std::vector<NumArray> grads = {tape.grad(w), tape.grad(b)};
        for (double& v : grads[0].data) v *= 1.25;  // deliberately wrong scale
        return grads;
    };
    auto report = grad_check(loss_fn, corrupted_grads, params);
    CHECK(report.max_rel_error > 1e-2);
}

TEST_CASE("grad_check rejects non-finite loss") {
    auto loss_fn = [](const std::vector<NumArray>&) { return std::numeric_limits<double>::quiet_NaN(); };
    auto grads_fn = [](const std::vector<NumArray>& p) { return p; };
    std::vector<NumArray> params = {NumArray::vector({1.0})};
    CHECK_THROWS_AS(grad_check(loss_fn, grads_fn, params), Error);
}

TEST_CASE("every differentiable tape op passes grad check on random shapes") {
    Rng rng(101);
    for (int seed = 0; seed < 20; ++seed) {
        std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_index(3));
        std::size_t m = 2 + static_cast<std::size_t>(rng.uniform_index(3));
        NumArray data = random_array({n, m}, rng);
        auto build = [&](GradTape& tape, const std::vector<GradTape::Ref>& params) {
            auto a = params[0];
            auto b = params[1];
            auto prod = tape.matmul(a, tape.transpose(b));          // n x n
            auto mixed = tape.mul(prod, tape.sigmoid(prod));
            auto act = tape.add(tape.tanh(mixed), tape.relu(prod));
            auto cat = tape.concat_cols(act, tape.scale(prod, 0.5));
            auto row = tape.take_row(cat, 0);
            auto soft = tape.softmax_rows(tape.add_rowvec(cat, params[2]));
            auto pooled = tape.global_max_pool(soft);
            auto ce = tape.cross_entropy(tape.softmax_rows(row), 1);
            auto sum = tape.add(pooled, ce);
            return tape.scale(sum, 1.0);
        };
        std::vector<NumArray> params = {random_array({n, m}, rng), random_array({n, m}, rng),
                                        random_array({2 * n}, rng)};
        auto report = grad_check(build, params);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("gather_rows and stack_rows gradients") {
    Rng rng(55);
    auto build = [](GradTape& tape, const std::vector<GradTape::Ref>& params) {
        auto rows = tape.gather_rows(params[0], {0, 2, 0});
        auto probs = tape.softmax_rows(rows);
        return tape.mean_cross_entropy_rows(probs, {0, 1, 2}, {1.0, 0.5, 1.0});
    };
    std::vector<NumArray> params = {random_array({3, 3}, rng)};
    auto report = grad_check(build, params);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("forward ops keep finite outputs on extreme finite inputs") {
    NumArray big = NumArray::matrix(2, 2, {700, -700, 300, -300});
    CHECK(softmax_rows(big).all_finite());
    NumArray kb = NumArray::full({3, 3}, 100.0);
    NumArray inb = NumArray::full({4, 4}, 100.0);
    CHECK(conv2d_forward(inb, kb, 1e6).all_finite());
}

TEST_CASE("checkpoint round trip preserves names, shapes, payload, manifest") {
    Rng rng(77);
    Checkpoint ckpt;
    ckpt.manifest_json = R"({"embed_dim":16,"note":"round trip"})";
    ckpt.add("layer/weight", random_array({4, 3}, rng));
    ckpt.add("layer/bias", random_array({3}, rng));
    const std::string path = "/tmp/propnet_test_ckpt.bin";
    save_checkpoint(ckpt, path);
    Checkpoint back = load_checkpoint(path);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].first == "layer/weight");
    CHECK(back.get("layer/bias").shape == std::vector<std::size_t>{3});
    for (std::size_t i = 0; i < ckpt.get("layer/weight").numel(); ++i)
        CHECK(back.get("layer/weight")[i] == ckpt.get("layer/weight")[i]);
    CHECK(back.manifest_json.find("format_version") != std::string::npos);
    CHECK(back.manifest_json.find("round trip") != std::string::npos);

    CHECK_THROWS_AS(load_checkpoint("/tmp/does_not_exist.ckpt"), Error);
}
