#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <relu_forge/calculus.hpp>
#include <relu_forge/certifier.hpp>
#include <relu_forge/constructors.hpp>

using namespace relu_forge;

namespace {

std::mt19937_64 rng(2024);

Network random_net(int in, int out, int hidden_layers, double scale = 0.6) {
    std::normal_distribution<double> g(0.0, scale);
    std::uniform_int_distribution<int> width(1, 5);
    std::vector<int> arch{in};
    for (int i = 0; i < hidden_layers; ++i) arch.push_back(width(rng));
    arch.push_back(out);
    std::vector<Layer> layers;
    for (std::size_t i = 1; i < arch.size(); ++i) {
        Layer l;
        l.W = Eigen::MatrixXd::NullaryExpr(arch[i], arch[i - 1], [&] { return g(rng); });
        l.b = Eigen::VectorXd::NullaryExpr(arch[i], [&] { return g(rng); });
        layers.push_back(std::move(l));
    }
    return Network(std::move(layers));
}

Eigen::VectorXd rand_vec(int d, double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    return Eigen::VectorXd::NullaryExpr(d, [&] { return u(rng); });
}

} // namespace

TEST_CASE("identity networks are exact and have the promised size") {
    Eigen::VectorXd x(1);
    x << -5.0;
    CHECK(identity_network(1).evaluate(x)[0] == -5.0);

    for (int d : {1, 2, 3, 7, 16}) {
        const Network id = identity_network(d);
        CHECK(id.architecture() == std::vector<int>{d, 2 * d, d});
        CHECK(id.param_count() == 2 * d * (d + 1) + d * (2 * d + 1));
        for (int t = 0; t < 50; ++t) {
            const Eigen::VectorXd v = rand_vec(d, -100.0, 100.0);
            CHECK((id.evaluate(v) - v).lpNorm<Eigen::Infinity>() == 0.0);
        }
    }
}

TEST_CASE("composition applies the outer network to the inner output") {
    // max(x1, x2) after the identity: still the max.
    const Network m = compose(max_net(2), identity_network(2));
    Eigen::VectorXd x(2);
    x << 1.0, 2.0;
    CHECK(m.evaluate(x)[0] == doctest::Approx(2.0).epsilon(1e-9));
    x << -3.0, -7.5;
    CHECK(m.evaluate(x)[0] == doctest::Approx(-3.0).epsilon(1e-9));

    for (int t = 0; t < 30; ++t) {
        const Network inner = random_net(3, 2, 1);
        const Network outer = random_net(2, 2, 2);
        const Network both = compose(outer, inner);
        CHECK(both.input_dim() == 3);
        CHECK(both.output_dim() == 2);
        const Eigen::VectorXd v = rand_vec(3);
        const Eigen::VectorXd want = outer.evaluate(inner.evaluate(v));
        CHECK((both.evaluate(v) - want).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}

TEST_CASE("composition with an approximate square keeps its accuracy") {
    // square(2x) at 0.25 is 0.25; the squaring net is built from the product
    // primitive with both inputs tied together.
    const double eps = 1e-4;
    AffineMap tie;
    tie.A = Eigen::MatrixXd::Ones(2, 1);
    tie.c = Eigen::VectorXd::Zero(2);
    const Network square = affine_wrap(mult2_net(1.0, eps), tie, std::nullopt);
    Layer twice;
    twice.W = Eigen::MatrixXd::Constant(1, 1, 2.0);
    twice.b = Eigen::VectorXd::Zero(1);
    const Network doubled({twice});
    const Network f = compose(square, doubled);
    Eigen::VectorXd x(1);
    x << 0.25;
    CHECK(std::fabs(f.evaluate(x)[0] - 0.25) <= 2 * eps);
}

TEST_CASE("composition size bound holds with zero tolerance") {
    for (int t = 0; t < 50; ++t) {
        std::uniform_int_distribution<int> dim(1, 5), depth(1, 3);
        const int mid = dim(rng);
        const Network inner = random_net(dim(rng), mid, depth(rng) - 1);
        const Network outer = random_net(mid, dim(rng), depth(rng) - 1);
        const Network both = compose(outer, inner);
        CHECK(both.param_count() <= 3 * (outer.param_count() + inner.param_count()));
        CHECK(both.param_count() <=
              compose_param_bound(outer.param_count(), inner.param_count()));
    }
}

TEST_CASE("chains: singleton unchanged, identities collapse, order as written") {
    const Network solo = random_net(3, 2, 2);
    const Network chained = compose_chain({solo});
    CHECK(chained.param_count() == solo.param_count());
    CHECK(chained.depth() == solo.depth());

    const Network ids = compose_chain(
        {identity_network(4), identity_network(4), identity_network(4)});
    for (int t = 0; t < 30; ++t) {
        const Eigen::VectorXd v = rand_vec(4, -50.0, 50.0);
        CHECK((ids.evaluate(v) - v).lpNorm<Eigen::Infinity>() <= 1e-9);
    }

    // stages[0] first: chain(a, b, c) == c(b(a(x))).
    const Network a = random_net(2, 3, 1);
    const Network b = random_net(3, 3, 1);
    const Network c = random_net(3, 1, 1);
    const Network chain3 = compose_chain({a, b, c});
    const Network nested = compose(c, compose(b, a));
    for (int t = 0; t < 50; ++t) {
        const Eigen::VectorXd v = rand_vec(2);
        const double want = c.evaluate(b.evaluate(a.evaluate(v)))[0];
        CHECK(chain3.evaluate(v)[0] == doctest::Approx(want).epsilon(1e-9));
        CHECK(chain3.evaluate(v)[0] == doctest::Approx(nested.evaluate(v)[0]).epsilon(1e-9));
    }
}

TEST_CASE("chain size bound holds for staged pipelines") {
    for (int t = 0; t < 25; ++t) {
        std::uniform_int_distribution<int> dim(1, 4), count(2, 4), depth(1, 3);
        const int n = count(rng);
        std::vector<int> dims(n + 1);
        for (int& d : dims) d = dim(rng);
        std::vector<Network> stages;
        for (int i = 0; i < n; ++i)
            stages.push_back(random_net(dims[i], dims[i + 1], depth(rng) - 1));
        const Network whole = compose_chain(stages);
        CHECK(whole.param_count() <= chain_param_bound(stages));

        // The bound itself is the documented closed form.
        std::int64_t expect = 0;
        for (const Network& s : stages) {
            expect += 6 * static_cast<std::int64_t>(s.output_dim()) * (s.output_dim() + 1);
            expect += 3 * s.param_count();
        }
        CHECK(chain_param_bound(stages) <= expect);
    }
}

TEST_CASE("parallelization concatenates independent blocks") {
    std::vector<Network> nets;
    for (int in : {1, 2, 4, 3}) nets.push_back(random_net(in, in == 4 ? 2 : 1, in % 3));
    const Network par = parallelize(nets);
    CHECK(par.input_dim() == 10);
    CHECK(par.output_dim() == 5);

    for (int t = 0; t < 40; ++t) {
        const Eigen::VectorXd v = rand_vec(10);
        Eigen::VectorXd want(5);
        int in_at = 0, out_at = 0;
        for (const Network& n : nets) {
            want.segment(out_at, n.output_dim()) =
                n.evaluate(v.segment(in_at, n.input_dim()));
            in_at += n.input_dim();
            out_at += n.output_dim();
        }
        // Identity carries only copy and flip signs, so the blocks match their
        // isolated evaluations exactly.
        CHECK((par.evaluate(v) - want).lpNorm<Eigen::Infinity>() == 0.0);
    }

    // A single block passes through untouched.
    const Network one = parallelize({nets[1]});
    CHECK(one.param_count() == nets[1].param_count());
}

TEST_CASE("parallelization size bound, including the two-block-of-13 pin") {
    // Two networks of architecture (2, 3, 1): 13 parameters each, all block
    // dimensions equal to 2.
    auto fixed13 = [] {
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<Layer> layers(2);
        layers[0].W = Eigen::MatrixXd::NullaryExpr(3, 2, [&] { return g(rng); });
        layers[0].b = Eigen::VectorXd::NullaryExpr(3, [&] { return g(rng); });
        layers[1].W = Eigen::MatrixXd::NullaryExpr(1, 3, [&] { return g(rng); });
        layers[1].b = Eigen::VectorXd::NullaryExpr(1, [&] { return g(rng); });
        return Network(std::move(layers));
    };
    const std::vector<Network> pair{fixed13(), fixed13()};
    CHECK(parallel_param_bound_times4(pair) == 11 * 4 * 4 * 26); // 1144 = 4 * 286
    CHECK(4 * parallelize(pair).param_count() <= 1144);

    for (int t = 0; t < 50; ++t) {
        std::uniform_int_distribution<int> count(2, 4), dim(1, 4), depth(1, 3);
        std::vector<Network> nets;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) nets.push_back(random_net(dim(rng), dim(rng), depth(rng) - 1));
        CHECK(4 * parallelize(nets).param_count() <= parallel_param_bound_times4(nets));
    }
}

TEST_CASE("clipping pins outputs into the box and costs exactly 2n(n+1)") {
    const Hypercube unit{0.0, 1.0, 1};
    const Network clipped1 = clip_to(identity_network(1), unit);
    Eigen::VectorXd x(1);
    x << 2.0;
    CHECK(clipped1.evaluate(x)[0] == 1.0);
    x << 0.7;
    CHECK(clipped1.evaluate(x)[0] == doctest::Approx(0.7).epsilon(1e-15));
    x << -3.0;
    CHECK(clipped1.evaluate(x)[0] == 0.0);
    CHECK(clipped1.param_count() == identity_network(1).param_count() + 4);
    CHECK(clipped1.depth() == identity_network(1).depth() + 2);

    const Hypercube box{0.0, 1.0, 2};
    const Network clipped2 = clip_to(identity_network(2), box);
    Eigen::VectorXd y(2);
    y << 0.2, 0.7;
    CHECK((clipped2.evaluate(y) - y).lpNorm<Eigen::Infinity>() <= 1e-15);
    y << 2.0, 3.0;
    CHECK(clipped2.evaluate(y)[0] == 1.0);
    CHECK(clipped2.evaluate(y)[1] == 1.0);

    for (int n : {1, 2, 5}) {
        const Network net = random_net(3, n, 2);
        const Network clipped = clip_to(net, Hypercube{-0.25, 0.5, n});
        CHECK(clipped.param_count() == net.param_count() + 2 * n * (n + 1));
        for (int t = 0; t < 100; ++t) {
            const Eigen::VectorXd out = clipped.evaluate(rand_vec(3, -4.0, 4.0));
            CHECK(out.minCoeff() >= -0.25);
            CHECK(out.maxCoeff() <= 0.5);
        }
    }
}

TEST_CASE("clipping never increases the sampled Lipschitz constant") {
    SampleConfig cfg;
    cfg.pairs = 4000;
    const Hypercube domain{-1.0, 1.0, 3};
    for (int t = 0; t < 5; ++t) {
        const Network net = random_net(3, 2, 2, 1.0);
        const Network clipped = clip_to(net, Hypercube{-0.5, 0.5, 2});
        for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
            const double before = lipschitz_est(net, domain, p, cfg);
            const double after = lipschitz_est(clipped, domain, p, cfg);
            CHECK(after <= before + 1e-12);
        }
    }
}

TEST_CASE("affine wrapping fuses maps without changing the shape") {
    const Network net = random_net(3, 2, 2);

    AffineMap id3, id2;
    id3.A = Eigen::MatrixXd::Identity(3, 3);
    id3.c = Eigen::VectorXd::Zero(3);
    id2.A = Eigen::MatrixXd::Identity(2, 2);
    id2.c = Eigen::VectorXd::Zero(2);
    const Network same = affine_wrap(net, id3, id2);
    CHECK(same.depth() == net.depth());
    CHECK(same.param_count() == net.param_count());
    for (int t = 0; t < 30; ++t) {
        const Eigen::VectorXd v = rand_vec(3);
        CHECK((same.evaluate(v) - net.evaluate(v)).lpNorm<Eigen::Infinity>() == 0.0);
    }

    // Pad a constant input coordinate in front, scale by 8 behind.
    AffineMap pad;
    pad.A = Eigen::MatrixXd::Zero(3, 2);
    pad.A.topLeftCorner(2, 2).setIdentity();
    pad.c = Eigen::VectorXd::Zero(3);
    pad.c[2] = 0.125;
    AffineMap scale;
    scale.A = Eigen::MatrixXd::Identity(2, 2) * 8.0;
    scale.c = Eigen::VectorXd::Zero(2);
    const Network wrapped = affine_wrap(net, pad, scale);
    CHECK(wrapped.depth() == net.depth());
    CHECK(wrapped.input_dim() == 2);
    for (int t = 0; t < 30; ++t) {
        const Eigen::VectorXd v = rand_vec(2);
        Eigen::VectorXd lifted(3);
        lifted << v[0], v[1], 0.125;
        const Eigen::VectorXd want = 8.0 * net.evaluate(lifted);
        CHECK((wrapped.evaluate(v) - want).lpNorm<Eigen::Infinity>() <= 1e-9);
    }

    // Either side may be omitted.
    const Network only_pre = affine_wrap(net, pad, std::nullopt);
    CHECK(only_pre.input_dim() == 2);
    CHECK(only_pre.output_dim() == 2);
    const Network only_post = affine_wrap(net, std::nullopt, scale);
    CHECK(only_post.input_dim() == 3);
}

TEST_CASE("composition is associative up to floating point") {
    const Network a = random_net(2, 3, 1);
    const Network b = random_net(3, 2, 1);
    const Network c = random_net(2, 2, 1);
    const Network left = compose(compose(c, b), a);
    const Network right = compose(c, compose(b, a));
    for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd v = rand_vec(2);
        CHECK((left.evaluate(v) - right.evaluate(v)).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
}
