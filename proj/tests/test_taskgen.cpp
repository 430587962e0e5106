#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "msep/dataset_io.hpp"
#include "msep/taskgen.hpp"
#include "oracles.hpp"

using namespace msep::taskgen;
using msep::gf2::basis_vec;
using msep::gf2::BitVec;
using msep::gf2::inner;
using msep::gf2::Rng;
using msep::gf2::xor_add;

namespace {

TaskParams params_n16() {
    return TaskParams::with_defaults(16); // theta = 0.25
}

} // namespace

TEST_CASE("defaults and validation") {
    const TaskParams p = TaskParams::with_defaults(32);
    CHECK(p.theta == doctest::Approx(1.0 / std::sqrt(32.0)));
    CHECK(p.k == 32768);
    p.validate();

    TaskParams bad = p;
    bad.n = 1;
    CHECK_THROWS_AS(bad.validate(), msep::ConfigError);
    bad = p;
    bad.theta = 0.5;
    CHECK_THROWS_AS(bad.validate(), msep::ConfigError);
    bad = p;
    bad.k = 0;
    CHECK_THROWS_AS(bad.validate(), msep::ConfigError);

    const TaskParams ci = TaskParams::ci_scale(32);
    CHECK(ci.k < p.k);
    CHECK(ci.k > 32 * 32);
}

TEST_CASE("sample_chi statistics") {
    TaskParams p = params_n16();

    SUBCASE("theta zero gives empty xvec, idx still uniform") {
        p.theta = 0.0;
        Rng rng(1, "chi0");
        std::vector<std::size_t> freq(p.n, 0);
        for (int t = 0; t < 10000; ++t) {
            const ModalityX x = sample_chi(p, rng);
            CHECK(x.xvec.weight() == 0);
            ++freq[x.idx];
        }
        for (std::size_t c : freq) {
            CHECK(c > 525);
            CHECK(c < 725);
        }
    }

    SUBCASE("weight statistics at theta = 0.25") {
        Rng rng(2, "chi");
        double weight_sum = 0;
        std::vector<std::size_t> freq(p.n, 0);
        for (int t = 0; t < 10000; ++t) {
            const ModalityX x = sample_chi(p, rng);
            weight_sum += static_cast<double>(x.xvec.weight());
            ++freq[x.idx];
        }
        CHECK(weight_sum / 10000.0 == doctest::Approx(4.0).epsilon(0.15 / 4.0));
        for (std::size_t c : freq) {
            CHECK(c > 525);
            CHECK(c < 725);
        }
    }
}

TEST_CASE("apply_phi") {
    TaskParams p = params_n16();

    SUBCASE("noise-free zero input gives a unit vector") {
        p.theta = 0.0;
        Rng rng(3, "phi0");
        for (int t = 0; t < 50; ++t) {
            ModalityX x{BitVec(p.n), rng.uniform_below(p.n)};
            const ModalityY y = apply_phi(p, x, rng);
            CHECK(y.yvec == basis_vec(x.idx, p.n));
        }
    }

    SUBCASE("residual equals the traced noise vector") {
        Rng rng(4, "phi");
        double resid_weight = 0;
        const int draws = 10000;
        for (int t = 0; t < draws; ++t) {
            const ModalityX x = sample_chi(p, rng);
            PhiTrace trace;
            const ModalityY y = apply_phi(p, x, rng, &trace);
            BitVec resid = xor_add(y.yvec, oracle::row_times_matrix(x.xvec, y.A));
            resid.flip(x.idx);
            CHECK(resid == trace.b);
            resid_weight += static_cast<double>(resid.weight());
        }
        // mean weight n*theta within 3 sigma of the mean estimate
        const double expect = p.n * p.theta;
        const double sigma =
            std::sqrt(p.n * p.theta * (1 - p.theta) / static_cast<double>(draws));
        CHECK(std::fabs(resid_weight / draws - expect) < 3 * sigma + 1e-9);
    }

    SUBCASE("deterministic under a fixed stream") {
        Rng a(5, "phid", 9), b(5, "phid", 9);
        ModalityX xa = sample_chi(p, a), xb = sample_chi(p, b);
        CHECK(xa == xb);
        CHECK(apply_phi(p, xa, a) == apply_phi(p, xb, b));
    }

    SUBCASE("shape errors") {
        Rng rng(6, "phie");
        ModalityX bad{BitVec(p.n + 1), 0};
        CHECK_THROWS_AS(apply_phi(p, bad, rng), msep::DimensionError);
    }
}

TEST_CASE("sample_zeta") {
    TaskParams p = TaskParams::with_defaults(100); // theta = 0.1
    SUBCASE("theta zero") {
        p.theta = 0.0;
        Rng rng(7, "zeta0");
        CHECK(sample_zeta(p, rng).w.weight() == 0);
    }
    SUBCASE("mean weight") {
        Rng rng(8, "zeta");
        double sum = 0;
        for (int t = 0; t < 1000; ++t)
            sum += static_cast<double>(sample_zeta(p, rng).w.weight());
        CHECK(std::fabs(sum / 1000.0 - 10.0) < 1.0);
    }
    SUBCASE("determinism") {
        Rng a(9, "zd", 2), b(9, "zd", 2);
        CHECK(sample_zeta(p, a) == sample_zeta(p, b));
    }
}

TEST_CASE("apply_psi") {
    TaskParams p = params_n16();
    Rng rng(10, "psi");

    SUBCASE("noise-free labels equal the exact products") {
        TaskParams p0 = p;
        p0.theta = 0.0;
        for (int t = 0; t < 100; ++t) {
            // noisy secret sampled separately, then labeled noise-free
            const Secret w = sample_zeta(p, rng);
            const ModalityX x = sample_chi(p, rng);
            const ModalityY y = apply_phi(p, x, rng);
            const LabelZ z = apply_psi(p0, w, y, rng);
            CHECK(z.zvec == oracle::matrix_times_col(y.A, w.w));
            CHECK(z.zbit == oracle::inner(y.yvec, w.w));
        }
    }

    SUBCASE("zero secret and zero noise give the zero label") {
        TaskParams p0 = p;
        p0.theta = 0.0;
        const Secret w{BitVec(p.n)};
        const ModalityX x = sample_chi(p, rng);
        const ModalityY y = apply_phi(p, x, rng);
        const LabelZ z = apply_psi(p0, w, y, rng);
        CHECK(z.zvec.weight() == 0);
        CHECK(z.zbit == 0);
    }

    SUBCASE("residual equals the traced noise") {
        double sum = 0;
        const int draws = 10000;
        const Secret w = sample_zeta(p, rng);
        for (int t = 0; t < draws; ++t) {
            const ModalityX x = sample_chi(p, rng);
            const ModalityY y = apply_phi(p, x, rng);
            PsiTrace trace;
            const LabelZ z = apply_psi(p, w, y, rng, &trace);
            const BitVec resid = xor_add(z.zvec, oracle::matrix_times_col(y.A, w.w));
            CHECK(resid == trace.b_col);
            sum += static_cast<double>(resid.weight());
        }
        const double sigma =
            std::sqrt(p.n * p.theta * (1 - p.theta) / static_cast<double>(draws));
        CHECK(std::fabs(sum / draws - p.n * p.theta) < 3 * sigma + 1e-9);
    }
}

TEST_CASE("vote identity holds bit-exactly with exposed noise") {
    const TaskParams p = params_n16();
    Rng rng(11, "vote");
    const Secret w = sample_zeta(p, rng);
    for (int t = 0; t < 1000; ++t) {
        const ModalityX x = sample_chi(p, rng);
        PhiTrace phi_trace;
        const ModalityY y = apply_phi(p, x, rng, &phi_trace);
        PsiTrace psi_trace;
        const LabelZ z = apply_psi(p, w, y, rng, &psi_trace);

        const int vote = inner(x.xvec, z.zvec) ^ z.zbit;
        const int expanded = (w.w.get(x.idx) ? 1 : 0) ^ inner(x.xvec, psi_trace.b_col) ^
                             inner(phi_trace.b, w.w) ^ psi_trace.b_bit;
        CHECK(vote == expanded);
    }
}

TEST_CASE("noise-free reconstruction identity") {
    TaskParams p0 = params_n16();
    p0.theta = 0.0;
    Rng rng(12, "recon");
    // weight of w is controlled directly since theta is zeroed
    Secret w{BitVec(p0.n)};
    w.w.set(3, true);
    w.w.set(11, true);
    for (int t = 0; t < 1000; ++t) {
        const ModalityX x = sample_chi(p0, rng);
        const ModalityY y = apply_phi(p0, x, rng);
        const LabelZ z = apply_psi(p0, w, y, rng);
        CHECK(z.zvec == oracle::matrix_times_col(y.A, w.w));
        const BitVec expect_y =
            xor_add(oracle::row_times_matrix(x.xvec, y.A), basis_vec(x.idx, p0.n));
        CHECK(y.yvec == expect_y);
        CHECK(z.zbit == oracle::inner(expect_y, w.w));
    }
}

TEST_CASE("sample_dataset") {
    const TaskParams p = params_n16();
    Rng rng(13, "ds");
    const Secret w = sample_zeta(p, rng);

    SUBCASE("count zero is a config error") {
        CHECK_THROWS_AS(sample_dataset(p, w, 0, rng), msep::ConfigError);
    }

    SUBCASE("pure function of the base rng identity") {
        const auto a = sample_dataset(p, w, 5000, Rng(21, "base", 4));
        const auto b = sample_dataset(p, w, 5000, Rng(21, "base", 4));
        CHECK(a == b);
        const auto c = sample_dataset(p, w, 5000, Rng(21, "base", 5));
        CHECK(a != c);
    }

    SUBCASE("all points share the planted secret (noise-free check)") {
        TaskParams p0 = p;
        p0.theta = 0.0;
        const auto data = sample_dataset(p0, w, 500, rng);
        for (const DataPoint& pt : data) {
            CHECK(pt.z.zvec == oracle::matrix_times_col(pt.y.A, w.w));
            CHECK(pt.z.zbit == oracle::inner(pt.y.yvec, w.w));
        }
    }
}

TEST_CASE("projections") {
    const TaskParams p = params_n16();
    Rng rng(14, "proj");
    const Secret w = sample_zeta(p, rng);
    const auto data = sample_dataset(p, w, 3, rng);

    const auto yz = project_yz(data);
    const auto xz = project_xz(data);
    REQUIRE(yz.size() == 3);
    REQUIRE(xz.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(yz[i].first == data[i].y);
        CHECK(yz[i].second == data[i].z);
        CHECK(xz[i].first == data[i].x);
        CHECK(xz[i].second == data[i].z);
    }

    // zipping the projections back together restores the dataset
    for (std::size_t i = 0; i < 3; ++i) {
        const DataPoint restored{xz[i].first, yz[i].first, yz[i].second};
        CHECK(restored == data[i]);
    }

    CHECK_THROWS_AS(project_yz({}), msep::DimensionError);
    CHECK_THROWS_AS(project_xz({}), msep::DimensionError);
}

TEST_CASE("projections do not leak the secret bytes") {
    TaskParams p = TaskParams::with_defaults(64);
    Rng rng(15, "leak");
    Secret w{msep::gf2::uniform_vec(p.n, rng)}; // dense pattern, 8 bytes
    const auto data = sample_dataset(p, w, 200, rng);
    const auto wb = msep::gf2::to_bytes(w.w);
    const std::string needle(wb.begin(), wb.end());

    std::string haystack;
    for (const auto& [y, z] : project_yz(data)) {
        for (std::size_t r = 0; r < y.A.rows(); ++r) {
            const auto rb = msep::gf2::to_bytes(y.A.row_vec(r));
            haystack.append(rb.begin(), rb.end());
        }
        const auto yb = msep::gf2::to_bytes(y.yvec);
        haystack.append(yb.begin(), yb.end());
        const auto zb = msep::gf2::to_bytes(z.zvec);
        haystack.append(zb.begin(), zb.end());
    }
    CHECK(haystack.find(needle) == std::string::npos);
}

TEST_CASE("sample_dlpn") {
    Rng rng(16, "dlpn");

    SUBCASE("planted world with zero noise is the exact product") {
        auto inst = sample_dlpn(16, 400, 0.0, SecretMode::bernoulli_secret,
                                World::planted, rng);
        CHECK(inst.q == oracle::row_times_matrix(inst.secret, inst.A));
    }

    SUBCASE("uniform world per-bit mean") {
        auto inst = sample_dlpn(16, 100000, 0.25, SecretMode::bernoulli_secret,
                                World::uniform, rng);
        const double mean = static_cast<double>(inst.q.weight()) / 100000.0;
        CHECK(mean > 0.49);
        CHECK(mean < 0.51);
        CHECK(inst.secret.empty());
    }

    SUBCASE("bernoulli secrets have the noise distribution") {
        const std::size_t n = 64;
        const double theta = 0.125;
        double sum = 0;
        for (int t = 0; t < 200; ++t) {
            auto inst = sample_dlpn(n, 64, theta, SecretMode::bernoulli_secret,
                                    World::planted, rng);
            sum += static_cast<double>(inst.secret.weight());
        }
        CHECK(std::fabs(sum / 200.0 - n * theta) < 1.0);

        auto uinst =
            sample_dlpn(n, 64, theta, SecretMode::uniform_secret, World::planted, rng);
        CHECK(uinst.secret.weight() > 16); // uniform secrets are dense
    }

    SUBCASE("m must be positive") {
        CHECK_THROWS_AS(sample_dlpn(8, 0, 0.2, SecretMode::bernoulli_secret,
                                    World::planted, rng),
                        msep::ConfigError);
    }
}

TEST_CASE("bimodal task interface") {
    const TaskParams p = params_n16();
    const LpnVectorTask task(p);
    CHECK(task.n() == p.n);
    CHECK(task.label_space() == LabelSpace::vector_np1);

    // the task routes through the free samplers stream-for-stream
    Rng a(17, "task", 1), b(17, "task", 1);
    const Secret ca = task.sample_concept(a);
    const Secret cb = sample_zeta(p, b);
    CHECK(ca == cb);
    auto [xa, ya] = task.sample_unlabeled(a);
    const ModalityX xb = sample_chi(p, b);
    const ModalityY yb = apply_phi(p, xb, b);
    CHECK(xa == xb);
    CHECK(ya == yb);
    CHECK(task.label(ca, ya, a) == apply_psi(p, cb, yb, b));

    const ToyParityTask toy(24, 0.0);
    Rng rng(18, "toy");
    const Secret w = toy.sample_concept(rng);
    for (int t = 0; t < 50; ++t) {
        auto [x, y] = toy.sample_unlabeled(rng);
        CHECK(y.A.rows() == 0);
        const LabelZ z = toy.label(w, y, rng);
        CHECK(z.zvec.empty());
        CHECK(z.zbit == oracle::inner(y.yvec, w.w));
    }

    const LabelZ u_vec = task.uniform_label(rng);
    CHECK(u_vec.zvec.size() == p.n);
    const LabelZ u_bin = toy.uniform_label(rng);
    CHECK(u_bin.zvec.empty());
}

TEST_CASE("dataset file round trip") {
    namespace io = msep::dataset_io;
    const TaskParams p = params_n16();
    Rng rng(19, "io");
    const Secret w = sample_zeta(p, rng);
    const auto data = sample_dataset(p, w, 64, rng);
    const io::DatasetHeader header{p.n, p.theta, data.size()};

    const std::string path = "/tmp/msep_taskgen_io_test.bin";
    io::write_dataset(path, header, data);
    auto [h2, data2] = io::read_dataset(path);
    CHECK(h2.n == p.n);
    CHECK(h2.theta == p.theta);
    CHECK(data2 == data);

    // byte-identical re-serialization
    std::ostringstream s1, s2;
    {
        io::DatasetWriter w1(s1, header);
        for (const auto& pt : data) w1.append(pt);
        w1.finish();
        io::DatasetWriter w2(s2, header);
        for (const auto& pt : data2) w2.append(pt);
        w2.finish();
    }
    CHECK(s1.str() == s2.str());

    io::export_jsonl(path + ".jsonl", header, data);
    std::ifstream jl(path + ".jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(jl, line)) {
        const auto rec = nlohmann::json::parse(line);
        CHECK(rec.contains("x"));
        CHECK(rec.contains("A"));
        CHECK(rec["zbit"].is_number());
        ++lines;
    }
    CHECK(lines == data.size());

    std::remove(path.c_str());
    std::remove((path + ".jsonl").c_str());
}

TEST_CASE("digest is stable and length-sensitive") {
    namespace io = msep::dataset_io;
    BitVec a = BitVec::from_string("10110");
    BitVec b = BitVec::from_string("101100");
    CHECK(io::bitvec_digest(a) == io::bitvec_digest(a));
    CHECK(io::bitvec_digest(a) != io::bitvec_digest(b));
    CHECK(io::bitvec_digest(a).size() == 16);
}
