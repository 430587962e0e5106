#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "msep/protocol.hpp"
#include "oracles.hpp"

using namespace msep::protocol;
using namespace msep::taskgen;
using msep::gf2::BitVec;
using msep::gf2::Rng;
using msep::learner::GaussOptions;
using msep::learner::Hypothesis;

namespace {

std::string as_string(const std::vector<std::uint8_t>& bytes) {
    return {bytes.begin(), bytes.end()};
}

// Exact Bin(n, p) lower tail, used as the oracle for threshold-rule rates.
double binom_le(int n, double p, int kk) {
    double total = 0.0;
    for (int i = 0; i <= kk; ++i) {
        double logc = std::lgamma(n + 1) - std::lgamma(i + 1) - std::lgamma(n - i + 1);
        total += std::exp(logc + i * std::log(p) + (n - i) * std::log1p(-p));
    }
    return total;
}

// Mirrors the labeler's draw order so tests can learn which concept Bob used.
struct BobView {
    int b_b = 0;
    Secret psi;
};
BobView replay_bob(const BimodalTask& task, Rng bob_rng) {
    BobView v;
    v.b_b = bob_rng.next_bit();
    if (v.b_b == 1) v.psi = task.sample_concept(bob_rng);
    return v;
}

// Noise-free sessions admit an exact learner: solve z = A w by elimination.
BimodalLearnerFn gauss_solving_learner() {
    return [](std::span<const DataPoint> points, std::size_t n) {
        const auto pairs = project_yz(points);
        GaussOptions opt;
        opt.trials = 200;
        opt.theta = 0.0;
        Rng rng(4242, "ka-solver");
        const auto out = msep::learner::gauss_attack(pairs, n, opt, rng);
        return out.secret ? Hypothesis{out.secret->w} : Hypothesis{BitVec(n)};
    };
}

} // namespace

TEST_CASE("frame codec") {
    Frame f{kTagMsg1, {1, 2, 3, 250}};
    const auto bytes = encode_frame(f);
    CHECK(bytes.size() == 4 + 1 + 4);
    // big-endian length counts tag + payload
    CHECK(bytes[0] == 0);
    CHECK(bytes[3] == 5);
    std::size_t off = 0;
    const Frame g = decode_frame(bytes, off);
    CHECK(off == bytes.size());
    CHECK(g.tag == f.tag);
    CHECK(g.payload == f.payload);

    // stream round trip
    std::stringstream ss;
    write_frame(ss, f);
    write_frame(ss, Frame{kTagExtractorSeed, {9}});
    const Frame r1 = read_frame(ss);
    const Frame r2 = read_frame(ss);
    CHECK(r1.tag == kTagMsg1);
    CHECK(r2.tag == kTagExtractorSeed);

    // truncation errors
    auto cut = bytes;
    cut.resize(bytes.size() - 1);
    off = 0;
    CHECK_THROWS_AS(decode_frame(cut, off), msep::ProtocolError);
    std::stringstream empty;
    CHECK_THROWS_AS(read_frame(empty), msep::ProtocolError);
}

TEST_CASE("message round trips for both label spaces") {
    const LpnVectorTask lpn(TaskParams::with_defaults(16));
    const ToyParityTask toy(16, 0.1);
    Rng rng(1, "msg");

    for (const BimodalTask* task :
         std::initializer_list<const BimodalTask*>{&lpn, &toy}) {
        auto [state, msg1] = alice_round1(*task, 5, rng);
        const Msg1 m1 = decode_msg1(encode_msg1(msg1));
        CHECK(m1 == msg1);

        auto [b, msg2] = bob_round2(*task, msg1, rng);
        const Msg2 m2 = decode_msg2(encode_msg2(msg2));
        CHECK(m2 == msg2);
    }

    // decoding under the wrong tag is rejected
    auto [state, msg1] = alice_round1(lpn, 2, rng);
    Frame f = encode_msg1(msg1);
    f.tag = kTagMsg2;
    CHECK_THROWS_AS(decode_msg2(f), msep::ProtocolError);
    f.tag = kTagExtractorSeed;
    CHECK_THROWS_AS(decode_msg1(f), msep::ProtocolError);

    // trailing bytes are rejected
    Frame g = encode_msg1(msg1);
    g.payload.push_back(0);
    CHECK_THROWS_AS(decode_msg1(g), msep::ProtocolError);
}

TEST_CASE("alice sends only the second modality") {
    const LpnVectorTask task(TaskParams::with_defaults(64));
    Rng rng(2, "alice");
    auto [state, msg1] = alice_round1(task, 20, rng);
    CHECK(msg1.ys.size() == 21);
    CHECK(state.xs.size() == 21);

    const std::string wire = as_string(encode_frame(encode_msg1(msg1)));
    // none of the retained x vectors appear anywhere in the message bytes
    for (const ModalityX& x : state.xs) {
        const auto xb = msep::gf2::to_bytes(x.xvec);
        CHECK(wire.find(as_string(xb)) == std::string::npos);
    }
    // sanity: the scan does find bytes that are on the wire
    const auto yb = msep::gf2::to_bytes(msg1.ys[0].yvec);
    CHECK(wire.find(as_string(yb)) != std::string::npos);
}

TEST_CASE("bob flips a fair coin and labels accordingly") {
    const LpnVectorTask task(TaskParams::with_defaults(8));
    Rng rng(3, "bob");
    auto [state, msg1] = alice_round1(task, 3, rng);

    std::size_t ones = 0;
    double label_ones = 0, label_bits = 0;
    const std::size_t sessions = 10000;
    for (std::size_t s = 0; s < sessions; ++s) {
        Rng brng(900, "bobloop", s);
        auto [b, msg2] = bob_round2(task, msg1, brng);
        ones += static_cast<std::size_t>(b);
        if (b == 0) {
            for (const LabelZ& z : msg2.zs) {
                label_ones += static_cast<double>(z.zvec.weight()) + z.zbit;
                label_bits += static_cast<double>(z.zvec.size()) + 1;
            }
        }
    }
    CHECK(std::fabs(ones / static_cast<double>(sessions) - 0.5) < 0.02);
    CHECK(std::fabs(label_ones / label_bits - 0.5) < 0.01);

    // reproducible labels from the same stream
    Rng b1(901, "bobrep", 7), b2(901, "bobrep", 7);
    auto r1 = bob_round2(task, msg1, b1);
    auto r2 = bob_round2(task, msg1, b2);
    CHECK(r1.first == r2.first);
    CHECK(r1.second == r2.second);

    // malformed first messages are rejected
    Msg1 bad;
    bad.n = 8;
    CHECK_THROWS_AS(bob_round2(task, bad, b1), msep::ProtocolError);
    Msg1 wrong = msg1;
    wrong.ys[1].yvec = BitVec(5);
    CHECK_THROWS_AS(bob_round2(task, wrong, b1), msep::ProtocolError);
}

TEST_CASE("alice threshold decision against uniform labels is almost surely zero") {
    const TaskParams p = TaskParams::with_defaults(32);
    const LpnVectorTask task(p);
    const DecisionRule rule{DecisionKind::threshold, 0.25};

    std::size_t false_accepts = 0, b0_sessions = 0;
    double disagreement_sum = 0;
    for (std::size_t s = 0; s < 300; ++s) {
        Rng srng(1000, "b0", s);
        Rng arng = srng.derive("alice", 0);
        Rng brng = srng.derive("bob", 0);
        auto [state, msg1] = alice_round1(task, 4, arng);
        const BobView bob = replay_bob(task, brng);
        auto [b, msg2] = bob_round2(task, msg1, brng);
        REQUIRE(b == bob.b_b);
        if (b == 1) continue;
        ++b0_sessions;
        // even a learner that magically knows a secret cannot match uniform labels
        const BimodalLearnerFn psychic = [&](std::span<const DataPoint>, std::size_t) {
            return Hypothesis{msep::gf2::bernoulli_vec(p.n, p.theta, srng)};
        };
        const AliceDecision dec = alice_finish(task, state, msg2, rule, psychic);
        false_accepts += static_cast<std::size_t>(dec.b_a);
        disagreement_sum += dec.disagreement;
    }
    REQUIRE(b0_sessions > 100);
    CHECK(std::fabs(disagreement_sum / b0_sessions - 0.5) < 0.05);
    CHECK(false_accepts <= 2); // chance passes happen with probability ~2e-3
}

TEST_CASE("threshold decision rates under an exact-recovery learner") {
    // Conditional on b_B = 1 and the learner returning Bob's secret, the
    // held-out disagreement is Bin(n+1, theta)/(n+1); with tau = 0.25 the
    // accept probability is the exact binomial tail (about 0.885 at n = 32).
    const TaskParams p = TaskParams::with_defaults(32);
    const LpnVectorTask task(p);
    const DecisionRule rule{DecisionKind::threshold, 0.25};
    const double oracle_rate =
        binom_le(static_cast<int>(p.n) + 1, p.theta,
                 static_cast<int>(std::floor(0.25 * (p.n + 1))));

    std::size_t b1 = 0, accepts = 0;
    for (std::size_t s = 0; s < 1000; ++s) {
        Rng srng(2000, "b1", s);
        Rng arng = srng.derive("alice", 0);
        Rng brng = srng.derive("bob", 0);
        auto [state, msg1] = alice_round1(task, 4, arng);
        const BobView bob = replay_bob(task, brng);
        auto [b, msg2] = bob_round2(task, msg1, brng);
        if (b == 0) continue;
        ++b1;
        const BimodalLearnerFn exact_recovery =
            [&bob](std::span<const DataPoint>, std::size_t) {
                return Hypothesis{bob.psi.w};
            };
        accepts += alice_finish(task, state, msg2, rule, exact_recovery).b_a;
    }
    REQUIRE(b1 > 400);
    const double rate = static_cast<double>(accepts) / static_cast<double>(b1);
    const double sigma = std::sqrt(oracle_rate * (1 - oracle_rate) / b1);
    CHECK(std::fabs(rate - oracle_rate) < 5 * sigma);
}

TEST_CASE("exact rule on the binary toy task matches label equality") {
    const ToyParityTask toy(24, 0.0);
    const DecisionRule rule{DecisionKind::exact, 0.0};
    Rng det(0, "det");

    for (std::size_t s = 0; s < 200; ++s) {
        Rng srng(3000, "toy", s);
        Rng arng = srng.derive("alice", 0);
        Rng brng = srng.derive("bob", 0);
        auto [state, msg1] = alice_round1(toy, 12, arng);
        const BobView bob = replay_bob(toy, brng);
        auto [b, msg2] = bob_round2(toy, msg1, brng);

        const Secret learned = b == 1 ? bob.psi : Secret{BitVec(24)};
        const BimodalLearnerFn perfect =
            [&learned](std::span<const DataPoint>, std::size_t) {
                return Hypothesis{learned.w};
            };
        const AliceDecision dec = alice_finish(toy, state, msg2, rule, perfect);

        const int pred = msep::gf2::inner(state.ys[12].yvec, learned.w);
        CHECK(dec.b_a == (pred == msg2.zs[12].zbit ? 1 : 0));
        if (b == 1) CHECK(dec.b_a == 1); // deterministic labels, exact learner
    }
}

TEST_CASE("alice_finish validates message lengths") {
    const LpnVectorTask task(TaskParams::with_defaults(8));
    Rng rng(4, "len");
    auto [state, msg1] = alice_round1(task, 3, rng);
    auto [b, msg2] = bob_round2(task, msg1, rng);
    msg2.zs.pop_back();
    CHECK_THROWS_AS(alice_finish(task, state, msg2, {}), msep::ProtocolError);
}

TEST_CASE("default learner requires vector labels") {
    const ToyParityTask toy(8, 0.0);
    CHECK_THROWS_AS(default_learner(toy), msep::ConfigError);
}

TEST_CASE("sessions replay byte-identically and transcripts carry the wire") {
    const LpnVectorTask task(TaskParams::with_defaults(12));
    const DecisionRule rule{DecisionKind::threshold, 0.25};

    Rng r1(5000, "replay", 3), r2(5000, "replay", 3);
    auto [res1, tr1] = run_ba_session(task, 16, rule, r1);
    auto [res2, tr2] = run_ba_session(task, 16, rule, r2);
    CHECK(res1.b_a == res2.b_a);
    CHECK(res1.b_b == res2.b_b);
    CHECK(tr1.wire_bytes == tr2.wire_bytes);

    // the transcript is exactly the two frames
    auto expect = encode_frame(encode_msg1(tr1.msg1));
    const auto f2 = encode_frame(encode_msg2(tr1.msg2));
    expect.insert(expect.end(), f2.begin(), f2.end());
    CHECK(tr1.wire_bytes == expect);

    // and the eavesdropper's parse of those bytes recovers the messages
    std::size_t off = 0;
    CHECK(decode_msg1(decode_frame(tr1.wire_bytes, off)) == tr1.msg1);
    CHECK(decode_msg2(decode_frame(tr1.wire_bytes, off)) == tr1.msg2);
    CHECK(off == tr1.wire_bytes.size());
}

TEST_CASE("sabotaged learners agree at chance level") {
    const TaskParams p = TaskParams::with_defaults(16);
    const LpnVectorTask task(p);
    const DecisionRule rule{DecisionKind::threshold, 0.25};

    std::size_t agree = 0;
    const std::size_t sessions = 200;
    for (std::size_t s = 0; s < sessions; ++s) {
        Rng srng(6000, "sab", s);
        Rng sab_rng = srng.derive("sabotage", 0);
        const BimodalLearnerFn sabotage =
            [&sab_rng, &p](std::span<const DataPoint>, std::size_t) {
                return Hypothesis{msep::gf2::uniform_vec(p.n, sab_rng)};
            };
        auto [res, tr] = run_ba_session(task, 64, rule, srng, sabotage);
        agree += static_cast<std::size_t>(res.b_a == res.b_b);
    }
    const double rate = static_cast<double>(agree) / sessions;
    CHECK(std::fabs(rate - 0.5) < 0.07);
}

TEST_CASE("session bits are independent across stream indices") {
    const LpnVectorTask task(TaskParams::with_defaults(8));
    const DecisionRule rule{DecisionKind::threshold, 0.25};
    std::vector<int> bits;
    for (std::size_t s = 0; s < 10000; ++s) {
        Rng srng(7000, "auto", s);
        Rng brng = srng.derive("bob", 0);
        bits.push_back(brng.next_bit()); // Bob's coin for this session
    }
    double mean = 0;
    for (int b : bits) mean += b;
    mean /= static_cast<double>(bits.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i + 1 < bits.size(); ++i)
        num += (bits[i] - mean) * (bits[i + 1] - mean);
    for (std::size_t i = 0; i < bits.size(); ++i)
        den += (bits[i] - mean) * (bits[i] - mean);
    CHECK(std::fabs(num / den) < 0.05);
}

TEST_CASE("toeplitz extractor") {
    Rng rng(8000, "toep");

    SUBCASE("zero output length") {
        const BitVec raw = msep::gf2::uniform_vec(32, rng);
        CHECK(toeplitz_extract(raw, BitVec(31), 0).size() == 0);
    }

    SUBCASE("matches the naive double loop") {
        for (int t = 0; t < 30; ++t) {
            const std::size_t m = 2 + rng.uniform_below(60);
            const std::size_t out = 1 + rng.uniform_below(m);
            const BitVec raw = msep::gf2::uniform_vec(m, rng);
            const BitVec seed = msep::gf2::uniform_vec(m + out - 1, rng);
            CHECK(toeplitz_extract(raw, seed, out) ==
                  oracle::toeplitz_extract(raw, seed, out));
        }
    }

    SUBCASE("linear in the input for a fixed seed") {
        for (int t = 0; t < 50; ++t) {
            const std::size_t m = 40;
            const std::size_t out = 16;
            const BitVec a = msep::gf2::uniform_vec(m, rng);
            const BitVec b = msep::gf2::uniform_vec(m, rng);
            const BitVec seed = msep::gf2::uniform_vec(m + out - 1, rng);
            CHECK(toeplitz_extract(msep::gf2::xor_add(a, b), seed, out) ==
                  msep::gf2::xor_add(toeplitz_extract(a, seed, out),
                                     toeplitz_extract(b, seed, out)));
        }
    }

    SUBCASE("shape errors") {
        const BitVec raw = msep::gf2::uniform_vec(16, rng);
        CHECK_THROWS_AS(toeplitz_extract(raw, BitVec(16 + 17 - 1), 17),
                        msep::DimensionError);
        CHECK_THROWS_AS(toeplitz_extract(raw, BitVec(10), 4), msep::DimensionError);
    }
}

TEST_CASE("key agreement mechanics in the noise-free regime") {
    TaskParams p = TaskParams::with_defaults(32);
    p.theta = 0.0;
    const LpnVectorTask task(p);
    const DecisionRule rule{DecisionKind::threshold, 0.25};

    SUBCASE("keys match when the learner solves the noise-free system") {
        std::size_t equal = 0;
        for (std::uint64_t t = 0; t < 20; ++t) {
            Rng rng(9000 + t, "ka");
            auto [ka, transcripts] =
                run_ka(task, 4, 16, 8, rule, rng, gauss_solving_learner());
            REQUIRE(transcripts.size() == 16);
            CHECK(ka.key_a.size() == 8);
            CHECK(ka.key_b.size() == 8);
            if (ka.raw_bit_errors == 0) CHECK(ka.key_a == ka.key_b);
            if (ka.key_a != ka.key_b) CHECK(ka.raw_bit_errors > 0);
            equal += ka.key_a == ka.key_b;

            // the public seed rides the last transcript as its own frame
            const auto& bytes = transcripts.back().wire_bytes;
            std::size_t off = 0;
            decode_frame(bytes, off);
            decode_frame(bytes, off);
            const Frame seed_frame = decode_frame(bytes, off);
            CHECK(seed_frame.tag == kTagExtractorSeed);
            CHECK(decode_seed(seed_frame) == ka.extractor_seed);
            CHECK(off == bytes.size());
        }
        CHECK(equal >= 18);
    }

    SUBCASE("in-memory and wire-path repetitions produce identical keys") {
        Rng r1(9300, "kaeq"), r2(9300, "kaeq");
        auto wire = run_ka(task, 4, 8, 4, rule, r1, gauss_solving_learner(), true);
        auto mem = run_ka(task, 4, 8, 4, rule, r2, gauss_solving_learner(), false);
        CHECK(wire.first.key_a == mem.first.key_a);
        CHECK(wire.first.key_b == mem.first.key_b);
        CHECK(wire.first.raw_bit_errors == mem.first.raw_bit_errors);
        CHECK(mem.second.empty());
    }

    SUBCASE("zero-length keys are trivially equal") {
        Rng rng(9100, "ka0");
        auto [ka, transcripts] = run_ka(task, 2, 4, 0, rule, rng,
                                        gauss_solving_learner());
        CHECK(ka.key_a.size() == 0);
        CHECK(ka.key_a == ka.key_b);
    }

    SUBCASE("key length cannot exceed the session count") {
        Rng rng(9200, "kae");
        CHECK_THROWS_AS(run_ka(task, 2, 4, 5, rule, rng, gauss_solving_learner()),
                        msep::ConfigError);
    }
}

TEST_CASE("adversary harness") {
    const TaskParams p = TaskParams::with_defaults(12);
    TaskParams small = p;
    small.k = 400; // transcript length for the attack, not a learner run
    const LpnVectorTask task(small);
    const DecisionRule rule{DecisionKind::threshold, 0.25};

    SUBCASE("coin flippers sit at one half") {
        auto coin_rng = std::make_shared<Rng>(10000, "coin");
        const TranscriptAdversary coin = [coin_rng](const Transcript&) {
            return coin_rng->next_bit();
        };
        Rng rng(10001, "harness");
        const auto rep = adversary_harness(coin, task, 32, 1000, rule, rng);
        CHECK(std::fabs(rep.accuracy - 0.5) < 0.03);
        CHECK(rep.wilson_lo <= rep.accuracy);
        CHECK(rep.accuracy <= rep.wilson_hi);
        CHECK_THROWS_AS(adversary_harness(coin, task, 4, 0, rule, rng),
                        msep::ConfigError);
    }

    SUBCASE("the low-weight eavesdropper reads small transcripts") {
        const auto adv = lowweight_transcript_adversary({6, 4000, 0.2, 150});
        Rng rng(10002, "harness12");
        const auto rep = adversary_harness(adv, task, 400, 60, rule, rng);
        CHECK(rep.accuracy >= 0.85);
    }

    SUBCASE("the same eavesdropper is blind at n = 48 under its budget") {
        TaskParams p48 = TaskParams::with_defaults(48);
        p48.k = 400;
        const LpnVectorTask task48(p48);
        const auto adv = lowweight_transcript_adversary({6, 4000, 0.2, 150});
        Rng rng(10003, "harness48");
        const auto rep = adversary_harness(adv, task48, 400, 60, rule, rng);
        CHECK(rep.accuracy <= 0.6);
    }
}
