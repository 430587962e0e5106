#include "msep/protocol.hpp"

#include <cmath>

namespace msep::protocol {

using learner::learn_amu;
using learner::predict;
using taskgen::Secret;

BimodalLearnerFn default_learner(const BimodalTask& task) {
    if (task.label_space() != LabelSpace::vector_np1)
        throw ConfigError("default_learner: binary-label tasks need an injected learner");
    return [](std::span<const DataPoint> points, std::size_t n) {
        return learn_amu(points, n).first;
    };
}

std::pair<AliceState, Msg1> alice_round1(const BimodalTask& task, std::size_t k,
                                         Rng& rng) {
    AliceState state;
    state.k = k;
    state.xs.reserve(k + 1);
    state.ys.reserve(k + 1);
    Msg1 msg;
    msg.n = task.n();
    msg.ys.reserve(k + 1);
    for (std::size_t i = 0; i <= k; ++i) {
        auto [x, y] = task.sample_unlabeled(rng);
        msg.ys.push_back(y);
        state.xs.push_back(std::move(x));
        state.ys.push_back(std::move(y));
    }
    return {std::move(state), std::move(msg)};
}

std::pair<int, Msg2> bob_round2(const BimodalTask& task, const Msg1& msg1, Rng& rng) {
    if (msg1.ys.empty() || msg1.n != task.n())
        throw ProtocolError("bob_round2: malformed first message");
    for (const ModalityY& y : msg1.ys)
        if (y.yvec.size() != task.n())
            throw ProtocolError("bob_round2: malformed first message");

    const int b_b = rng.next_bit();
    Msg2 msg;
    msg.n = task.n();
    msg.space = task.label_space();
    msg.zs.reserve(msg1.ys.size());
    if (b_b == 1) {
        const Secret psi = task.sample_concept(rng);
        for (const ModalityY& y : msg1.ys) msg.zs.push_back(task.label(psi, y, rng));
    } else {
        for (std::size_t i = 0; i < msg1.ys.size(); ++i)
            msg.zs.push_back(task.uniform_label(rng));
    }
    return {b_b, std::move(msg)};
}

AliceDecision alice_finish(const BimodalTask& task, const AliceState& state,
                           const Msg2& msg2, const DecisionRule& rule,
                           const BimodalLearnerFn& learner) {
    if (msg2.zs.size() != state.k + 1 || state.xs.size() != state.k + 1)
        throw ProtocolError("alice_finish: message length mismatch");

    Hypothesis h;
    if (learner) {
        std::vector<DataPoint> points;
        points.reserve(state.k);
        for (std::size_t i = 0; i < state.k; ++i)
            points.push_back(DataPoint{state.xs[i], state.ys[i], msg2.zs[i]});
        h = learner(points, task.n());
    } else {
        if (task.label_space() != LabelSpace::vector_np1)
            throw ConfigError(
                "alice_finish: binary-label tasks need an injected learner");
        // the default learner is the majority-vote learner; feed it the
        // triples in place instead of copying them
        learner::VoteAccumulator acc(task.n());
        for (std::size_t i = 0; i < state.k; ++i)
            acc.add_vote(state.xs[i].idx, gf2::inner(state.xs[i].xvec,
                                                     msg2.zs[i].zvec) ^
                                              msg2.zs[i].zbit);
        h = acc.finish().first;
    }

    const ModalityY& held_y = state.ys[state.k];
    const LabelZ& held_z = msg2.zs[state.k];
    const LabelZ pred = predict(h, held_y);
    if (pred.zvec.size() != held_z.zvec.size())
        throw ProtocolError("alice_finish: label shape mismatch");

    const std::size_t bits = held_z.zvec.size() + 1;
    const std::size_t diff =
        gf2::hamming(pred.zvec, held_z.zvec) + (pred.zbit != held_z.zbit ? 1 : 0);
    AliceDecision out;
    out.disagreement = static_cast<double>(diff) / static_cast<double>(bits);
    out.b_a = rule.kind == DecisionKind::exact ? (diff == 0 ? 1 : 0)
                                               : (out.disagreement <= rule.tau ? 1 : 0);
    return out;
}

std::pair<SessionResult, Transcript> run_ba_session(const BimodalTask& task,
                                                    std::size_t k,
                                                    const DecisionRule& rule, Rng& rng,
                                                    const BimodalLearnerFn& learner) {
    Rng alice_rng = rng.derive("alice", 0);
    Rng bob_rng = rng.derive("bob", 0);

    auto [state, msg1] = alice_round1(task, k, alice_rng);

    Transcript tr;
    tr.session_id = rng.stream_index();
    tr.n = task.n();
    tr.k = k;
    if (const auto* lpn = dynamic_cast<const taskgen::LpnVectorTask*>(&task))
        tr.theta = lpn->params().theta;

    // Every message crosses the codec, so the transcript is exactly the bytes
    // on the wire and both sides parse what was actually sent.
    const auto f1 = encode_frame(encode_msg1(msg1));
    tr.wire_bytes.insert(tr.wire_bytes.end(), f1.begin(), f1.end());
    std::size_t off = 0;
    const Msg1 bob_view = decode_msg1(decode_frame(tr.wire_bytes, off));

    auto [b_b, msg2] = bob_round2(task, bob_view, bob_rng);
    const auto f2 = encode_frame(encode_msg2(msg2));
    tr.wire_bytes.insert(tr.wire_bytes.end(), f2.begin(), f2.end());
    const Msg2 alice_view = decode_msg2(decode_frame(tr.wire_bytes, off));

    const AliceDecision dec = alice_finish(task, state, alice_view, rule, learner);

    tr.msg1 = std::move(msg1);
    tr.msg2 = std::move(msg2);

    SessionResult res;
    res.b_a = dec.b_a;
    res.b_b = b_b;
    res.alice_disagreement = dec.disagreement;
    res.rule = rule;
    return {res, std::move(tr)};
}

namespace {

BitVec reversed(const BitVec& v) {
    BitVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v.get(v.size() - 1 - i)) out.set(i, true);
    return out;
}

} // namespace

BitVec toeplitz_extract(const BitVec& raw, const BitVec& seed, std::size_t out_len) {
    if (out_len > raw.size())
        throw DimensionError("toeplitz_extract: out_len exceeds input length");
    if (out_len == 0) return BitVec();
    if (seed.size() != raw.size() + out_len - 1)
        throw DimensionError("toeplitz_extract: seed must have |raw|+out_len-1 bits");
    // out_i = sum_j raw_j * seed[m-1+i-j]; with raw reversed this is a sliding
    // inner product against seed windows.
    const BitVec rev = reversed(raw);
    BitVec out(out_len);
    for (std::size_t i = 0; i < out_len; ++i)
        if (gf2::inner(rev, seed.slice(i, raw.size()))) out.set(i, true);
    return out;
}

std::pair<KaResult, std::vector<Transcript>> run_ka(
    const BimodalTask& task, std::size_t k, std::size_t m_sessions, std::size_t key_len,
    const DecisionRule& rule, Rng& rng, const BimodalLearnerFn& learner,
    bool keep_transcripts) {
    if (m_sessions == 0) throw ConfigError("run_ka: need at least one session");
    if (key_len > m_sessions)
        throw ConfigError("run_ka: key_len exceeds the extractor input length");

    BitVec raw_a(m_sessions), raw_b(m_sessions);
    std::vector<Transcript> transcripts;
    if (keep_transcripts) transcripts.reserve(m_sessions);

    for (std::size_t s = 0; s < m_sessions; ++s) {
        Rng srng = rng.derive("sess", s);
        if (keep_transcripts) {
            auto [res, tr] = run_ba_session(task, k, rule, srng, learner);
            tr.session_id = s;
            if (res.b_a) raw_a.set(s, true);
            if (res.b_b) raw_b.set(s, true);
            transcripts.push_back(std::move(tr));
        } else {
            // in-memory composition: identical outputs to the wire path since
            // the codec is lossless, and much cheaper on long repetition runs
            Rng arng = srng.derive("alice", 0);
            Rng brng = srng.derive("bob", 0);
            auto [state, msg1] = alice_round1(task, k, arng);
            auto [b_b, msg2] = bob_round2(task, msg1, brng);
            const AliceDecision dec = alice_finish(task, state, msg2, rule, learner);
            if (dec.b_a) raw_a.set(s, true);
            if (b_b) raw_b.set(s, true);
        }
    }

    KaResult out;
    out.sessions = m_sessions;
    out.raw_bit_errors = gf2::hamming(raw_a, raw_b);
    Rng seed_rng = rng.derive("extractor-seed", 0);
    out.extractor_seed = key_len == 0
                             ? BitVec()
                             : gf2::uniform_vec(m_sessions + key_len - 1, seed_rng);
    out.key_a = toeplitz_extract(raw_a, out.extractor_seed, key_len);
    out.key_b = toeplitz_extract(raw_b, out.extractor_seed, key_len);

    // The seed is public: announce it on the wire as its own frame.
    if (keep_transcripts && !transcripts.empty()) {
        const auto fs = encode_frame(encode_seed(out.extractor_seed));
        auto& last = transcripts.back().wire_bytes;
        last.insert(last.end(), fs.begin(), fs.end());
    }
    return {std::move(out), std::move(transcripts)};
}

AdversaryReport adversary_harness(const TranscriptAdversary& adversary,
                                  const BimodalTask& task, std::size_t k,
                                  std::size_t sessions, const DecisionRule& rule,
                                  Rng& rng, const BimodalLearnerFn& learner) {
    if (sessions == 0) throw ConfigError("adversary_harness: sessions must be positive");
    AdversaryReport rep;
    rep.sessions = sessions;
    for (std::size_t s = 0; s < sessions; ++s) {
        Rng srng = rng.derive("sess", s);
        auto [res, tr] = run_ba_session(task, k, rule, srng, learner);
        tr.session_id = s;
        rep.correct += static_cast<std::size_t>(adversary(tr) == res.b_b);
    }
    rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(rep.sessions);
    // Wilson score interval at z = 1.96
    const double z = 1.96, nn = static_cast<double>(rep.sessions), p = rep.accuracy;
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2 * nn)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
    rep.wilson_lo = center - half;
    rep.wilson_hi = center + half;
    return rep;
}

TranscriptAdversary lowweight_transcript_adversary(learner::LowWeightOptions opt) {
    return [opt](const Transcript& tr) -> int {
        if (tr.msg2.space != LabelSpace::vector_np1) return 0;
        std::vector<std::pair<ModalityY, LabelZ>> pairs;
        pairs.reserve(tr.msg1.ys.size());
        for (std::size_t i = 0; i < tr.msg1.ys.size() && i < tr.msg2.zs.size(); ++i)
            pairs.emplace_back(tr.msg1.ys[i], tr.msg2.zs[i]);
        const auto outcome = learner::lowweight_attack(pairs, tr.n, opt);
        return outcome.secret.has_value() ? 1 : 0;
    };
}

} // namespace msep::protocol
