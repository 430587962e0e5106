#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "msep/learner.hpp"
#include "msep/taskgen.hpp"

namespace msep::protocol {

using gf2::BitVec;
using gf2::Rng;
using learner::Hypothesis;
using taskgen::BimodalTask;
using taskgen::DataPoint;
using taskgen::LabelSpace;
using taskgen::LabelZ;
using taskgen::ModalityX;
using taskgen::ModalityY;

// --- wire format -------------------------------------------------------------
//
// Length-prefixed frames over any byte stream: u32 big-endian length counting
// tag plus payload, u8 tag, payload. Integers inside payloads are
// little-endian; bit fields use the dataset byte layout (LSB first).

enum : std::uint8_t { kTagMsg1 = 1, kTagMsg2 = 2, kTagExtractorSeed = 3 };

struct Frame {
    std::uint8_t tag = 0;
    std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);
/// Consumes one frame from bytes starting at offset; advances offset.
Frame decode_frame(std::span<const std::uint8_t> bytes, std::size_t& offset);
void write_frame(std::ostream& os, const Frame& f);
Frame read_frame(std::istream& is);

/// First message: the k+1 unlabeled second-modality elements.
struct Msg1 {
    std::size_t n = 0;
    std::vector<ModalityY> ys;
    bool operator==(const Msg1&) const = default;
};

/// Second message: the k+1 labels (full vectors or single bits).
struct Msg2 {
    std::size_t n = 0;
    LabelSpace space = LabelSpace::vector_np1;
    std::vector<LabelZ> zs;
    bool operator==(const Msg2&) const = default;
};

Frame encode_msg1(const Msg1& m);
Frame encode_msg2(const Msg2& m);
Frame encode_seed(const BitVec& seed);
Msg1 decode_msg1(const Frame& f);
Msg2 decode_msg2(const Frame& f);
BitVec decode_seed(const Frame& f);

// --- sessions ----------------------------------------------------------------

enum class DecisionKind { exact, threshold };

/// Alice's output rule: `exact` compares the predicted label bit-for-bit;
/// `threshold` accepts when the normalized disagreement is at most tau.
struct DecisionRule {
    DecisionKind kind = DecisionKind::threshold;
    double tau = 0.25;
};

/// Everything an eavesdropper sees: the wire bytes, plus parsed views and a
/// parameter echo for convenience. Bob's bit and Alice's x's never appear.
struct Transcript {
    std::uint64_t session_id = 0;
    std::size_t n = 0;
    double theta = 0.0;
    std::size_t k = 0;
    Msg1 msg1;
    Msg2 msg2;
    std::vector<std::uint8_t> wire_bytes;
};

struct SessionResult {
    int b_a = 0;
    int b_b = 0;
    double alice_disagreement = 0.0;
    DecisionRule rule;
};

struct AliceState {
    std::size_t k = 0;
    std::vector<ModalityX> xs; // retained locally, never sent
    std::vector<ModalityY> ys;
};

/// Fragment of the session result visible to Alice alone.
struct AliceDecision {
    int b_a = 0;
    double disagreement = 0.0;
};

using BimodalLearnerFn =
    std::function<Hypothesis(std::span<const DataPoint>, std::size_t n)>;

/// Default learner for vector-label tasks (the majority-vote learner).
/// Binary-label tasks must inject their own.
BimodalLearnerFn default_learner(const BimodalTask& task);

std::pair<AliceState, Msg1> alice_round1(const BimodalTask& task, std::size_t k,
                                         Rng& rng);

/// Bob flips b_B; on 1 he labels with a fresh concept, on 0 with
/// coordinatewise-uniform labels.
std::pair<int, Msg2> bob_round2(const BimodalTask& task, const Msg1& msg1, Rng& rng);

AliceDecision alice_finish(const BimodalTask& task, const AliceState& state,
                           const Msg2& msg2, const DecisionRule& rule,
                           const BimodalLearnerFn& learner = {});

std::pair<SessionResult, Transcript> run_ba_session(const BimodalTask& task,
                                                    std::size_t k,
                                                    const DecisionRule& rule, Rng& rng,
                                                    const BimodalLearnerFn& learner = {});

// --- key agreement -----------------------------------------------------------

struct KaResult {
    BitVec key_a, key_b;
    std::size_t raw_bit_errors = 0;
    BitVec extractor_seed;
    std::size_t sessions = 0;
};

/// Toeplitz extractor: out = T * raw over Z_2 where T_{i,j} = seed[m-1+i-j]
/// for m = |raw|. Needs |seed| = |raw| + out_len - 1.
BitVec toeplitz_extract(const BitVec& raw, const BitVec& seed, std::size_t out_len);

/// Parallel repetition plus privacy amplification. Bob's raw key is his m
/// session bits, Alice's hers; both apply the same public-seed extractor.
/// No reconciliation happens: raw disagreement surfaces as key mismatch.
std::pair<KaResult, std::vector<Transcript>> run_ka(
    const BimodalTask& task, std::size_t k, std::size_t m_sessions, std::size_t key_len,
    const DecisionRule& rule, Rng& rng, const BimodalLearnerFn& learner = {},
    bool keep_transcripts = true);

// --- eavesdropper harness ------------------------------------------------------

using TranscriptAdversary = std::function<int(const Transcript&)>;

struct AdversaryReport {
    std::size_t sessions = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    double wilson_lo = 0.0, wilson_hi = 1.0;
};

AdversaryReport adversary_harness(const TranscriptAdversary& adversary,
                                  const BimodalTask& task, std::size_t k,
                                  std::size_t sessions, const DecisionRule& rule,
                                  Rng& rng, const BimodalLearnerFn& learner = {});

/// Built-in adversary: runs the low-weight attack on the (Y, zvec) pairs in
/// the transcript and guesses 1 iff a secret is found.
TranscriptAdversary lowweight_transcript_adversary(learner::LowWeightOptions opt);

} // namespace msep::protocol
