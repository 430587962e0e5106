#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "msep/taskgen.hpp"

namespace msep::learner {

using gf2::BitVec;
using gf2::Rng;
using taskgen::DataPoint;
using taskgen::LabelZ;
using taskgen::ModalityY;
using taskgen::Secret;

struct Hypothesis {
    BitVec w_hat;
    bool operator==(const Hypothesis&) const = default;
};

/// Per-bin vote tallies from the majority-vote learner.
struct VoteStats {
    std::vector<std::uint64_t> ones;
    std::vector<std::uint64_t> zeros;
    std::size_t min_bin_size = 0;
    bool has_empty_bin = false;

    std::uint64_t total_votes() const;
    std::uint64_t bin_size(std::size_t i) const { return ones[i] + zeros[i]; }
};

// ---------------------------------------------------------------------------
// Majority-vote learner. Each point contributes the vote
//   alpha = <xvec, zvec> + zbit
// to the bin selected by its hidden index; w_hat_i is the majority of bin i.
// The accumulator form lets large runs stream points without materializing
// the dataset.
// ---------------------------------------------------------------------------
class VoteAccumulator {
public:
    explicit VoteAccumulator(std::size_t n);

    void add(const DataPoint& p);
    void add_vote(std::size_t idx, int alpha);

    /// Empty bins yield w_hat_i = 0 and set has_empty_bin; never fatal.
    std::pair<Hypothesis, VoteStats> finish() const;

private:
    std::size_t n_;
    std::vector<std::uint64_t> ones_, zeros_;
};

std::pair<Hypothesis, VoteStats> learn_amu(std::span<const DataPoint> dataset,
                                           std::size_t n);

/// Noise-free prediction (A * w_hat, <yvec, w_hat>). For an empty A the
/// vector part is empty (binary label space).
LabelZ predict(const Hypothesis& h, const ModalityY& y);

enum class Loss { l0, l01 };

/// Mean loss over the test set. l0 averages per-coordinate disagreement over
/// the whole label; l01 is the exact-match indicator.
double empirical_risk(const Hypothesis& h,
                      std::span<const std::pair<ModalityY, LabelZ>> test, Loss loss);

// ---------------------------------------------------------------------------
// Hardness probes. Both attacks see only the (Y, Z) projection and treat the
// rows of each zvec as noisy linear equations in the secret.
// ---------------------------------------------------------------------------

struct LowWeightOptions {
    std::size_t max_weight = 6;
    /// Candidate-evaluation budget; exceeding it aborts the enumeration and
    /// reports budget_exceeded instead of an answer.
    std::uint64_t budget = 4000;
    /// Accept the best candidate only if its normalized disagreement is below
    /// 0.5 * (1 - margin).
    double margin = 0.2;
    /// Score against at most this many pairs (0 = all).
    std::size_t max_pairs = 0;
};

struct LowWeightOutcome {
    std::optional<Secret> secret;
    std::uint64_t evaluated = 0;
    bool budget_exceeded = false;
    double best_score = 1.0;
};

LowWeightOutcome lowweight_attack(std::span<const std::pair<ModalityY, LabelZ>> pairs,
                                  std::size_t n, const LowWeightOptions& opt);

struct GaussOptions {
    std::size_t trials = 10000;
    double theta = 0.25;
    /// Held-out equations used to validate a candidate solution.
    std::size_t validate_rows = 512;
};

struct GaussOutcome {
    std::optional<Secret> secret;
    std::size_t restarts_used = 0;
    std::size_t singular_restarts = 0;
};

/// Information-set decoding probe: repeatedly samples n equations, solves by
/// elimination, and keeps a solution that validates on held-out equations.
/// Requires at least 2n equations in the pool.
GaussOutcome gauss_attack(std::span<const std::pair<ModalityY, LabelZ>> pairs,
                          std::size_t n, const GaussOptions& opt, Rng& rng);

// ---------------------------------------------------------------------------
// Binary-label hypothesis negation: if validation risk exceeds 0.5 + margin,
// flip all predictions. Not applicable to vector labels.
// ---------------------------------------------------------------------------
using BinaryPredictor = std::function<int(const ModalityY&)>;

struct NegationResult {
    BinaryPredictor predictor;
    bool negated = false;
    double validation_risk = 0.0;
};

NegationResult negate_if_bad(BinaryPredictor predictor,
                             std::span<const std::pair<ModalityY, LabelZ>> validation,
                             double margin = 0.05);

} // namespace msep::learner
