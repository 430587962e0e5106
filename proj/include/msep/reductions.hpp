#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "msep/learner.hpp"
#include "msep/taskgen.hpp"

namespace msep::reductions {

using gf2::BitMatrix;
using gf2::BitVec;
using gf2::Rng;
using learner::Hypothesis;
using taskgen::BimodalTask;
using taskgen::DataPoint;
using taskgen::LabelZ;
using taskgen::ModalityX;
using taskgen::ModalityY;
using taskgen::Secret;
using taskgen::TaskParams;

/// A learner restricted to the (Y, Z) projection.
class UnimodalLearner {
public:
    virtual ~UnimodalLearner() = default;
    virtual Hypothesis train(std::span<const std::pair<ModalityY, LabelZ>> pairs,
                             Rng& rng) = 0;
};

/// Returns a Ber(theta)-distributed hypothesis regardless of the data.
class RandomHypothesisLearner final : public UnimodalLearner {
public:
    RandomHypothesisLearner(std::size_t n, double theta) : n_(n), theta_(theta) {}
    Hypothesis train(std::span<const std::pair<ModalityY, LabelZ>>, Rng& rng) override {
        return Hypothesis{gf2::bernoulli_vec(n_, theta_, rng)};
    }

private:
    std::size_t n_;
    double theta_;
};

/// Harness oracle standing in for a successful unimodal learner. It holds the
/// instance's planted secret s and receives the distinguisher's concept via
/// the spy hook; train() returns that concept when the pairs are consistent
/// with s (each masked vector close to s * Y_i) and a random hypothesis
/// otherwise, so it succeeds exactly in the planted world.
class PlantedAwareCheat final : public UnimodalLearner {
public:
    PlantedAwareCheat(BitVec planted_secret, double theta);
    void receive_concept(const Secret& c) { concept_ = c; }
    Hypothesis train(std::span<const std::pair<ModalityY, LabelZ>> pairs,
                     Rng& rng) override;

private:
    BitVec s_;
    double theta_;
    std::optional<Secret> concept_;
};

/// Concrete stand-ins for the asymptotic budgets: t_budget plays t(n), the
/// distinguisher tests on t_budget^3 fresh blocks, and m_train plays m(n).
struct ReductionBudget {
    std::size_t t_budget = 20;
    std::size_t m_train = 0;

    std::size_t p_eval() const { return t_budget * t_budget * t_budget; }
    std::size_t blocks() const { return m_train + p_eval(); }
    double accept_threshold() const {
        return 0.5 - 1.0 / (2.0 * static_cast<double>(t_budget));
    }
};

/// Distinguishers see the raw (A, q) pair only; instance metadata such as the
/// world tag never reaches them.
using DlpnDistinguisher = std::function<int(const BitMatrix& a, const BitVec& q)>;

/// Builds the learner->distinguisher reduction. The returned callable slices
/// (A, q) into contiguous n-column blocks (Y_i, y_i), negates one random bit
/// of each y_i, labels every block with one freshly drawn concept, trains the
/// learner on the first m_train blocks and accepts iff the hypothesis'
/// normalized disagreement on the remaining p_eval blocks is at most
/// 1/2 - 1/(2 t_budget).
///
/// concept_spy, when set, receives the drawn concept before training; it
/// exists so test oracles can be handed the concept, and is never wired in
/// production paths.
DlpnDistinguisher build_dlpn_distinguisher(
    std::shared_ptr<UnimodalLearner> learner, TaskParams params,
    ReductionBudget budget, const Rng& base,
    std::function<void(const Secret&)> concept_spy = {});

/// Hybrid transcript distribution H_j over k+1 (y, label) pairs: positions
/// before j carry true labels, positions at or after j carry uniform labels.
/// H_0 is all-uniform, H_{k+1} all-real.
std::vector<std::pair<ModalityY, LabelZ>> sample_hybrid(std::size_t j, std::size_t k,
                                                        const BimodalTask& task,
                                                        const Secret& psi,
                                                        Rng& rng);

using TranscriptDistinguisher =
    std::function<int(std::span<const std::pair<ModalityY, LabelZ>>)>;

/// Distinguisher-to-predictor reduction for binary label spaces: picks a
/// uniform hybrid index j, plants (y*, b_j) with a uniform bit b_j at slot j
/// among the k training samples, and outputs D'(s') + b_j mod 2.
int predictor_pmu(const TranscriptDistinguisher& dprime, const BimodalTask& task,
                  std::span<const DataPoint> train, const ModalityX& x_star,
                  const ModalityY& y_star, Rng& rng);

/// Per-hybrid acceptance estimates. Counts are kept as integers so the
/// telescoping identity holds exactly.
struct HybridTable {
    std::uint64_t trials = 0;
    std::vector<std::uint64_t> accept_counts; // index j in [0, k+1]

    std::vector<double> rates() const;
    /// diffs[j] = rate(j+1) - rate(j), as exact count differences.
    std::vector<std::int64_t> count_diffs() const;
    double mean_diff() const;
    /// rate(k+1) - rate(0).
    double end_gap() const;
};

HybridTable hybrid_advantage(const TranscriptDistinguisher& dprime,
                             const BimodalTask& task, const Secret& psi,
                             std::size_t k, std::uint64_t trials, Rng& rng);

} // namespace msep::reductions
