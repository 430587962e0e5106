#include "msep/reductions.hpp"

#include <atomic>

namespace msep::reductions {

using learner::predict;
using taskgen::apply_psi;
using taskgen::sample_zeta;

PlantedAwareCheat::PlantedAwareCheat(BitVec planted_secret, double theta)
    : s_(std::move(planted_secret)), theta_(theta) {}

Hypothesis PlantedAwareCheat::train(
    std::span<const std::pair<ModalityY, LabelZ>> pairs, Rng& rng) {
    const std::size_t n = s_.size();
    const std::size_t probe = std::min<std::size_t>(pairs.size(), 64);
    std::size_t residual = 0;
    for (std::size_t i = 0; i < probe; ++i) {
        const auto& y = pairs[i].first;
        residual += gf2::hamming(y.yvec, gf2::row_times_matrix(s_, y.A));
    }
    const double mean = static_cast<double>(residual) /
                        (static_cast<double>(probe) * static_cast<double>(n));
    // planted blocks sit near theta + 1/n, uniform ones near 1/2
    const double threshold = (theta_ + 1.0 / static_cast<double>(n) + 0.5) / 2.0;
    if (mean <= threshold && concept_) return Hypothesis{concept_->w};
    return Hypothesis{gf2::bernoulli_vec(n, theta_, rng)};
}

DlpnDistinguisher build_dlpn_distinguisher(
    std::shared_ptr<UnimodalLearner> learner, TaskParams params,
    ReductionBudget budget, const Rng& base,
    std::function<void(const Secret&)> concept_spy) {
    if (budget.m_train == 0) budget.m_train = params.k;
    auto invocation = std::make_shared<std::atomic<std::uint64_t>>(0);

    return [learner = std::move(learner), params, budget, base,
            spy = std::move(concept_spy),
            invocation](const BitMatrix& a, const BitVec& q) -> int {
        const std::size_t n = params.n;
        const std::size_t need = budget.blocks() * n;
        if (a.rows() != n || a.cols() != q.size() || q.size() < need)
            throw DimensionError("dlpn distinguisher: instance too short for blocks");

        Rng rng = base.derive("dlpn-run", invocation->fetch_add(1));
        const Secret psi = sample_zeta(params, rng);
        if (spy) spy(psi);

        std::vector<std::pair<ModalityY, LabelZ>> blocks;
        blocks.reserve(budget.blocks());
        for (std::size_t t = 0; t < budget.blocks(); ++t) {
            ModalityY y;
            y.A = a.columns(t * n, n);
            y.yvec = q.slice(t * n, n);
            y.yvec.flip(rng.uniform_below(n)); // stands in for e^(i)
            LabelZ z = apply_psi(params, psi, y, rng);
            blocks.emplace_back(std::move(y), std::move(z));
        }

        const std::span<const std::pair<ModalityY, LabelZ>> all(blocks);
        const Hypothesis h = learner->train(all.subspan(0, budget.m_train), rng);

        std::uint64_t diff = 0;
        for (std::size_t t = budget.m_train; t < budget.blocks(); ++t) {
            const auto& [y, z] = blocks[t];
            const LabelZ pred = predict(h, y);
            diff += gf2::hamming(pred.zvec, z.zvec) + (pred.zbit != z.zbit ? 1 : 0);
        }
        const double frac = static_cast<double>(diff) /
                            static_cast<double>(budget.p_eval() * (n + 1));
        return frac <= budget.accept_threshold() ? 1 : 0;
    };
}

std::vector<std::pair<ModalityY, LabelZ>> sample_hybrid(std::size_t j, std::size_t k,
                                                        const BimodalTask& task,
                                                        const Secret& psi,
                                                        Rng& rng) {
    if (j > k + 1) throw DimensionError("sample_hybrid: j out of range");
    std::vector<std::pair<ModalityY, LabelZ>> out;
    out.reserve(k + 1);
    for (std::size_t p = 0; p <= k; ++p) {
        auto [x, y] = task.sample_unlabeled(rng);
        LabelZ z = p < j ? task.label(psi, y, rng) : task.uniform_label(rng);
        out.emplace_back(std::move(y), std::move(z));
    }
    return out;
}

int predictor_pmu(const TranscriptDistinguisher& dprime, const BimodalTask& task,
                  std::span<const DataPoint> train, const ModalityX& /*x_star*/,
                  const ModalityY& y_star, Rng& rng) {
    if (task.label_space() != taskgen::LabelSpace::binary)
        throw ConfigError("predictor_pmu: only binary label spaces are supported");
    const std::size_t k = train.size();
    const std::size_t j = rng.uniform_below(k + 1);

    std::vector<std::pair<ModalityY, LabelZ>> s;
    s.reserve(k + 1);
    for (std::size_t p = 0; p < j; ++p) s.emplace_back(train[p].y, train[p].z);
    const int b_j = rng.next_bit();
    s.emplace_back(y_star, LabelZ{BitVec(), static_cast<std::uint8_t>(b_j)});
    for (std::size_t p = j; p < k; ++p)
        s.emplace_back(train[p].y, task.uniform_label(rng));

    return dprime(s) ^ b_j;
}

std::vector<double> HybridTable::rates() const {
    std::vector<double> out(accept_counts.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<double>(accept_counts[i]) / static_cast<double>(trials);
    return out;
}

std::vector<std::int64_t> HybridTable::count_diffs() const {
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i + 1 < accept_counts.size(); ++i)
        out.push_back(static_cast<std::int64_t>(accept_counts[i + 1]) -
                      static_cast<std::int64_t>(accept_counts[i]));
    return out;
}

double HybridTable::mean_diff() const {
    const auto d = count_diffs();
    std::int64_t sum = 0;
    for (std::int64_t x : d) sum += x;
    return static_cast<double>(sum) /
           (static_cast<double>(d.size()) * static_cast<double>(trials));
}

double HybridTable::end_gap() const {
    return (static_cast<double>(accept_counts.back()) -
            static_cast<double>(accept_counts.front())) /
           static_cast<double>(trials);
}

HybridTable hybrid_advantage(const TranscriptDistinguisher& dprime,
                             const BimodalTask& task, const Secret& psi,
                             std::size_t k, std::uint64_t trials, Rng& rng) {
    if (trials < 1) throw ConfigError("hybrid_advantage: trials must be positive");
    HybridTable table;
    table.trials = trials;
    table.accept_counts.assign(k + 2, 0);
    for (std::size_t j = 0; j <= k + 1; ++j) {
        for (std::uint64_t t = 0; t < trials; ++t) {
            auto s = sample_hybrid(j, k, task, psi, rng);
            table.accept_counts[j] += static_cast<std::uint64_t>(dprime(s) != 0);
        }
    }
    return table;
}

} // namespace msep::reductions
