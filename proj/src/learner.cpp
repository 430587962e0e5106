#include "msep/learner.hpp"

#include <algorithm>
#include <bit>

namespace msep::learner {

using gf2::hamming;
using gf2::inner;
using gf2::majority_from_counts;
using gf2::matrix_times_col;

std::uint64_t VoteStats::total_votes() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < ones.size(); ++i) t += ones[i] + zeros[i];
    return t;
}

VoteAccumulator::VoteAccumulator(std::size_t n)
    : n_(n), ones_(n, 0), zeros_(n, 0) {}

void VoteAccumulator::add(const DataPoint& p) {
    if (p.x.xvec.size() != n_ || p.z.zvec.size() != n_ || p.x.idx >= n_)
        throw DimensionError("VoteAccumulator::add: point does not match n");
    add_vote(p.x.idx, inner(p.x.xvec, p.z.zvec) ^ p.z.zbit);
}

void VoteAccumulator::add_vote(std::size_t idx, int alpha) {
    if (idx >= n_) throw DimensionError("VoteAccumulator::add_vote: bad bin");
    if (alpha)
        ++ones_[idx];
    else
        ++zeros_[idx];
}

std::pair<Hypothesis, VoteStats> VoteAccumulator::finish() const {
    Hypothesis h{BitVec(n_)};
    VoteStats stats;
    stats.ones = ones_;
    stats.zeros = zeros_;
    stats.min_bin_size = SIZE_MAX;
    for (std::size_t i = 0; i < n_; ++i) {
        const std::uint64_t size = ones_[i] + zeros_[i];
        stats.min_bin_size = std::min<std::size_t>(stats.min_bin_size, size);
        if (size == 0) {
            stats.has_empty_bin = true;
            continue; // w_hat_i stays 0
        }
        if (majority_from_counts(ones_[i], zeros_[i])) h.w_hat.set(i, true);
    }
    if (n_ == 0) stats.min_bin_size = 0;
    return {std::move(h), std::move(stats)};
}

std::pair<Hypothesis, VoteStats> learn_amu(std::span<const DataPoint> dataset,
                                           std::size_t n) {
    if (dataset.empty()) throw DimensionError("learn_amu: empty dataset");
    VoteAccumulator acc(n);
    for (const DataPoint& p : dataset) acc.add(p);
    return acc.finish();
}

LabelZ predict(const Hypothesis& h, const ModalityY& y) {
    LabelZ z;
    if (y.A.rows() > 0) z.zvec = matrix_times_col(y.A, h.w_hat);
    z.zbit = static_cast<std::uint8_t>(inner(y.yvec, h.w_hat));
    return z;
}

double empirical_risk(const Hypothesis& h,
                      std::span<const std::pair<ModalityY, LabelZ>> test, Loss loss) {
    if (test.empty()) throw DimensionError("empirical_risk: empty test set");
    double sum = 0.0;
    for (const auto& [y, z] : test) {
        const LabelZ pred = predict(h, y);
        if (pred.zvec.size() != z.zvec.size())
            throw DimensionError("empirical_risk: label shape mismatch");
        const std::size_t bits = z.zvec.size() + 1;
        const std::size_t diff =
            hamming(pred.zvec, z.zvec) + (pred.zbit != z.zbit ? 1 : 0);
        if (loss == Loss::l0)
            sum += static_cast<double>(diff) / static_cast<double>(bits);
        else
            sum += diff > 0 ? 1.0 : 0.0;
    }
    return sum / static_cast<double>(test.size());
}

namespace {

// Disagreement of A_p * cand against zvec_p summed over the scored pairs.
std::uint64_t score_candidate(std::span<const std::pair<ModalityY, LabelZ>> pairs,
                              std::span<const std::uint64_t> cand,
                              std::size_t n_pairs) {
    std::uint64_t score = 0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        const auto& [y, z] = pairs[p];
        const auto& a = y.A;
        auto zw = z.zvec.words();
        const std::size_t wpr = a.words_per_row();
        for (std::size_t r = 0; r < a.rows(); ++r) {
            auto row = a.row(r);
            std::uint64_t acc = 0;
            for (std::size_t i = 0; i < wpr; ++i) acc ^= row[i] & cand[i];
            const int bit = std::popcount(acc) & 1;
            const int zbit = (zw[r >> 6] >> (r & 63)) & 1;
            score += static_cast<std::uint64_t>(bit ^ zbit);
        }
    }
    return score;
}

bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
    const std::size_t k = c.size();
    std::size_t i = k;
    while (i-- > 0) {
        if (c[i] < n - (k - i)) {
            ++c[i];
            for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

} // namespace

LowWeightOutcome lowweight_attack(std::span<const std::pair<ModalityY, LabelZ>> pairs,
                                  std::size_t n, const LowWeightOptions& opt) {
    if (pairs.empty()) throw DimensionError("lowweight_attack: no pairs");
    if (opt.max_weight > n)
        throw DimensionError("lowweight_attack: max_weight exceeds n");
    const std::size_t n_pairs =
        opt.max_pairs == 0 ? pairs.size() : std::min(opt.max_pairs, pairs.size());
    const std::uint64_t total_bits =
        static_cast<std::uint64_t>(n_pairs) * pairs[0].first.A.rows();

    LowWeightOutcome out;
    BitVec best(n);
    std::uint64_t best_score = UINT64_MAX;
    BitVec cand(n);

    for (std::size_t wt = 0; wt <= opt.max_weight; ++wt) {
        std::vector<std::size_t> supp(wt);
        for (std::size_t i = 0; i < wt; ++i) supp[i] = i;
        bool more = true;
        while (more) {
            if (out.evaluated >= opt.budget) {
                out.budget_exceeded = true;
                return out; // enumeration incomplete: no answer
            }
            std::fill(cand.words().begin(), cand.words().end(), 0);
            for (std::size_t i : supp) cand.set(i, true);
            const std::uint64_t s = score_candidate(pairs, cand.words(), n_pairs);
            ++out.evaluated;
            if (s < best_score) {
                best_score = s;
                best = cand;
            }
            more = wt > 0 && next_combination(supp, n);
            if (wt == 0) break;
        }
    }

    out.best_score = static_cast<double>(best_score) / static_cast<double>(total_bits);
    if (out.best_score < 0.5 * (1.0 - opt.margin)) out.secret = Secret{std::move(best)};
    return out;
}

namespace {

struct EquationPool {
    // Row r of pair p is the equation <A_p[r], w> = zvec_p[r].
    std::span<const std::pair<ModalityY, LabelZ>> pairs;
    std::size_t n = 0;

    std::size_t size() const { return pairs.size() * n; }
    std::span<const std::uint64_t> coeffs(std::size_t eq) const {
        return pairs[eq / n].first.A.row(eq % n);
    }
    int rhs(std::size_t eq) const {
        auto zw = pairs[eq / n].second.zvec.words();
        const std::size_t r = eq % n;
        return (zw[r >> 6] >> (r & 63)) & 1;
    }
};

// Gauss-Jordan over GF(2) on an n x n system with one rhs bit per row packed
// behind the coefficient words. Returns the solution or nullopt if singular.
std::optional<BitVec> solve_system(std::vector<std::vector<std::uint64_t>>& rows,
                                   std::vector<std::uint8_t>& rhs, std::size_t n) {
    const std::size_t wpr = (n + 63) / 64;
    std::size_t pivot_row = 0;
    std::vector<std::size_t> pivot_of_col(n, SIZE_MAX);
    for (std::size_t col = 0; col < n && pivot_row < n; ++col) {
        const std::size_t w = col >> 6;
        const std::uint64_t mask = 1ULL << (col & 63);
        std::size_t sel = SIZE_MAX;
        for (std::size_t r = pivot_row; r < n; ++r) {
            if (rows[r][w] & mask) {
                sel = r;
                break;
            }
        }
        if (sel == SIZE_MAX) continue;
        std::swap(rows[sel], rows[pivot_row]);
        std::swap(rhs[sel], rhs[pivot_row]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == pivot_row || !(rows[r][w] & mask)) continue;
            for (std::size_t i = 0; i < wpr; ++i) rows[r][i] ^= rows[pivot_row][i];
            rhs[r] ^= rhs[pivot_row];
        }
        pivot_of_col[col] = pivot_row;
        ++pivot_row;
    }
    if (pivot_row < n) return std::nullopt;
    BitVec sol(n);
    for (std::size_t col = 0; col < n; ++col)
        if (rhs[pivot_of_col[col]]) sol.set(col, true);
    return sol;
}

} // namespace

GaussOutcome gauss_attack(std::span<const std::pair<ModalityY, LabelZ>> pairs,
                          std::size_t n, const GaussOptions& opt, Rng& rng) {
    EquationPool pool{pairs, n};
    if (pool.size() < 2 * n)
        throw DimensionError("gauss_attack: need at least 2n equations");

    const std::size_t wpr = (n + 63) / 64;
    const double accept = (opt.theta + 0.5) / 2.0;
    GaussOutcome out;

    std::vector<std::size_t> ids(pool.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;

    std::vector<std::vector<std::uint64_t>> rows(n, std::vector<std::uint64_t>(wpr));
    std::vector<std::uint8_t> rhs(n);

    for (std::size_t t = 0; t < opt.trials; ++t) {
        ++out.restarts_used;
        // partial Fisher-Yates: the first n entries become the sampled set
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + rng.uniform_below(ids.size() - i);
            std::swap(ids[i], ids[j]);
            auto c = pool.coeffs(ids[i]);
            std::copy(c.begin(), c.end(), rows[i].begin());
            rhs[i] = static_cast<std::uint8_t>(pool.rhs(ids[i]));
        }
        auto sol = solve_system(rows, rhs, n);
        if (!sol) {
            ++out.singular_restarts;
            continue;
        }
        // validate on random held-out equations
        const std::size_t checks = std::min(opt.validate_rows, pool.size());
        std::size_t bad = 0;
        for (std::size_t c = 0; c < checks; ++c) {
            const std::size_t eq = rng.uniform_below(pool.size());
            auto coeffs = pool.coeffs(eq);
            std::uint64_t acc = 0;
            for (std::size_t i = 0; i < wpr; ++i) acc ^= coeffs[i] & sol->words()[i];
            bad += static_cast<std::size_t>((std::popcount(acc) & 1) != pool.rhs(eq));
        }
        if (static_cast<double>(bad) / static_cast<double>(checks) <= accept) {
            out.secret = Secret{std::move(*sol)};
            return out;
        }
    }
    return out;
}

NegationResult negate_if_bad(BinaryPredictor predictor,
                             std::span<const std::pair<ModalityY, LabelZ>> validation,
                             double margin) {
    if (validation.empty()) throw DimensionError("negate_if_bad: empty validation set");
    std::size_t wrong = 0;
    for (const auto& [y, z] : validation)
        wrong += static_cast<std::size_t>(predictor(y) != z.zbit);
    NegationResult res;
    res.validation_risk =
        static_cast<double>(wrong) / static_cast<double>(validation.size());
    if (res.validation_risk > 0.5 + margin) {
        res.negated = true;
        res.predictor = [inner = std::move(predictor)](const ModalityY& y) {
            return 1 - inner(y);
        };
    } else {
        res.predictor = std::move(predictor);
    }
    return res;
}

} // namespace msep::learner
