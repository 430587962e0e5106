#include "msep/taskgen.hpp"

#include <cmath>

namespace msep::taskgen {

using gf2::basis_vec;
using gf2::bernoulli_vec;
using gf2::inner;
using gf2::matrix_times_col;
using gf2::row_times_matrix;
using gf2::uniform_matrix;
using gf2::uniform_vec;
using gf2::xor_add;
using gf2::xor_into;

TaskParams TaskParams::with_defaults(std::size_t n) {
    TaskParams p;
    p.n = n;
    p.theta = 1.0 / std::sqrt(static_cast<double>(n));
    p.k = n * n * n;
    return p;
}

TaskParams TaskParams::ci_scale(std::size_t n, double c) {
    TaskParams p = with_defaults(n);
    p.k = static_cast<std::size_t>(c * static_cast<double>(n) * static_cast<double>(n) *
                                   std::log(static_cast<double>(n)));
    if (p.k == 0) p.k = 1;
    return p;
}

void TaskParams::validate() const {
    if (n < 2) throw ConfigError("TaskParams: n must be at least 2");
    if (!(theta >= 0.0) || theta >= 0.5)
        throw ConfigError("TaskParams: theta must lie in [0, 0.5)");
    if (k < 1) throw ConfigError("TaskParams: k must be at least 1");
}

ModalityX sample_chi(const TaskParams& params, Rng& rng) {
    ModalityX x;
    x.idx = rng.uniform_below(params.n);
    x.xvec = bernoulli_vec(params.n, params.theta, rng);
    return x;
}

ModalityY apply_phi(const TaskParams& params, const ModalityX& x, Rng& rng,
                    PhiTrace* trace) {
    if (x.xvec.size() != params.n || x.idx >= params.n)
        throw DimensionError("apply_phi: x does not match params");
    ModalityY y;
    y.A = uniform_matrix(params.n, params.n, rng);
    BitVec b = bernoulli_vec(params.n, params.theta, rng);
    y.yvec = row_times_matrix(x.xvec, y.A);
    xor_into(y.yvec, b);
    y.yvec.flip(x.idx);
    if (trace) trace->b = std::move(b);
    return y;
}

Secret sample_zeta(const TaskParams& params, Rng& rng) {
    return Secret{bernoulli_vec(params.n, params.theta, rng)};
}

LabelZ apply_psi(const TaskParams& params, const Secret& secret,
                 const ModalityY& y, Rng& rng, PsiTrace* trace) {
    if (secret.w.size() != params.n || y.yvec.size() != params.n ||
        y.A.rows() != params.n || y.A.cols() != params.n)
        throw DimensionError("apply_psi: shapes do not match params");
    LabelZ z;
    BitVec b_col = bernoulli_vec(params.n, params.theta, rng);
    const std::uint8_t b_bit = rng.bernoulli(params.theta) ? 1 : 0;
    z.zvec = matrix_times_col(y.A, secret.w);
    xor_into(z.zvec, b_col);
    z.zbit = static_cast<std::uint8_t>(inner(y.yvec, secret.w) ^ b_bit);
    if (trace) {
        trace->b_col = std::move(b_col);
        trace->b_bit = b_bit;
    }
    return z;
}

std::vector<DataPoint> sample_dataset(const TaskParams& params, const Secret& secret,
                                      std::size_t count, const Rng& base) {
    if (count == 0) throw ConfigError("sample_dataset: count must be positive");
    std::vector<DataPoint> out;
    out.reserve(count);
    for_each_sample(params, secret, count, base,
                    [&](DataPoint&& p) { out.push_back(std::move(p)); });
    return out;
}

std::vector<std::pair<ModalityY, LabelZ>> project_yz(std::span<const DataPoint> dataset) {
    if (dataset.empty()) throw DimensionError("project_yz: empty dataset");
    std::vector<std::pair<ModalityY, LabelZ>> out;
    out.reserve(dataset.size());
    for (const DataPoint& p : dataset) out.emplace_back(p.y, p.z);
    return out;
}

std::vector<std::pair<ModalityX, LabelZ>> project_xz(std::span<const DataPoint> dataset) {
    if (dataset.empty()) throw DimensionError("project_xz: empty dataset");
    std::vector<std::pair<ModalityX, LabelZ>> out;
    out.reserve(dataset.size());
    for (const DataPoint& p : dataset) out.emplace_back(p.x, p.z);
    return out;
}

DlpnInstance sample_dlpn(std::size_t n, std::size_t m, double theta,
                         SecretMode secret_mode, World world, Rng& rng) {
    if (m < 1) throw ConfigError("sample_dlpn: m must be positive");
    DlpnInstance inst;
    inst.world = world;
    inst.secret_mode = secret_mode;
    inst.A = uniform_matrix(n, m, rng);
    if (world == World::planted) {
        inst.secret = secret_mode == SecretMode::uniform_secret
                          ? uniform_vec(n, rng)
                          : bernoulli_vec(n, theta, rng);
        inst.q = row_times_matrix(inst.secret, inst.A);
        xor_into(inst.q, bernoulli_vec(m, theta, rng));
    } else {
        inst.q = uniform_vec(m, rng);
    }
    return inst;
}

LabelZ BimodalTask::uniform_label(Rng& rng) const {
    LabelZ z;
    if (label_space() == LabelSpace::vector_np1) z.zvec = uniform_vec(n(), rng);
    z.zbit = static_cast<std::uint8_t>(rng.next_bit());
    return z;
}

DataPoint BimodalTask::sample_point(const Secret& psi, Rng& rng) const {
    auto [x, y] = sample_unlabeled(rng);
    LabelZ z = label(psi, y, rng);
    return DataPoint{std::move(x), std::move(y), std::move(z)};
}

Secret LpnVectorTask::sample_concept(Rng& rng) const { return sample_zeta(params_, rng); }

std::pair<ModalityX, ModalityY> LpnVectorTask::sample_unlabeled(Rng& rng) const {
    ModalityX x = sample_chi(params_, rng);
    ModalityY y = apply_phi(params_, x, rng);
    return {std::move(x), std::move(y)};
}

LabelZ LpnVectorTask::label(const Secret& psi, const ModalityY& y, Rng& rng) const {
    return apply_psi(params_, psi, y, rng);
}

Secret ToyParityTask::sample_concept(Rng& rng) const {
    return Secret{uniform_vec(n_, rng)};
}

std::pair<ModalityX, ModalityY> ToyParityTask::sample_unlabeled(Rng& rng) const {
    ModalityX x;
    x.xvec = uniform_vec(n_, rng);
    x.idx = 0;
    ModalityY y;
    y.yvec = x.xvec;
    return {std::move(x), std::move(y)};
}

LabelZ ToyParityTask::label(const Secret& psi, const ModalityY& y, Rng& rng) const {
    if (y.yvec.size() != n_) throw DimensionError("ToyParityTask::label: bad y");
    LabelZ z;
    z.zbit = static_cast<std::uint8_t>(inner(y.yvec, psi.w) ^
                                       (rng.bernoulli(theta_) ? 1 : 0));
    return z;
}

} // namespace msep::taskgen
