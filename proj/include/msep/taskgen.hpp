#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "msep/gf2.hpp"

namespace msep::taskgen {

using gf2::BitMatrix;
using gf2::BitVec;
using gf2::Rng;

// ---------------------------------------------------------------------------
// Task family knobs. theta defaults to n^-0.5 and k to n^3; k can be scaled
// down to c * n^2 * ln(n) for fast runs.
// ---------------------------------------------------------------------------
struct TaskParams {
    std::size_t n = 0;
    double theta = 0.0;
    std::size_t k = 0;

    static TaskParams with_defaults(std::size_t n);
    static TaskParams ci_scale(std::size_t n, double c = 8.0);

    /// n >= 2, theta in [0, 0.5), k >= 1. theta == 0 is admitted for
    /// noise-free diagnostics.
    void validate() const;
};

/// Planted concept: w with entries drawn Ber(theta).
struct Secret {
    BitVec w;
    bool operator==(const Secret&) const = default;
};

/// First modality: sparse vector plus hidden index.
struct ModalityX {
    BitVec xvec;
    std::size_t idx = 0;
    bool operator==(const ModalityX&) const = default;
};

/// Second modality: matrix plus masked vector. A binary-label task leaves A
/// empty (0 x 0) and uses yvec alone.
struct ModalityY {
    BitMatrix A;
    BitVec yvec;
    bool operator==(const ModalityY&) const = default;
};

/// Label: n-bit vector plus one bit. Binary-label tasks leave zvec empty.
struct LabelZ {
    BitVec zvec;
    std::uint8_t zbit = 0;
    bool operator==(const LabelZ&) const = default;
};

struct DataPoint {
    ModalityX x;
    ModalityY y;
    LabelZ z;
    bool operator==(const DataPoint&) const = default;
};

// Test-only transparency hooks: expose the noise draws so that algebraic
// identities can be asserted. Production paths pass nullptr.
struct PhiTrace {
    BitVec b;
};
struct PsiTrace {
    BitVec b_col;
    std::uint8_t b_bit = 0;
};

/// x ~ Ber(theta)^n, idx uniform on [0, n).
ModalityX sample_chi(const TaskParams& params, Rng& rng);

/// (A, x*A + b + e^(idx)) with A fresh uniform and b ~ Ber(theta)^n.
ModalityY apply_phi(const TaskParams& params, const ModalityX& x, Rng& rng,
                    PhiTrace* trace = nullptr);

/// w ~ Ber(theta)^n.
Secret sample_zeta(const TaskParams& params, Rng& rng);

/// (A*w + b', <y, w> + b'') with fresh b', b''.
LabelZ apply_psi(const TaskParams& params, const Secret& secret,
                 const ModalityY& y, Rng& rng, PsiTrace* trace = nullptr);

/// Visit count i.i.d. points under a fixed secret. The base rng is used by
/// identity only: samples are partitioned into fixed-size chunks, chunk c
/// drawn from base.derive("chunk", c), so the stream is independent of the
/// caller's rng state and of any parallel schedule.
template <typename Fn>
void for_each_sample(const TaskParams& params, const Secret& secret,
                     std::size_t count, const Rng& base, Fn&& fn) {
    constexpr std::size_t kChunk = 4096;
    for (std::size_t done = 0; done < count; done += kChunk) {
        Rng r = base.derive("chunk", done / kChunk);
        const std::size_t stop = std::min(count, done + kChunk);
        for (std::size_t i = done; i < stop; ++i) {
            ModalityX x = sample_chi(params, r);
            ModalityY y = apply_phi(params, x, r);
            LabelZ z = apply_psi(params, secret, y, r);
            fn(DataPoint{std::move(x), std::move(y), std::move(z)});
        }
    }
}

/// Materialized dataset; count must be positive.
std::vector<DataPoint> sample_dataset(const TaskParams& params, const Secret& secret,
                                      std::size_t count, const Rng& base);

std::vector<std::pair<ModalityY, LabelZ>> project_yz(std::span<const DataPoint> dataset);
std::vector<std::pair<ModalityX, LabelZ>> project_xz(std::span<const DataPoint> dataset);

// ---------------------------------------------------------------------------
// Decisional-LPN instances. world and secret are harness metadata: tests and
// generators may read them, but anything under evaluation sees only (A, q).
// ---------------------------------------------------------------------------
enum class World { planted, uniform };
enum class SecretMode { uniform_secret, bernoulli_secret };

struct DlpnInstance {
    BitMatrix A; // n x m
    BitVec q;    // 1 x m
    World world = World::planted;
    SecretMode secret_mode = SecretMode::bernoulli_secret;
    BitVec secret; // empty in the uniform world
};

DlpnInstance sample_dlpn(std::size_t n, std::size_t m, double theta,
                         SecretMode secret_mode, World world, Rng& rng);

// ---------------------------------------------------------------------------
// Generic task interface consumed by the agreement protocol and the
// reductions, so that any separation with this shape can be plugged in.
// The y -> z mapping is drawn per concept; the x -> y mapping is a fixed
// property of the task instance.
// ---------------------------------------------------------------------------
enum class LabelSpace { binary, vector_np1 };

class BimodalTask {
public:
    virtual ~BimodalTask() = default;

    virtual std::size_t n() const = 0;
    virtual LabelSpace label_space() const = 0;

    virtual Secret sample_concept(Rng& rng) const = 0;
    virtual std::pair<ModalityX, ModalityY> sample_unlabeled(Rng& rng) const = 0;
    virtual LabelZ label(const Secret& psi, const ModalityY& y, Rng& rng) const = 0;

    /// Coordinatewise-uniform element of the label space.
    LabelZ uniform_label(Rng& rng) const;

    DataPoint sample_point(const Secret& psi, Rng& rng) const;
};

/// The concrete vector-label task built from the samplers above.
class LpnVectorTask final : public BimodalTask {
public:
    explicit LpnVectorTask(TaskParams params) : params_(params) {}

    std::size_t n() const override { return params_.n; }
    LabelSpace label_space() const override { return LabelSpace::vector_np1; }
    Secret sample_concept(Rng& rng) const override;
    std::pair<ModalityX, ModalityY> sample_unlabeled(Rng& rng) const override;
    LabelZ label(const Secret& psi, const ModalityY& y, Rng& rng) const override;

    const TaskParams& params() const { return params_; }

private:
    TaskParams params_;
};

/// Binary-label parity task: y == x, label = <y, w> + Ber(theta). With
/// theta = 0 the labels are a deterministic function of y, which several
/// reduction tests rely on.
class ToyParityTask final : public BimodalTask {
public:
    ToyParityTask(std::size_t n, double theta) : n_(n), theta_(theta) {}

    std::size_t n() const override { return n_; }
    LabelSpace label_space() const override { return LabelSpace::binary; }
    Secret sample_concept(Rng& rng) const override;
    std::pair<ModalityX, ModalityY> sample_unlabeled(Rng& rng) const override;
    LabelZ label(const Secret& psi, const ModalityY& y, Rng& rng) const override;

private:
    std::size_t n_;
    double theta_;
};

} // namespace msep::taskgen
