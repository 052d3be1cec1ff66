#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace chernet {

/// Entries of generated or loaded observation models are clamped to
/// [kProbabilityFloor, 1 - kProbabilityFloor] so every divergence is finite.
inline constexpr double kProbabilityFloor = 1e-6;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InfiniteDivergenceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// All randomness in the library flows through this engine type. One stream
/// per sensor per trial; streams are never shared between threads.
using RandomStream = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mix.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Child seed for stream `index` under `parent`. Used for the whole seed
/// tree: master -> cell -> trial -> sensor.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
/// Unlike std::uniform_real_distribution the result is identical on every
/// standard library.
inline double uniform01(RandomStream& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Finite-alphabet probability distribution.
class Categorical {
public:
    Categorical() = default;
    explicit Categorical(std::vector<double> probs);

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t a) const { return probs_[a]; }
    std::span<const double> probs() const { return probs_; }

    static Categorical bernoulli(double p_one) { return Categorical({1.0 - p_one, p_one}); }

    /// Clamp every entry to [floor, 1 - floor] and renormalize.
    Categorical clamped(double floor = kProbabilityFloor) const;

private:
    std::vector<double> probs_;
};

/// D(p || q) in nats.
double kl_divergence(const Categorical& p, const Categorical& q);

/// Inverse-CDF draw; consumes exactly one engine output.
std::size_t sample(const Categorical& p, RandomStream& rng);

/// Index a sensor/action/hypothesis triple into a flat distribution table.
struct ModelShape {
    std::size_t hypotheses = 0;  // M
    std::size_t sensors = 0;     // L
    std::size_t actions = 0;     // K, equals M except for the fusion-center model
    std::size_t alphabet = 0;    // A
};

/// p_{i,l}^{u_k}: one categorical per (hypothesis, sensor, action).
///
/// Construction validates the model: entries at or above the probability
/// floor (so divergences are finite) and every hypothesis pair separated at
/// every sensor by at least one action.
class ObservationModel {
public:
    /// `floor_only` skips the separability check. Only degenerate test
    /// fixtures use it; the protocols assume the strict form.
    enum class Check { strict, floor_only };

    ObservationModel() = default;

    /// `dists` is ordered hypothesis-major: index ((i * L) + l) * K + k.
    ObservationModel(ModelShape shape, std::vector<Categorical> dists, Check check = Check::strict);

    const ModelShape& shape() const { return shape_; }
    std::size_t hypotheses() const { return shape_.hypotheses; }
    std::size_t sensors() const { return shape_.sensors; }
    std::size_t actions() const { return shape_.actions; }
    std::size_t alphabet() const { return shape_.alphabet; }

    const Categorical& dist(std::size_t hypothesis, std::size_t sensor, std::size_t action) const;

    /// ln p_{i,l}^{u_k}(a) for every hypothesis i, written into `out`.
    void log_likelihoods(std::size_t sensor, std::size_t action, std::size_t observation,
                         std::span<double> out) const;

    /// Precomputed ln p for the hot path; no range checks.
    double log_prob(std::size_t hypothesis, std::size_t sensor, std::size_t action,
                    std::size_t observation) const {
        return log_probs_[index(hypothesis, sensor, action) * shape_.alphabet + observation];
    }

    /// The single-sensor model seen by sensor `sensor` alone.
    ObservationModel restricted_to(std::size_t sensor) const;

private:
    std::size_t index(std::size_t i, std::size_t l, std::size_t k) const {
        return (i * shape_.sensors + l) * shape_.actions + k;
    }
    void validate(Check check) const;

    ModelShape shape_;
    std::vector<Categorical> dists_;
    std::vector<double> log_probs_;
};

/// Free-function form of ObservationModel::log_likelihoods.
std::vector<double> log_likelihoods(const ObservationModel& model, std::size_t sensor,
                                    std::size_t action, std::size_t observation);

}  // namespace chernet
