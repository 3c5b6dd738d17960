#pragma once

// Counter-based random streams (Philox4x32-10).  Every normal variate is a
// pure function of (seed, replicate, particle, role, step, component), so
// any entity can be re-simulated bit-identically regardless of how many
// threads consume other streams.  This is also what makes synchronous
// coupling exact: a mean-field copy reuses the particle's key and therefore
// sees the identical Wiener increments.
//
// Stream layout: one Philox block provides two standard normals via
// Box-Muller; component 2j and 2j+1 share block index j.

#include "enkbf/basis.hpp"
#include "enkbf/models.hpp"

#include <cstdint>

namespace enkbf {

enum class StreamRole : std::uint32_t {
    SignalNoise = 0,
    ObsNoise = 1,
    Init = 2,
};

// Entity id conventions (particle_id space is partitioned so the EnKBF
// ensemble, the reference signal and the mean-field oracle never collide):
inline constexpr std::uint32_t kReferenceParticleId = 0x0FFFFFFFu;
inline constexpr std::uint32_t kOracleParticleBase = 0x10000000u;
inline constexpr std::uint32_t kAuxParticleBase = 0x20000000u;

struct StreamKey {
    std::uint64_t experiment_seed = 0;
    std::uint32_t replicate_id = 0;
    std::uint32_t particle_id = 0;
    StreamRole role = StreamRole::SignalNoise;

    bool operator==(const StreamKey&) const = default;
};

// A derived stream: random access by (step, component).
class Stream {
public:
    explicit Stream(const StreamKey& key) : key_(key) {}

    const StreamKey& key() const { return key_; }

    // Standard normal for the given step/component (deterministic).
    double normal(std::uint32_t step, std::uint32_t component) const;

    // Fill out[0..n) with normals for components 0..n-1 of `step`.
    void fill_normals(std::uint32_t step, double* out, int n) const;

    // Uniform on (0,1], used by resampling code.
    double uniform(std::uint32_t step, std::uint32_t component) const;

private:
    StreamKey key_;
};

inline Stream derive_stream(const StreamKey& key) { return Stream(key); }

// Coefficient-space Q-Wiener increment over a step of size dt:
// component k is sqrt(q_k dt) xi_k with xi_k standard normal from the
// stream at (key, step, k).  dt <= 0 throws invalid_argument_error.
SpectralField sample_wiener_increment(const StreamKey& key,
                                      std::uint32_t step_index, double dt,
                                      const QSpectrum& Q);

} // namespace enkbf
