#include "enkbf/rng.hpp"

#include "enkbf/errors.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace enkbf {
namespace {

// Philox4x32-10 (Salmon et al.): four 32-bit counter lanes, two key words,
// ten rounds of multiply-hi/lo mixing with a Weyl key schedule.  Chosen
// because every (key, counter) block is computed independently: random
// access by step/component with no sequential state.
constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

struct Block {
    std::uint32_t x[4];
};

inline void philox_round(std::uint32_t* c, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = std::uint64_t(kPhiloxM4x32A) * c[0];
    const std::uint64_t p1 = std::uint64_t(kPhiloxM4x32B) * c[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32);
    const std::uint32_t lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32);
    const std::uint32_t lo1 = std::uint32_t(p1);
    const std::uint32_t n0 = hi1 ^ c[1] ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c[3] ^ k1;
    const std::uint32_t n3 = lo0;
    c[0] = n0;
    c[1] = n1;
    c[2] = n2;
    c[3] = n3;
}

Block philox(const StreamKey& key, std::uint32_t step, std::uint32_t block) {
    std::uint32_t k0 = std::uint32_t(key.experiment_seed);
    std::uint32_t k1 = std::uint32_t(key.experiment_seed >> 32);
    Block b;
    b.x[0] = key.replicate_id;
    b.x[1] = key.particle_id;
    b.x[2] = (std::uint32_t(key.role) << 28) | (block & 0x0FFFFFFFu);
    b.x[3] = step;
    for (int round = 0; round < 10; ++round) {
        philox_round(b.x, k0, k1);
        k0 += kPhiloxW32A;
        k1 += kPhiloxW32B;
    }
    return b;
}

// Uniform on (0,1] from a 64-bit word; computed in double so the all-ones
// word maps to exactly 1.0 instead of wrapping.
inline double to_unit(std::uint64_t x) {
    return (double(x) + 1.0) * 0x1p-64;
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return std::uint64_t(lo) | (std::uint64_t(hi) << 32);
}

// Two standard normals per block via Box-Muller.
inline std::array<double, 2> box_muller(const Block& b) {
    const double u1 = to_unit(join(b.x[0], b.x[1]));
    const double u2 = to_unit(join(b.x[2], b.x[3]));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

} // namespace

double Stream::normal(std::uint32_t step, std::uint32_t component) const {
    const Block b = philox(key_, step, component >> 1);
    const auto z = box_muller(b);
    return z[component & 1u];
}

void Stream::fill_normals(std::uint32_t step, double* out, int n) const {
    for (int j = 0; 2 * j < n; ++j) {
        const Block b = philox(key_, step, std::uint32_t(j));
        const auto z = box_muller(b);
        out[2 * j] = z[0];
        if (2 * j + 1 < n) out[2 * j + 1] = z[1];
    }
}

double Stream::uniform(std::uint32_t step, std::uint32_t component) const {
    const Block b = philox(key_, step, component >> 1);
    return (component & 1u) ? to_unit(join(b.x[2], b.x[3]))
                            : to_unit(join(b.x[0], b.x[1]));
}

SpectralField sample_wiener_increment(const StreamKey& key,
                                      std::uint32_t step_index, double dt,
                                      const QSpectrum& Q) {
    if (!(dt > 0.0))
        throw invalid_argument_error("sample_wiener_increment: dt must be > 0");
    const int M = static_cast<int>(Q.q.size());
    SpectralField out(M);
    Stream stream(key);
    stream.fill_normals(step_index, out.data(), M);
    for (int k = 0; k < M; ++k) out[k] *= std::sqrt(Q.q[k] * dt);
    return out;
}

} // namespace enkbf
