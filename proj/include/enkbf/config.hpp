#pragma once
// Experiment configuration: a small sectioned key/value text format, schema
// extraction with all-errors reporting, semantic validation, canonical
// re-serialization, and construction of the runtime model objects.
//
// File format:
//   - full-line comments start with '#' or ';'
//   - top-level keys (before any section): kind, seed, out
//   - sections: [model] [observation] [numerics] [ensemble] [init] [fpf]
//   - entries: key = value; lists are comma-separated; booleans true/false
// Unknown sections or keys are errors.  Defaults are documented on the
// block structs below; canonical emission materializes every default so a
// round trip reproduces the config exactly.

#include <cstdint>
#include <string>
#include <vector>

#include "enkbf/ensemble.hpp"
#include "enkbf/models.hpp"
#include "enkbf/observation.hpp"
#include "enkbf/signal.hpp"

namespace enkbf {

enum class ExperimentKind {
    Unset = 0,
    Signal,
    Enkbf,
    KalmanBucy,
    Coupling,
    Sweep,
    ExpMoment,
    Fpf,
};

/// "signal", "enkbf", "kalman-bucy", "coupling", "sweep", "expmoment", "fpf".
std::string to_string(ExperimentKind kind);

/// Inverse of to_string; returns Unset for unrecognized text.
ExperimentKind parse_kind(const std::string& text);

struct ModelBlock {
    int modes = 0;                    ///< M; required for every kind but fpf.
    std::string drift = "heat";       ///< heat | allen-cahn | linear
    double ac_a = 1.0;                ///< allen-cahn cubic coefficient
    double ac_b = 1.0;                ///< allen-cahn linear coefficient
    double ac_c = 0.0;                ///< allen-cahn constant forcing
    std::vector<double> linear_diag;  ///< diag of A; required for drift=linear
    double q_alpha = 1.0;             ///< noise spectrum decay exponent
    double q_tau = 1.0;               ///< noise spectrum trace
    bool operator==(const ModelBlock&) const = default;
};

struct ObservationBlock {
    std::string kind = "linear";   ///< linear | tanh
    std::vector<int> indices = {1};  ///< observed mode indices (1-based)
    double saturation = 1.0;       ///< tanh scale s
    double gamma = 1.0;            ///< noise scale; R = gamma^2 I
    bool operator==(const ObservationBlock&) const = default;
};

struct NumericsBlock {
    double dt = 1e-3;
    double horizon = 1.0;  ///< T; must be an integer multiple of dt
    bool tame = false;     ///< tame the nonlinear drift increment
    bool operator==(const NumericsBlock&) const = default;
};

struct EnsembleBlock {
    int particles = 64;          ///< N
    int replicates = 1;
    double clip = 0.0;           ///< gain clip threshold; 0 disables
    std::vector<int> n_list;     ///< sweep sizes (>= 3 entries)
    double p = 1.0;              ///< sweep moment power
    int oracle_particles = 4096; ///< mean-field oracle size M_ref
    std::string coupling;        ///< exact | oracle; default chosen from model
    double q = 1.0;              ///< expmoment exponent
    bool operator==(const EnsembleBlock&) const = default;
};

struct InitBlock {
    std::vector<double> mean;  ///< leading coefficients; zero-padded to M
    double var = 0.0;          ///< per-mode variance; 0 = deterministic
    bool operator==(const InitBlock&) const = default;
};

struct FpfBlock {
    int particles = 10000;
    int bpf_particles = 0;     ///< bootstrap oracle size; 0 = same as particles
    std::string f = "double-well";  ///< double-well | linear
    double f_a = -1.0;         ///< slope for f(x) = f_a x
    std::string h = "tanh";    ///< tanh | linear
    double h_scale = 1.0;      ///< slope for h(x) = h_scale x
    double b = 0.5;            ///< signal diffusion coefficient
    double gamma = 1.0;        ///< observation noise scale
    double init_mean = 0.0;
    double init_var = 0.25;
    bool operator==(const FpfBlock&) const = default;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Unset;
    std::uint64_t seed = 0;
    std::string out = "out";
    ModelBlock model;
    ObservationBlock observation;
    NumericsBlock numerics;
    EnsembleBlock ensemble;
    InitBlock init;
    FpfBlock fpf;
    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses config text (syntax + schema).  Collects every problem — unknown
/// section, unknown key, malformed value — and throws a single
/// validation_error listing them all.  Does not run semantic validation, so
/// a file without `kind` parses (the CLI fills it from the subcommand).
ExperimentConfig parse_config_text(const std::string& text);

/// Semantic validation; returns one message per problem (empty = valid).
/// Checks kind present, required keys for the kind, dimension consistency,
/// positivity, horizon/dt compatibility, and sweep design size.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

/// read + parse + validate; throws validation_error listing all problems,
/// io_error if the file is unreadable.
ExperimentConfig load_config(const std::string& path);

/// Canonical serialized form: fixed section order, sorted keys, every
/// default materialized, only blocks relevant to the kind.  Requires a
/// semantically valid config.
std::string canonical_text(const ExperimentConfig& cfg);

/// Hex FNV-1a of the canonical text with `out` excluded (the output
/// location does not change what was computed).
std::string config_hash(const ExperimentConfig& cfg);

/// Hex FNV-1a over the model + observation + numerics sections only;
/// identifies the continuous problem independent of ensemble sizes.
std::string model_hash(const ExperimentConfig& cfg);

/// "exact" or "oracle": the explicit ensemble.coupling value, or the
/// model-derived default (exact iff linear drift + linear observations).
std::string resolved_coupling_mode(const ExperimentConfig& cfg);

// ---- runtime object construction (config must be valid) ----

ModelSpec build_model(const ExperimentConfig& cfg);
ObservationModel build_observation(const ExperimentConfig& cfg,
                                   const BasisSpec& basis);
IntegratorConfig build_integrator(const ExperimentConfig& cfg);
SpectralField build_init_mean(const ExperimentConfig& cfg);
GainPolicy build_gain_policy(const ExperimentConfig& cfg);

}  // namespace enkbf
