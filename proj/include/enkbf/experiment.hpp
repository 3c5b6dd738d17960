#pragma once
// Experiment orchestration: runs a validated configuration end to end and
// produces the artifact set for its kind, fully in memory.  Artifacts are
// only written to disk together with a manifest, so no output ever appears
// without one.  All artifact bytes are deterministic for a fixed config and
// seed; the manifest's wall-time field is the single nondeterministic value
// anywhere in the output.

#include <string>
#include <vector>

#include "enkbf/config.hpp"

namespace enkbf {

/// Library version string (also exposed through the C API).
const char* library_version();

/// One output file, path relative to the output directory.
struct Artifact {
    std::string path;
    std::string text;
};

struct ExperimentResult {
    int exit_code = 0;  ///< 0 success, 2 validation failure, 3 divergence
    std::string message;              ///< human-readable status
    std::vector<Artifact> artifacts;  ///< empty unless exit_code == 0
};

/// Runs the experiment for cfg.kind.  Validation problems yield exit 2,
/// numerical divergence exit 3; no exceptions escape.  Artifact sets:
///   signal      signal.csv
///   enkbf       diagnostics.csv, signal.csv, observations.csv
///   kalman-bucy kalman_bucy.csv
///   coupling    coupling.json, diagnostics_rep0.csv
///   sweep       report.json
///   expmoment   expmoment.json
///   fpf         fpf.csv
/// Every CSV opens with "# config=<hash> seed=<seed>" and every JSON report
/// carries a config_hash field.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes the artifacts under out_dir (created if needed), then writes
/// manifest.json listing each artifact with its size and content hash plus
/// the config hash, seed, versions, and wall time.  Throws io_error.
void write_artifacts(const ExperimentResult& result, const std::string& out_dir,
                     const ExperimentConfig& cfg, double wall_seconds);

/// run_experiment + write_artifacts under cfg.out; returns the exit code.
int run_and_write(const ExperimentConfig& cfg);

}  // namespace enkbf
