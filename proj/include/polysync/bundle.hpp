#pragma once

// On-disk artifact bundle of a pipeline run and its solver-free re-check.
//
//   config.yaml          effective configuration
//   datasets/<name>.json data matrices X, X+, U, Y
//   fits.json            Pi, Gamma and residual bounds per follower
//   gains.json           K, M, P, vertex radii per follower; F and the observer check
//   trajectory.csv       t, y0, y_i, |e_i|_inf, |delta_i|_2
//   bounds.csv           t, exact r_i per follower, vertex-recursion r for one follower
//   sweep.csv            phi1 / phi2 medians per noise level (when a sweep ran)
//   report.json          checks and summaries, stage marker
//   manifest.json        byte counts and FNV-1a hashes of everything above
//
// Files are written once per stage boundary by a single writer; a failed run
// leaves the artifacts of the completed stages and names the failed stage.

#include <optional>
#include <string>
#include <vector>

#include "polysync/pipeline.hpp"

namespace polysync {

struct StageFailure {
    Stage stage = Stage::Collect;
    std::string message;
};

void write_bundle(const PipelineResult& r, const std::string& dir, const std::vector<SweepRow>& sweep = {},
                  const std::optional<StageFailure>& failure = std::nullopt);

std::string fnv1a_hex(const std::string& bytes);

struct VerifyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyCheck> checks;
    [[nodiscard]] bool ok() const;
};

// Re-derives every certificate from stored artifacts without re-solving.
// Missing or unreadable files throw Error(Integrity); a hash mismatch is
// reported as a failed check so the remaining checks still run.
VerifyReport verify_bundle(const std::string& dir);

} // namespace polysync
