#pragma once

#include <string>

#include "eit/pipeline.hpp"

namespace eit {

// Artifact-writing entry points shared by the command-line tool and the
// acceptance harness. Every writer creates outdir, emits a deterministic
// manifest.txt, and returns the populated result.

struct ScanArtifacts {
  NtdMatrix lam_background;
  NtdMatrix lam_sigma;
  NtdMatrix lam_used;
  TestBallGrid scan;
};

ScanArtifacts run_scan(const ExperimentConfig& cfg);

struct RegularizeArtifacts {
  NtdMatrix lam_used;
  PixelBounds bounds;
  PixelPartition partition;
};

// Either simulates the data or resumes from a saved NtD difference. A saved
// exact difference can still be perturbed here (delta > 0); a saved noisy one
// is used as-is with its stored noise level.
RegularizeArtifacts run_regularize(const ExperimentConfig& cfg,
                                   const std::string& resume_diff = "");

struct LevelsetArtifacts {
  LevelSetField phi0;
  DescentResult descent;
  double symmetric_difference = -1.0;
};

// Initial shapes come from explicit primitives or from a saved coefficient
// grid (resume_coeffs); when both are empty a centered disk is used.
LevelsetArtifacts run_levelset(const ExperimentConfig& cfg,
                               const std::vector<Primitive>& init_shapes,
                               const std::string& resume_coeffs = "");

CombinedResult run_combined(const ExperimentConfig& cfg);
SimultaneousResult run_simultaneous(const ExperimentConfig& cfg);

}  // namespace eit
