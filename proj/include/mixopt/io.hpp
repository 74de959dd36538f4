#pragma once

#include "mixopt/core.hpp"
#include "mixopt/discovery.hpp"
#include "mixopt/sampler.hpp"
#include "mixopt/spectral.hpp"

#include <filesystem>
#include <string>
#include <vector>

// File formats for the command-line pipeline. JSON numbers are emitted in
// shortest round-trip form, so serialize/parse cycles reproduce the exact
// double; CSV values are printed with 17 significant digits for the same
// reason.

namespace mixopt::io {

void write_similarity_json(const std::filesystem::path& path,
                           const SimilarityMatrix& s);

/// Reads a similarity matrix from canonical JSON or, for spreadsheet
/// interoperability, from CSV whose header row carries the task ids. The
/// result is re-validated.
SimilarityMatrix read_similarity(const std::filesystem::path& path);

void write_spectrum_json(const std::filesystem::path& path,
                         const SpectrumReport& report);
void write_spectrum_csv(const std::filesystem::path& path,
                        const SpectrumReport& report);

/// Solution JSON carries the solver certificate (nu, active set, path, KKT
/// residual) next to the parameters that produced it.
struct SolutionFile {
  MixtureSolution solution;
  PotentialParams params;
  double shift = 0.0;
  double kkt_residual = 0.0;
};

void write_solution_json(const std::filesystem::path& path,
                         const SolutionFile& file);
SolutionFile read_solution_json(const std::filesystem::path& path);

void write_trace_json(const std::filesystem::path& path,
                      const DiscoveryTrace& trace);

void write_gamma_report_json(const std::filesystem::path& path,
                             const GammaReport& report);
/// Histogram of the observed ratios, `bin,count` rows over equal-width bins.
void write_gamma_histogram_csv(const std::filesystem::path& path,
                               const GammaReport& report, int bins = 20);

void write_plan_json(const std::filesystem::path& path,
                     const SamplingPlan& plan);
void write_manifest_csv(const std::filesystem::path& path,
                        const SamplingPlan& plan);

/// `task_id,size` rows, returned aligned with `tasks`. Every task must be
/// covered; unknown ids are rejected.
std::vector<std::uint64_t> read_capacities_csv(
    const std::filesystem::path& path, const std::vector<TaskId>& tasks);

}  // namespace mixopt::io
