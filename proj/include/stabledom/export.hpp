#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stabledom/lattice.hpp"
#include "stabledom/montecarlo.hpp"
#include "stabledom/report.hpp"
#include "stabledom/semigroup.hpp"

namespace stabledom {

// Column layouts are documented in docs/csv_schema.md. Numbers use "%.17g",
// so equal inputs give byte-identical files.

/// node, x0[, x1], phi, t, value
void write_semigroup_csv(const std::filesystem::path& path, const Field& phi,
                         std::span<const SemigroupEvaluation> evaluations);

/// order, node, x0[, x1], mass, density, atom_weight
void write_iterated_csv(const std::filesystem::path& path, const Lattice& lattice,
                        std::span<const IteratedKernel> iterated);

/// Comment header with atom mass, then bin, center0[, center1], r_min, r_max, count, density, std_error
void write_density_csv(const std::filesystem::path& path, const DensityEstimate& estimate);

/// alpha, dim, t, x, density
void write_reference_csv(const std::filesystem::path& path, double alpha, int dim, double t,
                         std::span<const double> radii);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace stabledom
