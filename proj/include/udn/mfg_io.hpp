#pragma once

// Solution files and plot-data exports. The binary layout is documented in
// docs/file-formats.md.

#include <filesystem>
#include <string>

#include "udn/mfg.hpp"

namespace udn::mfg {

inline constexpr char kSolutionMagic[8] = {'U', 'D', 'N', 'M', 'F', 'G', '0', '1'};

void save_solution(const std::filesystem::path& path, const MfgSolution& sol);

/// Throws std::runtime_error naming the path if it is missing or malformed.
MfgSolution load_solution(const std::filesystem::path& path);

/// iteration,residual
void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<double>& residuals);

/// Long format t,q,<column>.
void write_field_csv(const std::filesystem::path& path, const GridSpec& grid, const Field& field,
                     const std::string& column);

/// t,interference_w
void write_interference_csv(const std::filesystem::path& path, const GridSpec& grid,
                            const Vector& interference);

}  // namespace udn::mfg
