#pragma once

#include "core.hpp"

#include <string>

namespace rlmesh {

/// Mean curve with a +/- std band per method, read from
/// <results_dir>/<problem>/<method>/seed_*/curve.csv. Single-seed methods
/// draw a line without a band.
void plot_curves(const std::string& results_dir, const std::string& problem,
                 const std::string& out_svg);

/// Input-field traces with tick marks at the selected indices (1D problems),
/// read from the first seed's selections.csv at the last iteration.
void plot_selection_overlay(const std::string& results_dir, const std::string& data_dir,
                            const std::string& problem, const std::string& method,
                            const std::string& out_svg, int max_instances = 4);

}  // namespace rlmesh
