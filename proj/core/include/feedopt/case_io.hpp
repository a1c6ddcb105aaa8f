#pragma once

#include <filesystem>
#include <string>

#include "feedopt/powergrid.hpp"
#include "feedopt/scenario.hpp"

namespace feedopt {

/// Parses a grid case document (JSON). Unknown keys are ignored; a missing
/// or mistyped required field throws kParseError naming the field. The
/// result is validated.
grid::GridCase parse_grid_case(const std::string& text);
grid::GridCase load_grid_case(const std::filesystem::path& path);

/// Parses a scenario document. Load segments may give absolute `load_pu`
/// vectors or a `scale` applied to the case loads, hence the case argument.
Scenario parse_scenario(const std::string& text, const grid::GridCase& grid);
Scenario load_scenario(const std::filesystem::path& path, const grid::GridCase& grid);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace feedopt
