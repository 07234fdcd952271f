#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "khoplab/config.hpp"

namespace khoplab {

/// Executes a parsed config: dispatches to the solvers, simulator, or the
/// exact diagnostics, and writes CSV/report artifacts into the output
/// directory. Returns the written paths. Failures from the modules propagate
/// as Error with their subsystem attribution.
std::vector<std::string> run(const RunConfig& config, std::ostream& log);

}  // namespace khoplab
