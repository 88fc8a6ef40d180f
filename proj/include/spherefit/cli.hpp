#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spherefit/sphere.hpp"

namespace spherefit::cli {

/// Exit codes: 0 success, 1 error, 2 the fit diverged.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a point cloud: one point per line, coordinates separated by commas
/// and/or whitespace; blank lines and lines starting with '#' are ignored.
Matrix read_points(std::istream& in);
Matrix read_points_file(const std::string& path);

}  // namespace spherefit::cli
