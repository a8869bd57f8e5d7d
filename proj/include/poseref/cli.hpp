#pragma once

#include <string>
#include <vector>

namespace poseref {

// Command line front end. `args` excludes the program name. Returns 0 on
// success, 1 on usage errors (synopsis goes to the error stream), 2 on
// runtime errors.
//
// Subcommands:
//   render   mesh + pose -> depth.pgm, mask.pgm, distance.pgm in --out
//   refine   mesh + initial pose + (GT pose | scene mask) -> result JSON
//   bench    experiment config -> results.csv + summary.json in output dir
//   metrics  mesh + two poses -> VSS/ADD/per-axis error report JSON
int cli_main(const std::vector<std::string>& args);

}  // namespace poseref
