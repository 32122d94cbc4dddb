#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "pricer/bnb.hpp"
#include "pricer/instances.hpp"
#include "pricer/model.hpp"

namespace pricer {

// Instance-file problem anchored to a source line where one is known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& file, int line_no, const std::string& what_arg)
      : std::runtime_error(file + ":" + std::to_string(line_no) + ": " + what_arg),
        line(line_no) {}
  int line = 0;
};

// Instance documents are JSON; numbers are written with 17 significant digits so
// a write/load round trip reproduces every double bit-exactly. Parking instances
// carry an optional scenario block (coefficients and customer profiles) that
// rides along for the continuous-taste evaluator.
struct LoadedInstance {
  MixedLogitInstance instance;
  std::optional<ParkingScenario> parking;
};

LoadedInstance load_instance(const std::string& path);
void save_instance(const MixedLogitInstance& inst, const std::string& path,
                   const ParkingScenario* scenario = nullptr);

void write_result(const SolveReport& report, const MixedLogitInstance& inst,
                  const std::string& path);
// wall-time column is zeroed when include_wall_times is false, making traces
// byte-comparable across runs
void write_trace(const SolveReport& report, const std::string& path,
                 bool include_wall_times = true);

// shortest-width fixed formatting used by every writer: %.17g
std::string format_double(double v);

}  // namespace pricer
