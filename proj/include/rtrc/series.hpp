#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rtrc/tasks.hpp"

namespace rtrc {

struct TimeSeries {
    std::vector<double> values;
    std::vector<double> timestamps;     // seconds; empty for value-only files
    std::optional<double> step_seconds;  // median spacing when timestamps exist
};

/// Reads `value` or `timestamp,value` rows, with an optional header line.
/// Timestamps may be numeric seconds or `YYYY-MM-DD[ T]HH:MM[:SS]`.
/// Errors cite the 1-based file row.
TimeSeries read_series_csv(const std::string& path);

/// Writes `t,value` rows at full precision.
void write_series_csv(const std::string& path, const std::vector<double>& values);

/// Sinusoid of period `params.period` steps, plus AR(1) noise for kind
/// "sinusoid+ar1".
std::vector<double> synth_series(const SynthParams& params, int length, std::mt19937_64& rng);

}  // namespace rtrc
