#include "rtrc/series.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rtrc/csv.hpp"

namespace rtrc {

namespace {

std::runtime_error row_error(int row, const std::string& what) {
    return std::runtime_error("series row " + std::to_string(row) + ": " + what);
}

/// Seconds since the epoch for `YYYY-MM-DD[ T]HH:MM[:SS]`.
std::optional<double> parse_timestamp(std::string_view s) {
    double numeric = 0.0;
    if (parse_double(s, numeric)) return numeric;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    double sec = 0.0;
    char sep = 0;
    const std::string str(s);
    const int got = std::sscanf(str.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (got < 6 || (sep != ' ' && sep != 'T')) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + sec;
}

}  // namespace

TimeSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open series file " + path);

    TimeSeries ts;
    std::string line;
    int row = 0;
    std::optional<std::size_t> columns;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() > 2) throw row_error(row, "expected 1 or 2 columns");

        double value = 0.0;
        const bool value_ok = parse_double(fields.back(), value);
        if (!columns && !value_ok) {
            // header
            columns = fields.size();
            continue;
        }
        if (!columns) columns = fields.size();
        if (fields.size() != *columns) throw row_error(row, "column count changed");
        if (!value_ok) throw row_error(row, "unparsable value '" + fields.back() + "'");
        if (!std::isfinite(value)) throw row_error(row, "value is not finite");

        if (fields.size() == 2) {
            const auto stamp = parse_timestamp(fields.front());
            if (!stamp) throw row_error(row, "unparsable timestamp '" + fields.front() + "'");
            if (!ts.timestamps.empty() && !(*stamp > ts.timestamps.back()))
                throw row_error(row, "timestamps are not increasing");
            ts.timestamps.push_back(*stamp);
        }
        ts.values.push_back(value);
    }
    if (ts.values.empty()) throw std::runtime_error("series file " + path + " has no data rows");

    if (ts.timestamps.size() >= 2) {
        std::vector<double> gaps;
        for (std::size_t i = 1; i < ts.timestamps.size(); ++i) gaps.push_back(ts.timestamps[i] - ts.timestamps[i - 1]);
        std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
        ts.step_seconds = gaps[gaps.size() / 2];
    }
    return ts;
}

void write_series_csv(const std::string& path, const std::vector<double>& values) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,value\n";
    for (std::size_t t = 0; t < values.size(); ++t) out << t << ',' << format_double(values[t]) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<double> synth_series(const SynthParams& params, int length, std::mt19937_64& rng) {
    if (length < 1) throw std::invalid_argument("series length must be >= 1");
    if (!(params.period > 0.0)) throw std::invalid_argument("period must be positive");
    const bool noisy = params.kind == "sinusoid+ar1";
    if (!noisy && params.kind != "sinusoid")
        throw std::invalid_argument("unknown synthetic series kind '" + params.kind + "'");

    std::vector<double> out(static_cast<std::size_t>(length));
    std::normal_distribution<double> shock(0.0, 1.0);
    double ar = 0.0;
    for (int t = 0; t < length; ++t) {
        double v = params.offset;
        if (params.amplitude != 0.0)
            v += params.amplitude * std::sin(2.0 * std::numbers::pi * t / params.period);
        if (noisy) {
            ar = params.ar_rho * ar + params.ar_sigma * shock(rng);
            v += ar;
        }
        out[static_cast<std::size_t>(t)] = v;
    }
    return out;
}

}  // namespace rtrc
