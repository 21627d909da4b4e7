#pragma once

#include "pbcast/bounds.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace pbcast {

enum class SizeMode : std::uint8_t {
    equal,  // G = E = R = D = S
    free,   // G + E + R + D = 4S, searched by coordinate descent
};

struct OptimizeOptions {
    SizeMode mode = SizeMode::free;
    // Maximum number of size vectors scored, including the equal split.
    std::uint32_t budget = 24;
};

struct OptimizeResult {
    ProtocolParams params;
    BoundReport report;
    std::uint32_t evaluations = 0;
};

// Throws ConfigError when s == 0 or the system has no correct process.
OptimizeResult optimize_params(std::uint32_t n, double f, std::uint32_t s, const OptimizeOptions& options = {});

// Best thresholds for fixed sample sizes. The size fields of `sizes` are
// read, the threshold fields are overwritten.
ProtocolParams best_thresholds(std::uint32_t n, double f, ProtocolParams sizes);

enum class SweepAxis : std::uint8_t { s, n, f };

std::optional<SweepAxis> axis_from_name(const std::string& s);

struct SweepOptions {
    SweepAxis axis = SweepAxis::s;
    std::vector<double> grid;
    std::uint32_t n = 1024;
    double f = 0.1;
    std::uint32_t s = 64;
    // When set, every grid point is evaluated at these params instead of
    // being optimized.
    std::optional<ProtocolParams> fixed;
    OptimizeOptions optimize;
};

struct SweepRow {
    double axis_value = 0;
    BoundReport report;
};

std::vector<SweepRow> sweep(const SweepOptions& options);

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace pbcast
