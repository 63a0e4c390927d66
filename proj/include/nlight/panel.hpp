#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlight/table.hpp"

namespace nlight {

/// Denominator for premium density. The two conventions in circulation
/// disagree, so callers must pick one.
enum class DensityBasis { InsuredPopulation, TotalPopulation };

struct DeriveOptions {
    DensityBasis density_basis = DensityBasis::InsuredPopulation;
    /// Also rebuild gdp_per_capita = gdp / total_population.
    bool gdp_per_capita = false;
};

/// Fills premium_density, insured_density, insurance_presence (and optionally
/// gdp_per_capita) wherever their inputs are present. A zero denominator
/// leaves the cell missing and is tallied as "<column>:zero_denominator".
ObservationTable derive_indicators(const ObservationTable& t, const DeriveOptions& opts = {});

struct LogPolicy {
    enum class Kind { DropNonPositive, Offset };
    Kind kind = Kind::DropNonPositive;
    /// Offset: non-positive values are floored to epsilon before the log.
    double epsilon = 0.0;

    static LogPolicy drop() { return {}; }
    static LogPolicy offset(double eps) { return {Kind::Offset, eps}; }
};

/// Replaces each named column by its natural log. Dropped cells are tallied
/// under "log_dropped:<column>", floored ones under "log_floored:<column>".
ObservationTable log_transform(const ObservationTable& t, const std::vector<std::string>& vars,
                               const LogPolicy& policy);

struct VariableSummary {
    std::string name;
    std::size_t n = 0;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> mean;
    std::optional<double> std_deviation;  // sample (n-1); 0 when n == 1
    bool degenerate = false;              // n == 1
};

struct SummaryReport {
    std::vector<VariableSummary> variables;
};

SummaryReport summarize(const ObservationTable& t);
SummaryReport summarize(const ObservationTable& t, const std::vector<std::string>& vars);

/// Sample Pearson coefficient, clamped into [-1, 1].
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson over the positions where both cells are present.
double pearson_pairwise(std::span<const ObservationTable::Cell> x, std::span<const ObservationTable::Cell> y);

struct CorrelationMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<std::optional<double>>> values;
    std::vector<std::vector<std::size_t>> counts;  // observations used per pair
    std::vector<std::string> flags;

    std::optional<double> at(std::size_t i, std::size_t j) const { return values[i][j]; }
};

enum class MissingPolicy { Pairwise, Listwise };

CorrelationMatrix correlation_matrix(const ObservationTable& t, const std::vector<std::string>& vars,
                                     MissingPolicy policy = MissingPolicy::Pairwise);

std::string summary_to_csv(const SummaryReport& r);
std::string summary_to_json(const SummaryReport& r);
std::string correlation_to_csv(const CorrelationMatrix& m);
std::string correlation_to_json(const CorrelationMatrix& m);

}  // namespace nlight
