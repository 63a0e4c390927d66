#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlight {

namespace var {
inline constexpr std::string_view kRadianceLight = "radiance_light";
inline constexpr std::string_view kSaturatedLight = "saturated_light";
inline constexpr std::string_view kGdp = "gdp";
inline constexpr std::string_view kGdpPerCapita = "gdp_per_capita";
inline constexpr std::string_view kInsuranceCount = "insurance_count";
inline constexpr std::string_view kInsurancePresence = "insurance_presence";
inline constexpr std::string_view kInsurancePremiums = "insurance_premiums";
inline constexpr std::string_view kInsuredPopulation = "insured_population";
inline constexpr std::string_view kTotalPopulation = "total_population";
inline constexpr std::string_view kPremiumDensity = "premium_density";
inline constexpr std::string_view kInsuredDensity = "insured_density";
}  // namespace var

struct UnitYear {
    std::string unit;
    int year = 0;

    friend auto operator<=>(const UnitYear&, const UnitYear&) = default;
};

/// Rows of (unit, year) by named numeric columns, with missing entries.
///
/// Column order is insertion order; row order is insertion order. The table
/// also carries a diagnostics tally (label -> count) that transformations
/// append to, e.g. rows dropped by a log policy.
class ObservationTable {
public:
    using Cell = std::optional<double>;

    std::size_t row_count() const noexcept { return keys_.size(); }
    const std::vector<UnitYear>& keys() const noexcept { return keys_; }
    const std::vector<std::string>& column_names() const noexcept { return names_; }

    /// Appends a row; throws DuplicateKey if (unit, year) already exists.
    std::size_t add_row(std::string unit, int year);
    std::optional<std::size_t> find_row(std::string_view unit, int year) const;

    bool has_column(std::string_view name) const;
    /// Adds an all-missing column if absent; returns its index.
    std::size_t ensure_column(std::string_view name);
    std::size_t column_index(std::string_view name) const;  // throws MissingColumn

    const std::vector<Cell>& column(std::string_view name) const;
    std::vector<Cell>& column(std::string_view name);

    Cell get(std::size_t row, std::string_view name) const;
    void set(std::size_t row, std::string_view name, Cell value);

    /// Rows of the given year only, keeping column layout and diagnostics.
    ObservationTable filter_year(int year) const;
    std::vector<int> years() const;

    std::map<std::string, std::size_t>& diagnostics() noexcept { return diagnostics_; }
    const std::map<std::string, std::size_t>& diagnostics() const noexcept { return diagnostics_; }
    void tally(const std::string& label, std::size_t count = 1) { diagnostics_[label] += count; }

    friend bool operator==(const ObservationTable& a, const ObservationTable& b) {
        return a.keys_ == b.keys_ && a.names_ == b.names_ && a.columns_ == b.columns_;
    }

private:
    std::vector<UnitYear> keys_;
    std::map<UnitYear, std::size_t> index_;
    std::vector<std::string> names_;
    std::vector<std::vector<Cell>> columns_;
    std::map<std::string, std::size_t> diagnostics_;
};

/// CSV with header `unit,year,<var>...`; an empty field is a missing value.
ObservationTable parse_table_csv(std::string_view text);
std::string table_to_csv(const ObservationTable& table);

}  // namespace nlight
