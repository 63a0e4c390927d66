#include "nlight/table.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"

namespace nlight {

std::size_t ObservationTable::add_row(std::string unit, int year) {
    UnitYear key{std::move(unit), year};
    if (index_.count(key))
        throw Error(ErrorCode::DuplicateKey, fmt::format("duplicate row ({}, {})", key.unit, key.year));
    const std::size_t row = keys_.size();
    index_.emplace(key, row);
    keys_.push_back(std::move(key));
    for (auto& c : columns_) c.emplace_back();
    return row;
}

std::optional<std::size_t> ObservationTable::find_row(std::string_view unit, int year) const {
    auto it = index_.find(UnitYear{std::string(unit), year});
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool ObservationTable::has_column(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t ObservationTable::ensure_column(std::string_view name) {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it != names_.end()) return static_cast<std::size_t>(it - names_.begin());
    if (name.empty() || name == "unit" || name == "year")
        throw Error(ErrorCode::InvalidArgument, fmt::format("invalid column name '{}'", name));
    names_.emplace_back(name);
    columns_.emplace_back(keys_.size());
    return names_.size() - 1;
}

std::size_t ObservationTable::column_index(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw Error(ErrorCode::MissingColumn, fmt::format("no column '{}'", name));
    return static_cast<std::size_t>(it - names_.begin());
}

const std::vector<ObservationTable::Cell>& ObservationTable::column(std::string_view name) const {
    return columns_[column_index(name)];
}

std::vector<ObservationTable::Cell>& ObservationTable::column(std::string_view name) {
    return columns_[column_index(name)];
}

ObservationTable::Cell ObservationTable::get(std::size_t row, std::string_view name) const {
    return column(name).at(row);
}

void ObservationTable::set(std::size_t row, std::string_view name, Cell value) {
    column(name).at(row) = value;
}

ObservationTable ObservationTable::filter_year(int year) const {
    ObservationTable out;
    for (const auto& n : names_) out.ensure_column(n);
    for (std::size_t r = 0; r < keys_.size(); ++r) {
        if (keys_[r].year != year) continue;
        const std::size_t row = out.add_row(keys_[r].unit, year);
        for (std::size_t c = 0; c < columns_.size(); ++c) out.columns_[c][row] = columns_[c][r];
    }
    out.diagnostics_ = diagnostics_;
    return out;
}

std::vector<int> ObservationTable::years() const {
    std::set<int> ys;
    for (const auto& k : keys_) ys.insert(k.year);
    return {ys.begin(), ys.end()};
}

ObservationTable parse_table_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "table CSV is empty");
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "unit" || header[1] != "year")
        throw Error(ErrorCode::MalformedHeader, "table CSV header must start with unit,year");

    ObservationTable table;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (table.has_column(header[c]))
            throw Error(ErrorCode::MalformedHeader, fmt::format("duplicate column '{}'", header[c]));
        table.ensure_column(header[c]);
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::CountMismatch, fmt::format("table CSV line {}: expected {} fields, got {}",
                                                              line_no, header.size(), fields.size()));
        auto year = parse_double(fields[1]);
        if (!year || *year != std::floor(*year) || std::abs(*year) > 1e6)
            throw Error(ErrorCode::NonNumeric, fmt::format("table CSV line {}: bad year '{}'", line_no, fields[1]));
        const std::size_t row = table.add_row(fields[0], static_cast<int>(*year));
        for (std::size_t c = 2; c < fields.size(); ++c) {
            if (fields[c].empty()) continue;
            auto v = parse_double(fields[c]);
            if (!v)
                throw Error(ErrorCode::NonNumeric,
                            fmt::format("table CSV line {}: non-numeric '{}'", line_no, fields[c]));
            table.set(row, header[c], *v);
        }
    }
    return table;
}

std::string table_to_csv(const ObservationTable& table) {
    std::vector<std::string> header = {"unit", "year"};
    header.insert(header.end(), table.column_names().begin(), table.column_names().end());
    std::string out = join_csv_line(header) + '\n';
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        std::vector<std::string> fields = {table.keys()[r].unit, std::to_string(table.keys()[r].year)};
        for (const auto& name : table.column_names()) {
            auto v = table.get(r, name);
            fields.push_back(v ? format_exact(*v) : std::string());
        }
        out += join_csv_line(fields) + '\n';
    }
    return out;
}

}  // namespace nlight
