#include "nlight/raster.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"

namespace nlight {

RasterGrid::RasterGrid(std::size_t ncols, std::size_t nrows, double xll, double yll, double cellsize,
                       double nodata, std::vector<double> values)
    : ncols_(ncols), nrows_(nrows), xll_(xll), yll_(yll), cellsize_(cellsize), nodata_(nodata),
      values_(std::move(values)) {
    if (ncols_ == 0 || nrows_ == 0)
        throw Error(ErrorCode::InvalidDimension, "raster must have at least one row and column");
    if (!(cellsize_ > 0.0) || !std::isfinite(cellsize_))
        throw Error(ErrorCode::InvalidDimension, "raster cellsize must be positive");
    if (values_.size() != ncols_ * nrows_)
        throw Error(ErrorCode::CountMismatch,
                    fmt::format("expected {} values, got {}", ncols_ * nrows_, values_.size()));
}

double RasterGrid::cell_center_x(std::size_t col) const noexcept {
    return xll_ + (static_cast<double>(col) + 0.5) * cellsize_;
}

double RasterGrid::cell_center_y(std::size_t row) const noexcept {
    // row 0 is the top of the grid
    return yll_ + (static_cast<double>(nrows_ - row) - 0.5) * cellsize_;
}

RasterGrid RasterGrid::with_values(std::vector<double> values) const {
    return RasterGrid(ncols_, nrows_, xll_, yll_, cellsize_, nodata_, std::move(values));
}

namespace {

constexpr std::array<std::string_view, 6> kHeaderKeys = {"ncols",    "nrows",    "xllcorner",
                                                        "yllcorner", "cellsize", "nodata_value"};

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

class Tokenizer {
public:
    explicit Tokenizer(std::string_view text) : text_(text) {}

    std::optional<std::string_view> next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ >= text_.size()) return std::nullopt;
        std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(start, pos_ - start);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

std::size_t parse_dimension(double v, std::string_view key) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
        throw Error(ErrorCode::MalformedHeader, fmt::format("{} must be a positive integer", key));
    return static_cast<std::size_t>(v);
}

}  // namespace

RasterGrid parse_ascii_grid(std::string_view text) {
    Tokenizer tokens(text);
    std::array<std::optional<double>, kHeaderKeys.size()> header;
    for (std::size_t line = 0; line < kHeaderKeys.size(); ++line) {
        auto key_token = tokens.next();
        auto value_token = tokens.next();
        if (!key_token || !value_token)
            throw Error(ErrorCode::MalformedHeader, "truncated header");
        std::string key = lowercase(*key_token);
        auto it = std::find(kHeaderKeys.begin(), kHeaderKeys.end(), key);
        if (it == kHeaderKeys.end())
            throw Error(ErrorCode::MalformedHeader, fmt::format("unknown header key '{}'", *key_token));
        auto& slot = header[static_cast<std::size_t>(it - kHeaderKeys.begin())];
        if (slot) throw Error(ErrorCode::MalformedHeader, fmt::format("duplicate header key '{}'", key));
        auto value = parse_double(*value_token);
        if (!value)
            throw Error(ErrorCode::MalformedHeader,
                        fmt::format("non-numeric value '{}' for {}", *value_token, key));
        slot = *value;
    }

    const std::size_t ncols = parse_dimension(*header[0], "ncols");
    const std::size_t nrows = parse_dimension(*header[1], "nrows");
    const std::size_t expected = ncols * nrows;

    std::vector<double> values;
    values.reserve(expected);
    while (auto tok = tokens.next()) {
        auto v = parse_double(*tok);
        if (!v) throw Error(ErrorCode::NonNumeric, fmt::format("non-numeric token '{}'", *tok));
        values.push_back(*v);
    }
    if (values.size() != expected)
        throw Error(ErrorCode::CountMismatch,
                    fmt::format("expected {} values, got {}", expected, values.size()));
    if (!(*header[4] > 0.0))
        throw Error(ErrorCode::MalformedHeader, "cellsize must be positive");
    return RasterGrid(ncols, nrows, *header[2], *header[3], *header[4], *header[5], std::move(values));
}

std::string serialize_ascii_grid(const RasterGrid& grid) {
    std::string out;
    out += fmt::format("ncols {}\n", grid.ncols());
    out += fmt::format("nrows {}\n", grid.nrows());
    out += fmt::format("xllcorner {}\n", format_exact(grid.xll()));
    out += fmt::format("yllcorner {}\n", format_exact(grid.yll()));
    out += fmt::format("cellsize {}\n", format_exact(grid.cellsize()));
    out += fmt::format("NODATA_value {}\n", format_exact(grid.nodata()));
    for (std::size_t r = 0; r < grid.nrows(); ++r) {
        for (std::size_t c = 0; c < grid.ncols(); ++c) {
            if (c) out += ' ';
            out += format_exact(grid.at(r, c));
        }
        out += '\n';
    }
    return out;
}

RasterGrid adjust_dn(const RasterGrid& grid) {
    std::vector<double> out(grid.values().begin(), grid.values().end());
    for (double& v : out) {
        if (!grid.is_nodata(v) && v < 0.0) v = 0.0;
    }
    return grid.with_values(std::move(out));
}

RasterGrid apply_threshold(const RasterGrid& grid, const ThresholdSpec& spec) {
    if (!(spec.value >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "threshold value must be non-negative");
    std::vector<double> out(grid.values().begin(), grid.values().end());
    for (double& v : out) {
        if (grid.is_nodata(v)) continue;
        if (v < 0.0)
            throw Error(ErrorCode::NegativeInput, "negative DN found; run adjust_dn before thresholding");
        if (v < spec.value) v = 0.0;
    }
    return grid.with_values(std::move(out));
}

double total_dn(const RasterGrid& grid) {
    double sum = 0.0;
    for (double v : grid.values()) {
        if (!grid.is_nodata(v)) sum += v;
    }
    return sum;
}

ThresholdMode parse_threshold_mode(std::string_view name) {
    if (name == "urban_extent") return ThresholdMode::UrbanExtent;
    if (name == "blooming_floor") return ThresholdMode::BloomingFloor;
    throw Error(ErrorCode::InvalidArgument, fmt::format("unknown threshold mode '{}'", name));
}

std::string_view to_string(ThresholdMode mode) noexcept {
    return mode == ThresholdMode::UrbanExtent ? "urban_extent" : "blooming_floor";
}

}  // namespace nlight
