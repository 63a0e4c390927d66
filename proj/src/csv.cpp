#include "nlight/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "nlight/error.hpp"

namespace nlight {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::NonNumeric: return "NonNumeric";
        case ErrorCode::NegativeInput: return "NegativeInput";
        case ErrorCode::InvalidDimension: return "InvalidDimension";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::DuplicateKey: return "DuplicateKey";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::NotNested: return "NotNested";
        case ErrorCode::MismatchedSamples: return "MismatchedSamples";
        case ErrorCode::NotEnoughLocations: return "NotEnoughLocations";
        case ErrorCode::TooFewObservations: return "TooFewObservations";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::InsufficientEffectiveObservations: return "InsufficientEffectiveObservations";
        case ErrorCode::ZeroBandwidth: return "ZeroBandwidth";
        case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
        case ErrorCode::NonPositiveRSS: return "NonPositiveRSS";
        case ErrorCode::ZeroLight: return "ZeroLight";
        case ErrorCode::ZeroColumnTotal: return "ZeroColumnTotal";
    }
    return "Unknown";
}

bool is_numerical(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DegenerateVariance:
        case ErrorCode::RankDeficient:
        case ErrorCode::InsufficientEffectiveObservations:
        case ErrorCode::ZeroBandwidth:
        case ErrorCode::AllCandidatesFailed:
        case ErrorCode::NonPositiveRSS:
        case ErrorCode::ZeroLight:
        case ErrorCode::ZeroColumnTotal:
            return true;
        default:
            return false;
    }
}

std::string format_csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // no "-0"
    return fmt::format("{:.6g}", v);
}

std::string format_exact(double v) {
    if (v == 0.0) return "0";
    return fmt::format("{}", v);
}

std::optional<double> parse_double(std::string_view token) {
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
        token.remove_suffix(1);
    if (token.empty()) return std::nullopt;
    if (token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::string join_csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            out += '"';
            for (char c : f) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        } else {
            out += f;
        }
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

OutputSet::~OutputSet() {
    std::error_code ec;
    for (const auto& p : staged_) std::filesystem::remove(p, ec);
}

void OutputSet::add(const std::string& relative_path, std::string contents) {
    files_[relative_path] = std::move(contents);
}

std::vector<std::string> OutputSet::paths() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : files_) out.push_back(k);
    return out;
}

void OutputSet::commit() {
    namespace fs = std::filesystem;
    std::vector<std::pair<fs::path, fs::path>> moves;
    for (const auto& [rel, contents] : files_) {
        fs::path dest = root_ / rel;
        std::error_code ec;
        fs::create_directories(dest.parent_path(), ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dest.parent_path().string());
        fs::path tmp = dest.parent_path() / ("." + dest.filename().string() + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
            staged_.push_back(tmp);
            out << contents;
            out.flush();
            if (!out) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
        }
        moves.emplace_back(tmp, dest);
    }
    for (const auto& [tmp, dest] : moves) {
        std::error_code ec;
        fs::rename(tmp, dest, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot publish " + dest.string());
    }
    staged_.clear();
}

}  // namespace nlight
