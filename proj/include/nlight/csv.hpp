#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nlight {

/// Six significant digits, the fixed precision of every CSV report.
std::string format_csv_number(double v);

/// Shortest representation that round-trips through strtod.
std::string format_exact(double v);

/// Strict parse of a whole token as a finite or infinite double.
std::optional<double> parse_double(std::string_view token);

std::vector<std::string> split_csv_line(std::string_view line);

std::string join_csv_line(const std::vector<std::string>& fields);

std::string read_text_file(const std::filesystem::path& path);

/// Stages a set of output files and publishes them only on commit().
///
/// Files are written to hidden temporaries next to their destination and
/// renamed in one pass. If commit() is never reached the temporaries are
/// removed, so a failed command leaves no partial output behind.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path root) : root_(std::move(root)) {}
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet();

    void add(const std::string& relative_path, std::string contents);
    std::vector<std::string> paths() const;
    void commit();

private:
    std::filesystem::path root_;
    std::map<std::string, std::string> files_;
    std::vector<std::filesystem::path> staged_;
};

}  // namespace nlight
