#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dhbv::data {

/// Plain comma-separated table: header row, no quoting, no embedded commas.
struct CsvTable {
    std::filesystem::path source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based file line of each row

    /// Column index, or nullopt.
    std::optional<std::size_t> find(std::string_view name) const;
    /// Column index; throws DataError naming the file when absent.
    std::size_t require(std::string_view name) const;
};

/// Reads a table. Blank lines are skipped; ragged rows raise DataError with the line number.
CsvTable read_csv(const std::filesystem::path& path);

/**
 * Parses a numeric cell. Empty, "NA", "NaN" and "nan" map to NaN; anything
 * else unparseable raises DataError citing `where`.
 */
double parse_number(std::string_view cell, const std::string& where);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double v);

/// Accumulates rows and writes them in one go.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(std::vector<std::string> cells);
    void write(const std::filesystem::path& path) const;
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace dhbv::data
