#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "capbound/core.hpp"

namespace capbound {

using Json = nlohmann::ordered_json;

/// Real with 17 significant digits ("%.17g"); non-finite values print as
/// inf, -inf or nan.
std::string format_real(double value);

/// Finite reals stay numbers; non-finite ones become the strings of format_real.
Json real_to_json(double value);
double real_from_json(const Json& value);

/// {"d":..,"A":..,"G":..,"M":..,"values":[...]} with 17-digit reals.
std::string grid_function_to_json(const GridBVFunction& f);
GridBVFunction grid_function_from_json(const Json& j);

MultiClassTuple tuple_from_json(const Json& j);
Json tuple_to_json(const MultiClassTuple& g);

FiniteFunctionClass function_class_from_json(const Json& j);
DistributionSpec distribution_from_json(const Json& j);
Json capacity_estimate_to_json(const CapacityEstimate& estimate);

/// RFC-4180 CSV: header row, CRLF line ends, fields quoted only when needed.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> row);
    std::size_t rows() const { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(std::string_view field);

/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace capbound
