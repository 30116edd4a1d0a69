#include "capbound/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "capbound/error.hpp"

namespace capbound {

std::string format_real(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

Json real_to_json(double value)
{
    if (std::isfinite(value)) return value;
    return format_real(value);
}

double real_from_json(const Json& value)
{
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const auto s = value.get<std::string>();
        if (s == "inf") return kInfinity;
        if (s == "-inf") return -kInfinity;
    }
    throw PreconditionError("expected a real number, got " + value.dump());
}

std::string grid_function_to_json(const GridBVFunction& f)
{
    const GridGeometry& g = f.geometry();
    std::string out = "{\"d\":" + std::to_string(g.dim) + ",\"A\":" + format_real(g.side) +
                      ",\"G\":" + std::to_string(g.resolution) + ",\"M\":" + format_real(g.range) +
                      ",\"values\":[";
    bool first = true;
    for (double v : f.values()) {
        if (!first) out += ',';
        out += format_real(v);
        first = false;
    }
    out += "]}";
    return out;
}

namespace {

const Json& field(const Json& j, const char* key)
{
    require(j.is_object() && j.contains(key), std::string("missing JSON field \"") + key + "\"");
    return j.at(key);
}

} // namespace

GridBVFunction grid_function_from_json(const Json& j)
{
    GridGeometry g;
    g.dim = field(j, "d").get<int>();
    g.side = field(j, "A").get<double>();
    g.resolution = field(j, "G").get<int>();
    g.range = field(j, "M").get<double>();
    return GridBVFunction(g, field(j, "values").get<std::vector<double>>());
}

MultiClassTuple tuple_from_json(const Json& j)
{
    std::vector<GridBVFunction> components;
    for (const auto& c : field(j, "components")) components.push_back(grid_function_from_json(c));
    return MultiClassTuple(std::move(components));
}

Json tuple_to_json(const MultiClassTuple& g)
{
    Json components = Json::array();
    for (const auto& c : g.components()) components.push_back(Json::parse(grid_function_to_json(c)));
    return Json{{"components", components}};
}

FiniteFunctionClass function_class_from_json(const Json& j)
{
    const auto rows = field(j, "values").get<std::vector<std::vector<double>>>();
    require(!rows.empty(), "class value matrix must have at least one row");
    const std::size_t n = rows.front().size();
    std::vector<double> flat;
    double max_abs = 0.0;
    for (const auto& r : rows) {
        require(r.size() == n, "class value matrix rows must have equal length");
        for (double v : r) max_abs = std::max(max_abs, std::abs(v));
        flat.insert(flat.end(), r.begin(), r.end());
    }
    const double range = j.contains("M_F") ? j.at("M_F").get<double>() : std::max(max_abs, 1.0);
    const std::string provenance = j.contains("provenance") ? j.at("provenance").get<std::string>() : "explicit";
    return {rows.size(), n, std::move(flat), range, provenance};
}

DistributionSpec distribution_from_json(const Json& j)
{
    GridGeometry g;
    g.dim = field(j, "d").get<int>();
    g.side = j.value("A", 1.0);
    g.resolution = field(j, "G").get<int>();
    g.range = j.value("M", 1.0);
    const int classes = field(j, "C").get<int>();
    DistributionSpec dist = DistributionSpec::uniform(g, classes);
    if (j.contains("cell_probs")) dist.cell_probs = j.at("cell_probs").get<std::vector<double>>();
    if (j.contains("label_probs")) {
        dist.label_probs.clear();
        for (const auto& row : j.at("label_probs")) {
            const auto r = row.get<std::vector<double>>();
            dist.label_probs.insert(dist.label_probs.end(), r.begin(), r.end());
        }
    }
    if (j.contains("rho") && !j.at("rho").is_null()) dist.rho = j.at("rho").get<double>();
    validate(dist);
    return dist;
}

Json capacity_estimate_to_json(const CapacityEstimate& e)
{
    Json j;
    j["measure"] = to_string(e.measure);
    j["scale"] = real_to_json(e.scale);
    j["lower"] = real_to_json(e.lower);
    j["upper"] = real_to_json(e.upper);
    j["method"] = e.method;
    j["seed"] = e.seed;
    if (e.estimate) j["estimate"] = real_to_json(*e.estimate);
    if (e.std_error) j["std_error"] = real_to_json(*e.std_error);
    Json counters = Json::object();
    for (const auto& [k, v] : e.counters) counters[k] = v;
    j["counters"] = counters;
    return j;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row)
{
    require(row.size() == header_.size(), "CSV row width must match the header");
    rows_.push_back(std::move(row));
}

std::string csv_escape(std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string CsvTable::str() const
{
    std::string out;
    auto emit = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(row[i]);
        }
        out += "\r\n";
    };
    emit(header_);
    for (const auto& r : rows_) emit(r);
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace capbound
