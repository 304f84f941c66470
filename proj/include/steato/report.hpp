#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace steato {

// FNV-1a 64-bit content digest used for report provenance.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string digest_hex(std::uint64_t h);
std::uint64_t digest_file(const std::filesystem::path& path);

// UTC timestamp; honors SOURCE_DATE_EPOCH so identical runs can emit
// byte-identical reports.
std::string report_timestamp();

// Validates a document against the subset of JSON Schema draft-07 the
// shipped report schema uses: type, enum, const, required, properties,
// additionalProperties, items, minItems, maxItems, oneOf, local $ref.
// Returns human-readable problems; empty means valid.
std::vector<std::string> validate_against_schema(const nlohmann::json& schema,
                                                 const nlohmann::json& doc);

// JSON value for possibly non-finite numbers (JSON has no inf/nan).
nlohmann::ordered_json json_number_or_null(double v);

// Column-oriented CSV for plot data; all columns must have equal length.
struct PlotTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // data[col][row]
};
void write_plot_csv(const PlotTable& table, const std::filesystem::path& path);

// Minimal static SVG rendering of plot data: scatter points, line series,
// and an optional shaded band. The CSV is the authoritative output.
struct SvgSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f6fb2";
    bool points = false;  // dots instead of a polyline
};
struct SvgBand {
    std::vector<double> x;
    std::vector<double> lo;
    std::vector<double> hi;
    std::string color = "#c8d8ea";
};
struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<SvgSeries> series;
    std::vector<SvgBand> bands;
};
void write_svg_plot(const SvgPlot& plot, const std::filesystem::path& path);

}  // namespace steato
