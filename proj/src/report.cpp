#include "steato/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "steato/common.hpp"

namespace steato {

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string digest_hex(std::uint64_t h) {
    static const char* hex = "0123456789abcdef";
    std::string out = "fnv1a:";
    for (int i = 15; i >= 0; --i) out += hex[(h >> (4 * i)) & 0xF];
    return out;
}

std::uint64_t digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open for digest: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

std::string report_timestamp() {
    std::time_t t;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
    else
        t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::ordered_json json_number_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

// ---------------------------------------------------------------------------
// Schema validation (draft-07 subset).

namespace {

using nlohmann::json;

bool type_matches(const std::string& type, const json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
    return false;
}

struct Validator {
    const json& root;
    std::vector<std::string> errors;

    const json& resolve(const json& node) const {
        if (node.is_object() && node.contains("$ref")) {
            const std::string ref = node["$ref"].get<std::string>();
            const std::string prefix = "#/definitions/";
            if (ref.rfind(prefix, 0) == 0) {
                const auto& defs = root.at("definitions");
                return defs.at(ref.substr(prefix.size()));
            }
            throw std::invalid_argument("unsupported $ref: " + ref);
        }
        return node;
    }

    bool check(const json& schema_in, const json& v, const std::string& path,
               std::vector<std::string>* sink) {
        const json& schema = resolve(schema_in);
        bool ok = true;
        auto fail = [&](const std::string& msg) {
            ok = false;
            if (sink) sink->push_back(path + ": " + msg);
        };

        if (schema.contains("const") && v != schema["const"])
            fail("expected constant " + schema["const"].dump());
        if (schema.contains("enum")) {
            bool found = false;
            for (const auto& e : schema["enum"])
                if (e == v) found = true;
            if (!found) fail("value " + v.dump() + " not in enum");
        }
        if (schema.contains("type")) {
            const json& t = schema["type"];
            bool matched = false;
            if (t.is_string()) {
                matched = type_matches(t.get<std::string>(), v);
            } else {
                for (const auto& alt : t)
                    if (type_matches(alt.get<std::string>(), v)) matched = true;
            }
            if (!matched) fail("wrong type, expected " + t.dump());
        }
        if (v.is_object()) {
            if (schema.contains("required"))
                for (const auto& key : schema["required"])
                    if (!v.contains(key.get<std::string>()))
                        fail("missing required property '" + key.get<std::string>() + "'");
            const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (props && props->contains(it.key())) {
                    if (!check((*props)[it.key()], it.value(), path + "/" + it.key(), sink))
                        ok = false;
                } else if (schema.contains("additionalProperties") &&
                           schema["additionalProperties"].is_object()) {
                    if (!check(schema["additionalProperties"], it.value(),
                               path + "/" + it.key(), sink))
                        ok = false;
                }
            }
        }
        if (v.is_array()) {
            if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
                fail("fewer than minItems elements");
            if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
                fail("more than maxItems elements");
            if (schema.contains("items") && schema["items"].is_object()) {
                std::size_t i = 0;
                for (const auto& el : v) {
                    if (!check(schema["items"], el, path + "/" + std::to_string(i), sink))
                        ok = false;
                    ++i;
                }
            }
        }
        if (schema.contains("oneOf")) {
            int matches = 0;
            for (const auto& alt : schema["oneOf"])
                if (check(alt, v, path, nullptr)) ++matches;
            if (matches != 1) {
                // Re-run the closest alternative with the sink attached for a
                // useful message.
                fail("matched " + std::to_string(matches) + " of oneOf alternatives");
            }
        }
        return ok;
    }
};

}  // namespace

std::vector<std::string> validate_against_schema(const nlohmann::json& schema,
                                                 const nlohmann::json& doc) {
    Validator v{schema, {}};
    std::vector<std::string> errors;
    v.check(schema, doc, "$", &errors);
    return errors;
}

// ---------------------------------------------------------------------------

void write_plot_csv(const PlotTable& table, const std::filesystem::path& path) {
    if (table.columns.size() != table.data.size())
        throw std::invalid_argument("write_plot_csv: column/name mismatch");
    std::size_t rows = table.data.empty() ? 0 : table.data.front().size();
    for (const auto& col : table.data)
        if (col.size() != rows) throw std::invalid_argument("write_plot_csv: ragged columns");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write plot CSV: " + path.string());
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.data.size(); ++c) {
            if (c) out << ',';
            const double v = table.data[c][r];
            if (std::isfinite(v)) out << format_double(v);
        }
        out << '\n';
    }
}

namespace {

struct Extent {
    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -std::numeric_limits<double>::infinity();
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -std::numeric_limits<double>::infinity();

    void include(double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y)) return;
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
    }
};

}  // namespace

void write_svg_plot(const SvgPlot& plot, const std::filesystem::path& path) {
    const double width = 640, height = 480, margin = 56;
    Extent e;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) e.include(s.x[i], s.y[i]);
    for (const auto& b : plot.bands)
        for (std::size_t i = 0; i < b.x.size(); ++i) {
            e.include(b.x[i], b.lo[i]);
            e.include(b.x[i], b.hi[i]);
        }
    if (!(e.x_min < e.x_max)) {
        e.x_min -= 0.5;
        e.x_max += 0.5;
    }
    if (!(e.y_min < e.y_max)) {
        e.y_min -= 0.5;
        e.y_max += 0.5;
    }
    const double pad_x = 0.05 * (e.x_max - e.x_min), pad_y = 0.05 * (e.y_max - e.y_min);
    e.x_min -= pad_x;
    e.x_max += pad_x;
    e.y_min -= pad_y;
    e.y_max += pad_y;
    auto px = [&](double x) {
        return margin + (x - e.x_min) / (e.x_max - e.x_min) * (width - 2 * margin);
    };
    auto py = [&](double y) {
        return height - margin - (y - e.y_min) / (e.y_max - e.y_min) * (height - 2 * margin);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& b : plot.bands) {
        if (b.x.empty()) continue;
        svg << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.6\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < b.x.size(); ++i)
            svg << px(b.x[i]) << ',' << py(b.hi[i]) << ' ';
        for (std::size_t i = b.x.size(); i-- > 0;)
            svg << px(b.x[i]) << ',' << py(b.lo[i]) << ' ';
        svg << "\"/>\n";
    }
    for (const auto& s : plot.series) {
        if (s.points) {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    svg << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                        << "\" r=\"2.5\" fill=\"" << s.color << "\" fill-opacity=\"0.7\"/>\n";
        } else if (!s.x.empty()) {
            svg << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                svg << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            svg << "\"/>\n";
        }
    }
    svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
        << "\" height=\"" << height - 2 * margin
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    auto text = [&](double x, double y, const std::string& t, const char* anchor,
                    const char* extra = "") {
        svg << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"sans-serif\" "
            << "font-size=\"12\" text-anchor=\"" << anchor << "\" " << extra << ">" << t
            << "</text>\n";
    };
    text(width / 2, margin - 16, plot.title, "middle");
    text(width / 2, height - 12, plot.x_label, "middle");
    text(16, height / 2, plot.y_label, "middle",
         ("transform=\"rotate(-90 16 " + std::to_string(height / 2) + ")\"").c_str());
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", e.x_min);
    text(margin, height - margin + 16, buf, "middle");
    std::snprintf(buf, sizeof(buf), "%.3g", e.x_max);
    text(width - margin, height - margin + 16, buf, "middle");
    std::snprintf(buf, sizeof(buf), "%.3g", e.y_min);
    text(margin - 6, height - margin, buf, "end");
    std::snprintf(buf, sizeof(buf), "%.3g", e.y_max);
    text(margin - 6, margin + 4, buf, "end");
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write SVG: " + path.string());
    out << svg.str();
}

}  // namespace steato
