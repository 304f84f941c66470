#include "steato/core.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

namespace steato {

std::vector<ViewGroup> view_groups_of(Viewpoint vp) {
    switch (vp) {
        case Viewpoint::A_LLL_LONG:
        case Viewpoint::B_LLL_TRANS:
            return {ViewGroup::LLL};
        case Viewpoint::C_RLL_INTERCOSTAL:
            return {ViewGroup::RLL};
        case Viewpoint::D_LOWER_RLL_LKC:
            return {ViewGroup::LKC};
        case Viewpoint::E_SUBCOSTAL_LKC:
            return {ViewGroup::LKC, ViewGroup::SC};
        case Viewpoint::F_SUBCOSTAL_NO_HV:
            return {ViewGroup::SC};
    }
    throw std::invalid_argument("view_groups_of: invalid viewpoint");
}

Viewpoint viewpoint_from_code(char code) {
    switch (std::tolower(static_cast<unsigned char>(code))) {
        case 'a': return Viewpoint::A_LLL_LONG;
        case 'b': return Viewpoint::B_LLL_TRANS;
        case 'c': return Viewpoint::C_RLL_INTERCOSTAL;
        case 'd': return Viewpoint::D_LOWER_RLL_LKC;
        case 'e': return Viewpoint::E_SUBCOSTAL_LKC;
        case 'f': return Viewpoint::F_SUBCOSTAL_NO_HV;
        default:
            throw DataError(std::string("unknown viewpoint code '") + code + "'");
    }
}

char viewpoint_code(Viewpoint vp) {
    return static_cast<char>('a' + static_cast<int>(vp));
}

std::string view_group_name(ViewGroup g) {
    switch (g) {
        case ViewGroup::LLL: return "LLL";
        case ViewGroup::RLL: return "RLL";
        case ViewGroup::LKC: return "LKC";
        case ViewGroup::SC:  return "SC";
    }
    throw std::invalid_argument("view_group_name: invalid group");
}

ViewGroup view_group_from_name(const std::string& name) {
    for (ViewGroup g : kAllViewGroups)
        if (view_group_name(g) == name) return g;
    throw DataError("unknown view group '" + name + "'");
}

SteatosisGrade grade_from_int(int v) {
    if (v < 0 || v > 3) throw std::domain_error("steatosis grade must be in 0..3");
    return static_cast<SteatosisGrade>(v);
}

SteatosisGrade grade_from_fat_fraction(double pct) {
    if (!(pct >= 0.0 && pct <= 100.0))
        throw std::domain_error("fat fraction must be in [0,100]");
    if (pct < 5.0) return SteatosisGrade::None;
    if (pct < 33.0) return SteatosisGrade::Mild;
    if (pct < 66.0) return SteatosisGrade::Moderate;
    return SteatosisGrade::Severe;
}

namespace {

// Minimal CSV: comma separated, double quotes for fields containing commas
// or quotes, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted)
        throw DataError("manifest line " + std::to_string(line_no) + ": unterminated quote");
    out.push_back(std::move(field));
    return out;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        out += c;
    }
    out += '"';
    return out;
}

double parse_double_field(const std::string& s, const std::string& col, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw DataError("manifest line " + std::to_string(line_no) + ": bad " + col + " value '" +
                        s + "'");
    }
}

}  // namespace

Cohort parse_manifest(const std::filesystem::path& path, const std::filesystem::path& base_dir) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty manifest: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line, 1);
    std::map<std::string, int> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], static_cast<int>(i));

    for (const char* required : {"patient_id", "study_id", "scanner", "date", "image_path",
                                 "viewpoint"}) {
        if (!col.count(required))
            throw DataError("manifest missing mandatory column '" + std::string(required) + "'");
    }
    auto opt_col = [&](const char* name) -> int {
        auto it = col.find(name);
        return it == col.end() ? -1 : it->second;
    };
    const int c_grade = opt_col("us_grade");
    const int c_fat = opt_col("fat_fraction_pct");
    const int c_cap = opt_col("cap_score");

    Cohort cohort;
    cohort.base_dir = base_dir;
    std::map<std::string, std::size_t> study_index;
    std::set<std::pair<std::string, std::string>> seen_images;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line, line_no);
        auto get = [&](int idx) -> std::string {
            return idx >= 0 && idx < static_cast<int>(fields.size()) ? fields[idx] : std::string();
        };

        StudyRecord row;
        row.patient_id = get(col["patient_id"]);
        row.study_id = get(col["study_id"]);
        row.scanner = get(col["scanner"]);
        row.date = get(col["date"]);
        const std::string image_path = get(col["image_path"]);
        const std::string vp_str = get(col["viewpoint"]);
        if (row.study_id.empty())
            throw DataError("manifest line " + std::to_string(line_no) + ": empty study_id");
        if (image_path.empty())
            throw DataError("manifest line " + std::to_string(line_no) + ": empty image_path");
        if (vp_str.size() != 1)
            throw DataError("manifest line " + std::to_string(line_no) + ": bad viewpoint '" +
                            vp_str + "'");
        Viewpoint vp;
        try {
            vp = viewpoint_from_code(vp_str[0]);
        } catch (const DataError&) {
            throw DataError("manifest line " + std::to_string(line_no) + ": bad viewpoint '" +
                            vp_str + "'");
        }

        if (!seen_images.emplace(row.study_id, image_path).second)
            throw DataError("manifest line " + std::to_string(line_no) + ": duplicate image '" +
                            image_path + "' in study '" + row.study_id + "'");

        if (c_grade >= 0 && !get(c_grade).empty()) {
            int g = static_cast<int>(parse_double_field(get(c_grade), "us_grade", line_no));
            if (g < 0 || g > 3)
                throw DataError("manifest line " + std::to_string(line_no) +
                                ": us_grade out of range");
            row.us_grade = grade_from_int(g);
        }
        if (c_fat >= 0 && !get(c_fat).empty()) {
            double f = parse_double_field(get(c_fat), "fat_fraction_pct", line_no);
            if (!(f >= 0.0 && f <= 100.0))
                throw DataError("manifest line " + std::to_string(line_no) +
                                ": fat_fraction_pct out of [0,100]");
            row.fat_fraction_pct = f;
        }
        if (c_cap >= 0 && !get(c_cap).empty())
            row.cap_score = parse_double_field(get(c_cap), "cap_score", line_no);

        auto it = study_index.find(row.study_id);
        if (it == study_index.end()) {
            study_index.emplace(row.study_id, cohort.studies.size());
            row.images.push_back({image_path, vp});
            cohort.studies.push_back(std::move(row));
        } else {
            StudyRecord& study = cohort.studies[it->second];
            if (study.patient_id != row.patient_id || study.scanner != row.scanner ||
                study.date != row.date || study.us_grade != row.us_grade ||
                study.fat_fraction_pct != row.fat_fraction_pct ||
                study.cap_score != row.cap_score)
                throw DataError("manifest line " + std::to_string(line_no) +
                                ": inconsistent study attributes for '" + row.study_id + "'");
            study.images.push_back({image_path, vp});
        }
    }
    return cohort;
}

void write_manifest(const Cohort& cohort, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << "patient_id,study_id,scanner,date,image_path,viewpoint,us_grade,fat_fraction_pct,"
           "cap_score\n";
    for (const StudyRecord& s : cohort.studies) {
        for (const ImageEntry& img : s.images) {
            out << csv_escape(s.patient_id) << ',' << csv_escape(s.study_id) << ','
                << csv_escape(s.scanner) << ',' << s.date << ',' << csv_escape(img.path) << ','
                << viewpoint_code(img.viewpoint) << ',';
            if (s.us_grade) out << grade_value(*s.us_grade);
            out << ',';
            if (s.fat_fraction_pct) out << format_double(*s.fat_fraction_pct);
            out << ',';
            if (s.cap_score) out << format_double(*s.cap_score);
            out << '\n';
        }
    }
}

QualificationReport qualify_study(const StudyRecord& study, int min_per_group, int min_total) {
    QualificationReport rep;
    rep.total_images = static_cast<int>(study.images.size());
    for (ViewGroup g : kAllViewGroups) rep.per_group_counts[g] = 0;
    for (const ImageEntry& img : study.images)
        for (ViewGroup g : view_groups_of(img.viewpoint)) rep.per_group_counts[g] += 1;
    rep.study_qualifies = rep.total_images >= min_total;
    for (ViewGroup g : kAllViewGroups)
        if (rep.per_group_counts[g] >= min_per_group) rep.qualifying_groups.insert(g);
    return rep;
}

Cohort select_one_study_per_patient(const Cohort& cohort, std::uint64_t seed) {
    // Patients visited in sorted id order so the draw sequence is stable.
    std::map<std::string, std::vector<std::size_t>> by_patient;
    for (std::size_t i = 0; i < cohort.studies.size(); ++i)
        by_patient[cohort.studies[i].patient_id].push_back(i);

    std::mt19937_64 rng(seed);
    std::set<std::size_t> keep;
    for (const auto& [patient, indices] : by_patient) {
        std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
        keep.insert(indices[pick(rng)]);
    }

    Cohort out;
    out.base_dir = cohort.base_dir;
    for (std::size_t i = 0; i < cohort.studies.size(); ++i)
        if (keep.count(i)) out.studies.push_back(cohort.studies[i]);
    return out;
}

}  // namespace steato
