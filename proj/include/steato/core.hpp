#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "steato/common.hpp"

namespace steato {

// The six liver viewpoints of the scanning protocol.
enum class Viewpoint : int {
    A_LLL_LONG = 0,       // left lobe longitudinal
    B_LLL_TRANS,          // left lobe transverse
    C_RLL_INTERCOSTAL,    // right lobe intercostal
    D_LOWER_RLL_LKC,      // lower right lobe intercostal, liver/kidney contrast
    E_SUBCOSTAL_LKC,      // subcostal, liver/kidney contrast
    F_SUBCOSTAL_NO_HV,    // subcostal without hepatic veins
};

enum class ViewGroup : int { LLL = 0, RLL, LKC, SC };

inline constexpr std::array<ViewGroup, 4> kAllViewGroups = {
    ViewGroup::LLL, ViewGroup::RLL, ViewGroup::LKC, ViewGroup::SC};

// Fixed total mapping; viewpoint E belongs to both LKC and SC.
std::vector<ViewGroup> view_groups_of(Viewpoint vp);

Viewpoint viewpoint_from_code(char code);  // 'a'..'f'
char viewpoint_code(Viewpoint vp);
std::string view_group_name(ViewGroup g);
ViewGroup view_group_from_name(const std::string& name);

enum class SteatosisGrade : int { None = 0, Mild = 1, Moderate = 2, Severe = 3 };

inline int grade_value(SteatosisGrade g) { return static_cast<int>(g); }
SteatosisGrade grade_from_int(int v);

// Kleiner-style grading by liver fat cell fraction; boundaries map to the
// higher grade.
SteatosisGrade grade_from_fat_fraction(double pct);

struct ImageEntry {
    std::string path;  // relative to the cohort base dir
    Viewpoint viewpoint;

    bool operator==(const ImageEntry&) const = default;
};

struct StudyRecord {
    std::string patient_id;
    std::string study_id;
    std::string scanner;
    std::string date;  // ISO-8601 (YYYY-MM-DD)
    std::vector<ImageEntry> images;
    std::optional<SteatosisGrade> us_grade;
    std::optional<double> fat_fraction_pct;  // [0,100]
    std::optional<double> cap_score;         // dB/m

    bool operator==(const StudyRecord&) const = default;
};

struct Cohort {
    std::filesystem::path base_dir;
    std::vector<StudyRecord> studies;

    std::filesystem::path resolve(const ImageEntry& img) const { return base_dir / img.path; }
};

struct QualificationReport {
    bool study_qualifies = false;  // total_images >= min_total
    int total_images = 0;          // each physical image counted once
    std::map<ViewGroup, int> per_group_counts;
    std::set<ViewGroup> qualifying_groups;  // count >= min_per_group
};

// Manifest CSV, header: patient_id,study_id,scanner,date,image_path,viewpoint,
// us_grade,fat_fraction_pct,cap_score. The three label columns are optional;
// unknown extra columns are ignored.
Cohort parse_manifest(const std::filesystem::path& path, const std::filesystem::path& base_dir);
void write_manifest(const Cohort& cohort, const std::filesystem::path& path);

QualificationReport qualify_study(const StudyRecord& study, int min_per_group = 3,
                                  int min_total = 10);

// Keeps one seeded-random study per patient; studies otherwise keep cohort
// order.
Cohort select_one_study_per_patient(const Cohort& cohort, std::uint64_t seed);

}  // namespace steato
