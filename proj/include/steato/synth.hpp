#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "steato/core.hpp"

namespace steato {

// Phantom cohort generator: fan-shaped textured beams on black, severity
// encoded as echotexture brightness, optional side-by-side dual beams whose
// inner borders intersect near the horizontal center.
struct SynthSpec {
    int n_patients = 10;
    std::vector<std::string> scanners = {"synthA"};  // one study per scanner per patient
    double dual_fraction = 0.5;
    std::uint64_t seed = 0;
    int canvas_width = 376;
    int canvas_height = 296;
    int beam_rows = 250;  // beam extent below the 8-pixel header margin
};

struct SynthStudyInfo {
    std::string study_id;
    bool dual = false;
};

struct SynthResult {
    Cohort cohort;
    std::vector<SynthStudyInfo> studies;  // parallel to cohort.studies
};

// Writes one PNG per image under images_dir/<study_id>/ and returns the
// matching cohort (paths relative to images_dir).
SynthResult generate_synthetic_cohort(const SynthSpec& spec,
                                      const std::filesystem::path& images_dir);

}  // namespace steato
