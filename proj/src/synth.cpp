#include "steato/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "steato/common.hpp"
#include "steato/image.hpp"

namespace steato {

namespace {

constexpr int kMargin = 8;  // header strip the preprocessing margin removes

// Beam border geometry in post-margin coordinates; the single beam's borders
// extrapolate to an apex above the image, the dual beams' inner borders
// cross inside it near the horizontal center.
struct BeamLayout {
    bool dual;
    double left_l(double y) const { return dual ? 30.0 + 0.05 * y : 128.0 - 0.374 * y; }
    double left_r(double y) const { return dual ? 130.0 + 0.28 * y : 232.0 + 0.374 * y; }
    double right_l(double y) const { return 230.0 - 0.28 * y; }
    double right_r(double y) const { return 330.0 - 0.05 * y; }

    bool inside(double x, double y) const {
        if (x >= left_l(y) && x <= left_r(y)) return true;
        return dual && x >= right_l(y) && x <= right_r(y);
    }
};

img::GrayImage render_frame(const SynthSpec& spec, bool dual, double base_intensity,
                            std::mt19937_64& rng) {
    img::GrayImage frame(spec.canvas_width, spec.canvas_height, 0);
    BeamLayout layout{dual};
    std::normal_distribution<double> speckle(0.0, 12.0);
    for (int y = 0; y < spec.beam_rows; ++y) {
        for (int x = 0; x < spec.canvas_width - 2 * kMargin; ++x) {
            if (!layout.inside(static_cast<double>(x), static_cast<double>(y))) continue;
            const double v = base_intensity + speckle(rng);
            frame.at(x + kMargin, y + kMargin) =
                static_cast<std::uint8_t>(std::clamp(std::lround(v), 60L, 255L));
        }
    }
    return frame;
}

double fat_fraction_for_grade(int grade, std::mt19937_64& rng) {
    static constexpr double lo[] = {0.0, 5.0, 33.0, 66.0};
    static constexpr double hi[] = {5.0, 33.0, 66.0, 100.0};
    std::uniform_real_distribution<double> u(lo[grade], hi[grade]);
    return u(rng);
}

}  // namespace

SynthResult generate_synthetic_cohort(const SynthSpec& spec,
                                      const std::filesystem::path& images_dir) {
    if (spec.n_patients < 1) throw std::invalid_argument("synth: n_patients must be >= 1");
    if (spec.scanners.empty()) throw std::invalid_argument("synth: need at least one scanner");
    if (!(spec.dual_fraction >= 0.0 && spec.dual_fraction <= 1.0))
        throw std::invalid_argument("synth: dual_fraction must be in [0,1]");
    std::filesystem::create_directories(images_dir);

    // Viewpoint template: LLL 4, RLL 4, LKC 4 (2 via e), SC 3.
    static constexpr char kViewTemplate[] = {'a', 'a', 'b', 'b', 'c', 'c', 'c',
                                             'c', 'd', 'd', 'e', 'e', 'f'};

    SynthResult result;
    result.cohort.base_dir = images_dir;
    std::size_t study_ordinal = 0;
    for (int p = 0; p < spec.n_patients; ++p) {
        const int grade = p % 4;
        // Deterministic proportional assignment: patient p is dual when the
        // running count floor((p+1)*f) advances.
        const bool patient_dual =
            std::floor((p + 1) * spec.dual_fraction + 1e-9) >
            std::floor(p * spec.dual_fraction + 1e-9);
        char patient_id[16];
        std::snprintf(patient_id, sizeof(patient_id), "p%03d", p);

        std::mt19937_64 patient_rng(derive_seed(spec.seed, static_cast<std::uint64_t>(p)));
        const double fat = fat_fraction_for_grade(grade, patient_rng);
        std::normal_distribution<double> cap_noise(0.0, 10.0);
        const double cap = 150.0 + 1.5 * fat + cap_noise(patient_rng);

        for (std::size_t s = 0; s < spec.scanners.size(); ++s, ++study_ordinal) {
            StudyRecord study;
            study.patient_id = patient_id;
            study.study_id = std::string(patient_id) + "_" + spec.scanners[s];
            study.scanner = spec.scanners[s];
            study.date = "2024-03-01";
            study.us_grade = grade_from_int(grade);
            study.fat_fraction_pct = fat;
            study.cap_score = cap;

            std::mt19937_64 rng(derive_seed(spec.seed, study_ordinal, 0x5731u));
            // Small per-scanner offset so cross-scanner differences are
            // nonzero but tight.
            const double scanner_offset = (static_cast<double>(s) - 1.0) * 2.0;
            const std::filesystem::path study_dir = images_dir / study.study_id;
            std::filesystem::create_directories(study_dir);

            std::normal_distribution<double> image_jitter(0.0, 4.0);
            for (std::size_t k = 0; k < sizeof(kViewTemplate); ++k) {
                const double base = 90.0 + 35.0 * grade + scanner_offset + image_jitter(rng);
                const img::GrayImage frame = render_frame(spec, patient_dual, base, rng);
                char name[32];
                std::snprintf(name, sizeof(name), "img_%02zu.png", k);
                img::write_png(frame, study_dir / name);
                study.images.push_back(
                    {study.study_id + "/" + name, viewpoint_from_code(kViewTemplate[k])});
            }
            result.studies.push_back({study.study_id, patient_dual});
            result.cohort.studies.push_back(std::move(study));
        }
    }
    return result;
}

}  // namespace steato
