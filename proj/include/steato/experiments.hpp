#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steato/core.hpp"
#include "steato/model.hpp"
#include "steato/ordinal.hpp"
#include "steato/preprocess.hpp"
#include "steato/synth.hpp"

namespace steato {

extern const char* kToolVersion;

struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path images_dir;
    std::filesystem::path out_dir;
    std::filesystem::path model_path;
    std::uint64_t seed = 0;
    int min_images = 3;
    img::PreprocessConfig preprocess;
    int bootstrap_replicates = 1000;
    int jobs = 0;  // worker threads; 0 = hardware concurrency
    bool one_study_per_patient = false;
    std::optional<std::array<double, 3>> grade_cutoffs;  // used by experiment 2 agreement
};

struct ImageDrop {
    std::string study_id;
    std::string image_path;
    std::string reason;
};

// One study run through load + preprocess.
struct StudyPrep {
    std::vector<img::ProcessedImage> images;
    std::vector<std::size_t> loaded_entries;  // processed source_index -> manifest image index
    std::vector<ImageDrop> drops;
    img::DualBeamDecision dual;
    bool failed = false;  // every image dropped
};

StudyPrep prep_study(const Cohort& cohort, std::size_t study_index,
                     const img::PreprocessConfig& cfg);

struct StudyScores {
    std::size_t study_index = 0;
    std::map<ViewGroup, std::vector<double>> group_scores;  // image-wise p-hat per group
    ScoreTable table;
    std::vector<ImageDrop> drops;
    bool failed = false;
};

struct CohortScores {
    std::vector<StudyScores> studies;  // parallel to cohort.studies
};

CohortScores score_cohort(const Cohort& cohort, const OrdinalHead& model, const RunConfig& cfg);

// CLI commands. Each returns the number of warnings it printed.
int cmd_preprocess(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, const TrainHyper& hyper, int augment_variants = 3);
int cmd_score(const RunConfig& cfg);
int cmd_experiment(const RunConfig& cfg, const std::string& experiment_id);
int cmd_synth(const RunConfig& cfg, const SynthSpec& spec);

// Report JSON for one experiment (also written by cmd_experiment).
nlohmann::ordered_json run_experiment(const Cohort& cohort, const CohortScores& scores,
                                      const RunConfig& cfg, const std::string& experiment_id);

// Built-in copy of schemas/experiment_report.schema.json.
const nlohmann::json& report_schema();

}  // namespace steato
