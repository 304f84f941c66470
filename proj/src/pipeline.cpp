#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

#include "steato/augment.hpp"
#include "steato/common.hpp"
#include "steato/experiments.hpp"
#include "steato/report.hpp"

namespace steato {

const char* kToolVersion = "0.1.0";

namespace {

// Index-sliced worker pool; results land in pre-sized slots so scheduling
// cannot affect output order.
void run_parallel(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string half_suffix(img::BeamHalf half) {
    switch (half) {
        case img::BeamHalf::left: return "_L";
        case img::BeamHalf::right: return "_R";
        default: return "";
    }
}

}  // namespace

StudyPrep prep_study(const Cohort& cohort, std::size_t study_index,
                     const img::PreprocessConfig& cfg) {
    const StudyRecord& study = cohort.studies[study_index];
    StudyPrep prep;
    std::vector<img::GrayImage> loaded;
    for (std::size_t i = 0; i < study.images.size(); ++i) {
        try {
            loaded.push_back(img::read_png(cohort.resolve(study.images[i])));
            prep.loaded_entries.push_back(i);
        } catch (const std::exception& e) {
            prep.drops.push_back({study.study_id, study.images[i].path, e.what()});
        }
    }
    if (loaded.empty()) {
        prep.failed = true;
        return prep;
    }
    try {
        img::StudyPreprocessResult res = img::preprocess_study(loaded, cfg);
        prep.dual = res.dual;
        for (const img::DropReport& d : res.drops)
            prep.drops.push_back({study.study_id,
                                  study.images[prep.loaded_entries[d.source_index]].path,
                                  d.reason});
        prep.images = std::move(res.images);
    } catch (const img::EmptyStudyError& e) {
        for (const img::DropReport& d : e.drops)
            prep.drops.push_back({study.study_id,
                                  study.images[prep.loaded_entries[d.source_index]].path,
                                  d.reason});
        prep.failed = true;
    }
    return prep;
}

CohortScores score_cohort(const Cohort& cohort, const OrdinalHead& model, const RunConfig& cfg) {
    CohortScores out;
    out.studies.resize(cohort.studies.size());
    run_parallel(cohort.studies.size(), cfg.jobs, [&](std::size_t i) {
        StudyPrep prep = prep_study(cohort, i, cfg.preprocess);
        StudyScores ss;
        ss.study_index = i;
        ss.drops = std::move(prep.drops);
        ss.failed = prep.failed;
        if (!prep.failed) {
            for (const img::ProcessedImage& proc : prep.images) {
                const auto features = extract_features(proc.image, model.feature_spec);
                const double p = image_score(predict_confidences(model, features));
                const Viewpoint vp =
                    cohort.studies[i].images[prep.loaded_entries[proc.source_index]].viewpoint;
                for (ViewGroup g : view_groups_of(vp)) ss.group_scores[g].push_back(p);
            }
            ss.table = make_score_table(ss.group_scores, cfg.min_images);
        }
        out.studies[i] = std::move(ss);
    });
    return out;
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const RunConfig& cfg) {
    const Cohort cohort = parse_manifest(cfg.manifest, cfg.images_dir);
    if (cohort.studies.empty()) throw DataError("empty cohort");
    std::filesystem::create_directories(cfg.out_dir);

    struct StudyOut {
        std::vector<ImageDrop> drops;
        std::size_t written = 0;
        bool failed = false;
        bool dual = false;
    };
    std::vector<StudyOut> per_study(cohort.studies.size());
    run_parallel(cohort.studies.size(), cfg.jobs, [&](std::size_t i) {
        const StudyRecord& study = cohort.studies[i];
        StudyPrep prep = prep_study(cohort, i, cfg.preprocess);
        StudyOut& so = per_study[i];
        so.drops = std::move(prep.drops);
        so.failed = prep.failed;
        so.dual = prep.dual.is_dual;
        if (prep.failed) return;
        const std::filesystem::path study_dir = cfg.out_dir / study.study_id;
        std::filesystem::create_directories(study_dir);
        for (const img::ProcessedImage& proc : prep.images) {
            const auto& entry = study.images[prep.loaded_entries[proc.source_index]];
            const std::string stem = std::filesystem::path(entry.path).stem().string();
            img::write_png(proc.image, study_dir / (stem + half_suffix(proc.half) + ".png"));
            ++so.written;
        }
    });

    std::ofstream drop_csv(cfg.out_dir / "dropped_images.csv", std::ios::binary);
    drop_csv << "study_id,image_path,reason\n";
    int warnings = 0;
    std::size_t written = 0, dual_studies = 0;
    for (std::size_t i = 0; i < per_study.size(); ++i) {
        const StudyOut& so = per_study[i];
        written += so.written;
        dual_studies += so.dual ? 1 : 0;
        for (const ImageDrop& d : so.drops) {
            drop_csv << d.study_id << ',' << d.image_path << ",\"" << d.reason << "\"\n";
            ++warnings;
        }
        if (so.failed) {
            std::cerr << "warning: study " << cohort.studies[i].study_id
                      << " produced no usable images\n";
            ++warnings;
        }
    }
    std::cout << "preprocessed " << cohort.studies.size() << " studies, wrote " << written
              << " images (" << dual_studies << " dual-beam studies), " << warnings
              << " warnings\n";
    return warnings;
}

int cmd_train(const RunConfig& cfg, const TrainHyper& hyper, int augment_variants) {
    const Cohort cohort = parse_manifest(cfg.manifest, cfg.images_dir);
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < cohort.studies.size(); ++i)
        if (cohort.studies[i].us_grade) labeled.push_back(i);
    if (labeled.empty()) throw DataError("no studies with us_grade labels to train on");

    const FeatureSpec spec;
    AugmentConfig aug;
    std::vector<std::vector<TrainSample>> per_study(labeled.size());
    run_parallel(labeled.size(), cfg.jobs, [&](std::size_t li) {
        const std::size_t study_index = labeled[li];
        const StudyPrep prep = prep_study(cohort, study_index, cfg.preprocess);
        if (prep.failed) return;
        const OrdinalLabelVector label =
            encode_ordinal(*cohort.studies[study_index].us_grade);
        std::vector<TrainSample>& samples = per_study[li];
        for (std::size_t pi = 0; pi < prep.images.size(); ++pi) {
            const img::GrayImage& base = prep.images[pi].image;
            samples.push_back({extract_features(base, spec), label});
            for (int v = 0; v < augment_variants; ++v) {
                std::mt19937_64 rng(derive_seed(cfg.seed, study_index * 1000 + pi,
                                                static_cast<std::uint64_t>(v)));
                samples.push_back({extract_features(augment(base, aug, rng), spec), label});
            }
        }
    });

    std::vector<TrainSample> data;
    for (auto& s : per_study)
        for (auto& sample : s) data.push_back(std::move(sample));
    if (data.empty()) throw DataError("no trainable images after preprocessing");

    TrainHyper h = hyper;
    h.seed = h.seed ? h.seed : cfg.seed;
    const OrdinalHead head = train_ordinal_head(data, h, spec);

    // Final per-cutoff BCE on the training set.
    std::array<double, 3> per_cutoff{0.0, 0.0, 0.0};
    for (const TrainSample& s : data) {
        const OrdinalConfidence y = predict_confidences(head, s.features);
        for (int i = 0; i < 3; ++i) {
            const double p = std::clamp(y.y_hat[static_cast<std::size_t>(i)], 1e-12, 1.0 - 1e-12);
            const int t = s.label.bits[static_cast<std::size_t>(i)];
            per_cutoff[static_cast<std::size_t>(i)] -=
                t ? std::log(p) : std::log1p(-p);
        }
    }
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path model_path =
        cfg.model_path.empty() ? cfg.out_dir / "model.json" : cfg.model_path;
    save_model(head, model_path);
    std::cout << "trained on " << data.size() << " samples; final per-cutoff losses:";
    for (int i = 0; i < 3; ++i)
        std::cout << ' '
                  << format_double(per_cutoff[static_cast<std::size_t>(i)] /
                                   static_cast<double>(data.size()));
    std::cout << "\nmodel written to " << model_path.string() << '\n';
    return 0;
}

int cmd_score(const RunConfig& cfg) {
    const Cohort cohort = parse_manifest(cfg.manifest, cfg.images_dir);
    if (cohort.studies.empty()) throw DataError("empty cohort");
    const OrdinalHead model = load_model(cfg.model_path);
    const CohortScores scores = score_cohort(cohort, model, cfg);

    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir / "scores.csv", std::ios::binary);
    out << "study_id,patient_id,scanner,date,total_images";
    for (ViewGroup g : kAllViewGroups)
        out << ",score_" << view_group_name(g) << ",n_" << view_group_name(g);
    out << ",all_view_groups\n";

    int warnings = 0;
    for (std::size_t i = 0; i < cohort.studies.size(); ++i) {
        const StudyRecord& study = cohort.studies[i];
        const StudyScores& ss = scores.studies[i];
        out << study.study_id << ',' << study.patient_id << ',' << study.scanner << ','
            << study.date << ',' << study.images.size();
        for (ViewGroup g : kAllViewGroups) {
            const auto it = ss.table.per_group.find(g);
            out << ',';
            if (it != ss.table.per_group.end() && it->second.qualifying)
                out << format_double(it->second.score);
            out << ',' << (it != ss.table.per_group.end() ? it->second.n_images : 0);
        }
        out << ',';
        if (ss.table.all_groups) {
            out << format_double(*ss.table.all_groups);
        } else {
            std::cerr << "warning: study " << study.study_id << " has no qualifying view group\n";
            ++warnings;
        }
        out << '\n';
    }
    std::cout << "wrote scores for " << cohort.studies.size() << " studies\n";
    return warnings;
}

int cmd_synth(const RunConfig& cfg, const SynthSpec& spec) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path images_dir = cfg.out_dir / "images";
    SynthSpec s = spec;
    s.seed = spec.seed ? spec.seed : cfg.seed;
    const SynthResult result = generate_synthetic_cohort(s, images_dir);
    write_manifest(result.cohort, cfg.out_dir / "manifest.csv");
    std::size_t n_dual = 0, n_images = 0;
    for (const auto& st : result.studies) n_dual += st.dual ? 1 : 0;
    for (const auto& st : result.cohort.studies) n_images += st.images.size();
    std::cout << "generated " << result.cohort.studies.size() << " studies (" << n_dual
              << " dual-beam), " << n_images << " images under " << images_dir.string() << '\n';
    return 0;
}

}  // namespace steato
