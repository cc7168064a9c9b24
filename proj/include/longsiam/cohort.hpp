#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "longsiam/nifti.hpp"
#include "longsiam/tensor.hpp"

namespace longsiam {

inline constexpr int kLabelStable = 0;
inline constexpr int kLabelDecline = 1;

/// One subject: the baseline scan, the ~12-month follow-up, and the class.
struct Sample {
    std::string subject_id;
    Volume baseline;
    Volume followup;
    int label = kLabelStable;
};

struct Cohort {
    std::vector<Sample> samples;

    int64_t size() const { return static_cast<int64_t>(samples.size()); }
    bool empty() const { return samples.empty(); }
    Shape volume_shape() const {
        if (samples.empty()) throw std::logic_error("volume_shape of empty cohort");
        return samples.front().baseline.intensities.shape();
    }
};

Cohort subset(const Cohort& cohort, const std::vector<int64_t>& indices);

/// Batch tensor [n, nx, ny, nz] of the selected samples' baseline or
/// follow-up volumes.
TensorF gather_volumes(const Cohort& cohort, const std::vector<int64_t>& indices, bool followup);

std::vector<int> gather_labels(const Cohort& cohort, const std::vector<int64_t>& indices);

/// Manifest CSV (`subject_id,baseline_path,followup_path,label`) referencing
/// one NIfTI file per image. Relative paths resolve against the manifest's
/// directory.
void write_cohort(const Cohort& cohort, const std::filesystem::path& out_dir,
                  const std::string& manifest_name = "manifest.csv");
Cohort load_cohort(const std::filesystem::path& manifest_path);

}  // namespace longsiam
