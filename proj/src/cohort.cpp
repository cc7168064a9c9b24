#include "longsiam/cohort.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "longsiam/io_util.hpp"

namespace longsiam {

Cohort subset(const Cohort& cohort, const std::vector<int64_t>& indices) {
    Cohort out;
    out.samples.reserve(indices.size());
    for (int64_t i : indices) {
        if (i < 0 || i >= cohort.size())
            throw std::out_of_range("subset: index " + std::to_string(i) + " out of range");
        out.samples.push_back(cohort.samples[static_cast<size_t>(i)]);
    }
    return out;
}

TensorF gather_volumes(const Cohort& cohort, const std::vector<int64_t>& indices, bool followup) {
    if (indices.empty()) throw std::invalid_argument("gather_volumes: empty selection");
    const Shape vs = cohort.volume_shape();
    const int64_t v = vs.count();
    const int64_t n = static_cast<int64_t>(indices.size());
    TensorF out = TensorF::zeros(Shape{n, vs[0], vs[1], vs[2]});
    for (int64_t r = 0; r < n; ++r) {
        const Sample& s = cohort.samples[static_cast<size_t>(indices[static_cast<size_t>(r)])];
        const Volume& vol = followup ? s.followup : s.baseline;
        if (vol.intensities.shape() != vs)
            throw std::invalid_argument("gather_volumes: inconsistent volume shapes in cohort");
        std::memcpy(out.data() + r * v, vol.intensities.data(),
                    static_cast<size_t>(v) * sizeof(float));
    }
    return out;
}

std::vector<int> gather_labels(const Cohort& cohort, const std::vector<int64_t>& indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (int64_t i : indices) out.push_back(cohort.samples[static_cast<size_t>(i)].label);
    return out;
}

void write_cohort(const Cohort& cohort, const std::filesystem::path& out_dir,
                  const std::string& manifest_name) {
    std::filesystem::create_directories(out_dir);
    std::ostringstream manifest;
    manifest << "subject_id,baseline_path,followup_path,label\n";
    for (const Sample& s : cohort.samples) {
        const std::string base_name = s.subject_id + "_baseline.nii.gz";
        const std::string foll_name = s.subject_id + "_followup.nii.gz";
        write_nifti_file(out_dir / base_name, s.baseline);
        write_nifti_file(out_dir / foll_name, s.followup);
        manifest << s.subject_id << ',' << base_name << ',' << foll_name << ',' << s.label << '\n';
    }
    atomic_write_file(out_dir / manifest_name, manifest.str());
}

Cohort load_cohort(const std::filesystem::path& manifest_path) {
    const std::vector<uint8_t> bytes = read_file_bytes(manifest_path);
    std::istringstream is(std::string(bytes.begin(), bytes.end()));
    const std::filesystem::path dir = manifest_path.parent_path();

    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("manifest is empty: " + manifest_path.string());
    const std::vector<std::string> header = split_csv_line(line);
    if (header != std::vector<std::string>{"subject_id", "baseline_path", "followup_path", "label"})
        throw std::runtime_error("manifest header mismatch in " + manifest_path.string());

    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : dir / fp;
    };

    Cohort cohort;
    size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 4)
            throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                     ": expected 4 fields, got " + std::to_string(f.size()));
        Sample s;
        s.subject_id = f[0];
        s.baseline = read_nifti_file(resolve(f[1]));
        s.followup = read_nifti_file(resolve(f[2]));
        if (f[3] != "0" && f[3] != "1")
            throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                     ": label must be 0 or 1, got '" + f[3] + "'");
        s.label = f[3] == "1" ? 1 : 0;
        if (s.baseline.intensities.shape() != s.followup.intensities.shape())
            throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                     ": baseline/followup shapes differ");
        cohort.samples.push_back(std::move(s));
    }
    if (cohort.empty()) throw std::runtime_error("manifest has no samples: " + manifest_path.string());
    return cohort;
}

}  // namespace longsiam
