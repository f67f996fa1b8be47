#include "lffd/data.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lffd/errors.hpp"
#include "lffd/exec.hpp"
#include "lffd/image_io.hpp"
#include "lffd/rng.hpp"

namespace lffd {

namespace fs = std::filesystem;

const char* split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw DatasetError("unknown split name '" + name + "'");
}

namespace {

bool supported_image(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".raw";
}

} // namespace

DatasetScan scan_dataset(const fs::path& root) {
    if (!fs::is_directory(root))
        throw DatasetError("dataset root '" + root.string() + "' is not a directory");
    std::vector<std::string> classes;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) classes.push_back(entry.path().filename().string());
    std::sort(classes.begin(), classes.end());
    if (classes.size() != 2)
        throw DatasetError("dataset root '" + root.string() + "' must contain exactly 2 class " +
                           "folders, found " + std::to_string(classes.size()));
    DatasetScan scan;
    scan.root = root;
    scan.class_names = classes;
    for (int label = 0; label < 2; ++label) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(root / classes[static_cast<std::size_t>(label)]))
            if (entry.is_regular_file() && supported_image(entry.path()))
                files.push_back(entry.path().filename().string());
        if (files.empty())
            throw DatasetError("class folder '" + classes[static_cast<std::size_t>(label)] +
                               "' contains no supported images");
        std::sort(files.begin(), files.end());
        for (const std::string& f : files)
            scan.records.push_back({classes[static_cast<std::size_t>(label)] + "/" + f, label});
    }
    return scan;
}

DatasetScan subset_per_class(const DatasetScan& scan, int per_class) {
    if (per_class <= 0) return scan;
    DatasetScan out;
    out.root = scan.root;
    out.class_names = scan.class_names;
    std::vector<int> taken(scan.class_names.size(), 0);
    for (const ScanRecord& r : scan.records)
        if (taken[static_cast<std::size_t>(r.label)] < per_class) {
            out.records.push_back(r);
            ++taken[static_cast<std::size_t>(r.label)];
        }
    return out;
}

Manifest stratified_split(const DatasetScan& scan, std::uint64_t seed) {
    Manifest manifest;
    manifest.root = scan.root;
    manifest.class_names = scan.class_names;
    manifest.records.reserve(scan.records.size());
    for (const ScanRecord& r : scan.records) manifest.records.push_back({r.rel_path, r.label, Split::Train});

    Rng rng(seed);
    for (std::size_t label = 0; label < scan.class_names.size(); ++label) {
        std::vector<int> members;
        for (std::size_t i = 0; i < manifest.records.size(); ++i)
            if (manifest.records[i].label == static_cast<int>(label))
                members.push_back(static_cast<int>(i));
        const auto n = static_cast<std::int64_t>(members.size());
        if (n < 3)
            throw DatasetError("class '" + scan.class_names[label] + "' has only " +
                               std::to_string(n) + " images; the 70/10/20 split needs at least 3");
        rng.shuffle(members);
        const auto n_train = std::lround(0.7 * static_cast<double>(n));
        const auto n_val = std::lround(0.1 * static_cast<double>(n));
        for (std::int64_t i = 0; i < n; ++i) {
            Split s = Split::Test;
            if (i < n_train)
                s = Split::Train;
            else if (i < n_train + n_val)
                s = Split::Val;
            manifest.records[static_cast<std::size_t>(members[static_cast<std::size_t>(i)])].split = s;
        }
    }
    return manifest;
}

void save_manifest(const fs::path& file, const Manifest& manifest) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc); // binary: LF endings everywhere
    if (!out) throw IoError("cannot open '" + file.string() + "' for writing");
    for (const ManifestRecord& r : manifest.records)
        out << r.rel_path << '\t' << r.label << '\t' << split_name(r.split) << '\n';
    if (!out) throw IoError("failed writing manifest '" + file.string() + "'");
}

Manifest load_manifest(const fs::path& file, const fs::path& root) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + file.string() + "'");
    Manifest manifest;
    manifest.root = root;
    std::map<int, std::string> names;
    std::map<std::string, int> labels;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto bad = [&](const std::string& why) {
            return DatasetError("manifest '" + file.string() + "' line " + std::to_string(line_no) +
                                ": " + why);
        };
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw bad("expected path<TAB>label<TAB>split");
        ManifestRecord r;
        r.rel_path = line.substr(0, t1);
        const std::string label_text = line.substr(t1 + 1, t2 - t1 - 1);
        try {
            std::size_t used = 0;
            r.label = std::stoi(label_text, &used);
            if (used != label_text.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw bad("bad class index '" + label_text + "'");
        }
        if (r.label < 0 || r.label > 1) throw bad("class index must be 0 or 1");
        r.split = split_from_name(line.substr(t2 + 1));
        const auto slash = r.rel_path.find('/');
        if (r.rel_path.empty() || slash == 0 || slash == std::string::npos)
            throw bad("path must be <class>/<file>");
        if (!seen.insert(r.rel_path).second) throw bad("duplicate path '" + r.rel_path + "'");
        const std::string cls = r.rel_path.substr(0, slash);
        if (const auto it = names.find(r.label); it == names.end())
            names[r.label] = cls;
        else if (it->second != cls)
            throw bad("class index " + std::to_string(r.label) + " maps to both '" + it->second +
                      "' and '" + cls + "'");
        if (const auto it = labels.find(cls); it == labels.end())
            labels[cls] = r.label;
        else if (it->second != r.label)
            throw bad("class '" + cls + "' maps to both index " + std::to_string(it->second) +
                      " and " + std::to_string(r.label));
        manifest.records.push_back(std::move(r));
    }
    if (manifest.records.empty()) throw DatasetError("manifest '" + file.string() + "' is empty");
    if (names.size() != 2)
        throw DatasetError("manifest '" + file.string() + "' must cover exactly 2 classes");
    manifest.class_names = {names.at(0), names.at(1)};
    return manifest;
}

std::vector<int> split_indices(const Manifest& manifest, Split split) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
        if (manifest.records[i].split == split) idx.push_back(static_cast<int>(i));
    return idx;
}

std::int64_t split_size(const Manifest& manifest, Split split) {
    return static_cast<std::int64_t>(split_indices(manifest, split).size());
}

std::vector<std::vector<int>> batch_plan(const Manifest& manifest, Split split, int batch_size,
                                         std::uint64_t seed, int epoch) {
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    std::vector<int> idx = split_indices(manifest, split);
    if (split == Split::Train) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(idx);
    }
    std::vector<std::vector<int>> batches;
    for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(batch_size));
        batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                             idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

Batch assemble_batch(const Manifest& manifest, const std::vector<int>& record_indices, int input_hw,
                     bool center_channels) {
    if (record_indices.empty()) throw DatasetError("cannot assemble an empty batch");
    const int n = static_cast<int>(record_indices.size());
    Batch batch;
    batch.images = Tensor<float>(Shape{n, 3, input_hw, input_hw});
    batch.labels.resize(static_cast<std::size_t>(n));
    const std::int64_t image_len = static_cast<std::int64_t>(3) * input_hw * input_hw;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));

    const auto fill_slot = [&](int i) {
        const ManifestRecord& rec = manifest.records[static_cast<std::size_t>(record_indices[static_cast<std::size_t>(i)])];
        batch.labels[static_cast<std::size_t>(i)] = rec.label;
        Tensor<float> img = decode_and_resize(manifest.root / rec.rel_path, input_hw);
        normalize_pixels(img);
        if (center_channels) {
            const std::int64_t plane = static_cast<std::int64_t>(input_hw) * input_hw;
            for (int c = 0; c < 3; ++c) {
                float* p = img.data() + c * plane;
                double sum = 0.0;
                for (std::int64_t j = 0; j < plane; ++j) sum += static_cast<double>(p[j]);
                const auto mean = static_cast<float>(sum / static_cast<double>(plane));
                for (std::int64_t j = 0; j < plane; ++j) p[j] -= mean;
            }
        }
        std::copy_n(img.data(), image_len, batch.images.data() + i * image_len);
    };

    if (exec_mode() == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) {
            try {
                fill_slot(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
        for (const std::exception_ptr& e : errors) // report the lowest-index failure
            if (e) std::rethrow_exception(e);
    } else {
        for (int i = 0; i < n; ++i) fill_slot(i);
    }
    return batch;
}

} // namespace lffd
