#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lffd/tensor.hpp"

namespace lffd {

enum class Split { Train, Val, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

// One image found under the dataset root, before split assignment.
struct ScanRecord {
    std::string rel_path; // "<class>/<file>", '/' separators
    int label = 0;
};

struct DatasetScan {
    std::filesystem::path root;
    std::vector<std::string> class_names; // sorted; index == label
    std::vector<ScanRecord> records;      // lexicographic by rel_path
};

// Expects exactly two class folders under root, each with at least one
// supported image (.jpg/.jpeg/.png/.raw). Class indices follow sorted
// folder names (fake=0, real=1 for the paper's layout).
DatasetScan scan_dataset(const std::filesystem::path& root);

// First per_class files of each class in lexicographic order (trimming an
// oversized source tree to configured counts). per_class <= 0 keeps everything.
DatasetScan subset_per_class(const DatasetScan& scan, int per_class);

struct ManifestRecord {
    std::string rel_path;
    int label = 0;
    Split split = Split::Train;
};

struct Manifest {
    std::filesystem::path root;
    std::vector<std::string> class_names;
    std::vector<ManifestRecord> records; // scan order (lexicographic)
};

// Per class: shuffle with the seed, then assign round(0.7 n) train,
// round(0.1 n) val, remainder test. Record order in the result stays
// lexicographic; only membership is randomized. Classes with fewer than
// 3 images are infeasible.
Manifest stratified_split(const DatasetScan& scan, std::uint64_t seed);

// One record per line: relative-path<TAB>class-index<TAB>split-name, LF.
void save_manifest(const std::filesystem::path& file, const Manifest& manifest);
Manifest load_manifest(const std::filesystem::path& file, const std::filesystem::path& root);

std::vector<int> split_indices(const Manifest& manifest, Split split);
std::int64_t split_size(const Manifest& manifest, Split split);

// Record indices chunked into batches. The train split is reshuffled per
// (seed, epoch); val/test keep manifest order. The final partial batch is
// kept. An empty split yields an empty list.
std::vector<std::vector<int>> batch_plan(const Manifest& manifest, Split split, int batch_size,
                                         std::uint64_t seed, int epoch);

struct Batch {
    Tensor<float> images; // N x 3 x hw x hw, values in [0,1]
    std::vector<int> labels;
};

// Decodes, resizes, and normalizes the given records. Distinct files decode
// in parallel in Parallel mode; each lands in its own slot, so assembly
// order is deterministic. center_channels additionally subtracts each
// image's per-channel mean (off by default).
Batch assemble_batch(const Manifest& manifest, const std::vector<int>& record_indices, int input_hw,
                     bool center_channels = false);

} // namespace lffd
