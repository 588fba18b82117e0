#pragma once

#include <opencv2/core.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oreyolo/box.hpp"

namespace oreyolo {

/// One image (8-bit, 3 channels, BGR) with its labels.
struct DatasetSample {
  cv::Mat image;
  std::vector<BoxLabel> labels;
  std::string id;
};

/// Throws DataError naming `source` when the label is out of range: class
/// must be >= 0, centre in [0, 1], size in (0, 1] and the box inside the
/// unit square (1e-5 slack for rounded decimals).
void validate_label(const BoxLabel& label, const std::string& source);

/// Parses "class_id cx cy w h" lines. Blank lines are skipped; anything
/// else malformed raises DataError with `source:line`.
std::vector<BoxLabel> parse_labels(const std::string& text, const std::string& source);
std::string format_labels(const std::vector<BoxLabel>& labels);

struct LoadOptions {
  /// Restrict to these ids (stems); empty loads every image.
  std::vector<std::string> ids;
  /// Receives one message per image without a label file.
  std::vector<std::string>* warnings = nullptr;
};

/// Reads root/images/*.{png,jpg,jpeg,bmp} with root/labels/<stem>.txt,
/// sorted by id.
std::vector<DatasetSample> load_dataset(const std::filesystem::path& root,
                                        const LoadOptions& options = {});

/// Writes images as PNG plus label files under root.
void save_dataset(const std::vector<DatasetSample>& samples, const std::filesystem::path& root);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) cut by the normalised ratios. Train and val
/// sizes round down; test takes the remainder. DataError if n < 3.
SplitIndices split_indices(std::size_t n, std::array<double, 3> ratios, std::uint64_t seed);

struct DatasetSplit {
  std::vector<DatasetSample> train;
  std::vector<DatasetSample> val;
  std::vector<DatasetSample> test;
};

DatasetSplit split_dataset(const std::vector<DatasetSample>& samples,
                           std::array<double, 3> ratios = {7.0, 2.0, 1.0},
                           std::uint64_t seed = 0);

/// Split manifests: root/<name>.txt with one id per line.
void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& ids);
std::vector<std::string> read_manifest(const std::filesystem::path& path);

/// Writes train.txt / val.txt / test.txt for the ids under root.
void write_split_manifests(const std::filesystem::path& root, const std::vector<std::string>& ids,
                           std::array<double, 3> ratios, std::uint64_t seed);

/// Loads the ids listed in root/<split>.txt. DataError when the manifest is
/// missing or lists no ids.
std::vector<DatasetSample> load_split(const std::filesystem::path& root, const std::string& split,
                                      std::vector<std::string>* warnings = nullptr);

/// Class names from root/classes.txt (one per line); empty if absent.
std::vector<std::string> read_class_names(const std::filesystem::path& root);

}  // namespace oreyolo
