#include "oreyolo/dataset.hpp"

#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oreyolo/errors.hpp"
#include "oreyolo/kv_file.hpp"

namespace oreyolo {

namespace fs = std::filesystem;

namespace {

constexpr double kSlack = 1e-5;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << text;
}

bool parse_number(const std::string& token, double& value) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

}  // namespace

void validate_label(const BoxLabel& l, const std::string& source) {
  auto fail = [&](const std::string& what) {
    throw DataError(source + ": " + what);
  };
  if (l.class_id < 0) {
    fail("negative class id");
  }
  if (!(l.cx >= 0.0 && l.cx <= 1.0 && l.cy >= 0.0 && l.cy <= 1.0)) {
    fail("box centre outside [0, 1]");
  }
  if (!(l.w > 0.0 && l.w <= 1.0 && l.h > 0.0 && l.h <= 1.0)) {
    fail("box size outside (0, 1]");
  }
  if (l.cx - l.w / 2 < -kSlack || l.cx + l.w / 2 > 1.0 + kSlack || l.cy - l.h / 2 < -kSlack ||
      l.cy + l.h / 2 > 1.0 + kSlack) {
    fail("box extends past the image");
  }
}

std::vector<BoxLabel> parse_labels(const std::string& text, const std::string& source) {
  std::vector<BoxLabel> labels;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) {
      tokens.push_back(t);
    }
    if (tokens.empty()) {
      continue;
    }
    if (tokens.size() != 5) {
      throw DataError(where + ": expected 5 fields, got " + std::to_string(tokens.size()));
    }
    double v[5];
    for (int i = 0; i < 5; ++i) {
      if (!parse_number(tokens[i], v[i])) {
        throw DataError(where + ": not a number: '" + tokens[i] + "'");
      }
    }
    if (v[0] != static_cast<int>(v[0])) {
      throw DataError(where + ": class id must be an integer");
    }
    BoxLabel label{static_cast<int>(v[0]), v[1], v[2], v[3], v[4]};
    validate_label(label, where);
    labels.push_back(label);
  }
  return labels;
}

std::string format_labels(const std::vector<BoxLabel>& labels) {
  std::string out;
  for (const auto& l : labels) {
    out += std::to_string(l.class_id) + " " + format_real(l.cx) + " " + format_real(l.cy) + " " +
           format_real(l.w) + " " + format_real(l.h) + "\n";
  }
  return out;
}

std::vector<DatasetSample> load_dataset(const fs::path& root, const LoadOptions& options) {
  const fs::path images = root / "images";
  const fs::path labels = root / "labels";
  if (!fs::is_directory(images)) {
    throw DataError("missing image directory " + images.string());
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.is_regular_file() && is_image(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  const std::set<std::string> wanted(options.ids.begin(), options.ids.end());
  std::vector<DatasetSample> samples;
  std::set<std::string> found;
  for (const auto& file : files) {
    const std::string id = file.stem().string();
    if (!wanted.empty() && !wanted.contains(id)) {
      continue;
    }
    if (!found.insert(id).second) {
      throw DataError("duplicate image id " + id + " in " + images.string());
    }
    DatasetSample s;
    s.id = id;
    s.image = cv::imread(file.string(), cv::IMREAD_COLOR);
    if (s.image.empty()) {
      throw DataError("cannot decode image " + file.string());
    }
    const fs::path label_file = labels / (id + ".txt");
    if (fs::exists(label_file)) {
      s.labels = parse_labels(read_text(label_file), label_file.string());
    } else if (options.warnings != nullptr) {
      options.warnings->push_back("no label file for " + file.string() + "; treating as empty");
    }
    samples.push_back(std::move(s));
  }
  for (const auto& id : wanted) {
    if (!found.contains(id)) {
      throw DataError("id " + id + " listed but no image found under " + images.string());
    }
  }
  return samples;
}

void save_dataset(const std::vector<DatasetSample>& samples, const fs::path& root) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  for (const auto& s : samples) {
    const fs::path image = root / "images" / (s.id + ".png");
    if (!cv::imwrite(image.string(), s.image)) {
      throw DataError("cannot write " + image.string());
    }
    write_text(root / "labels" / (s.id + ".txt"), format_labels(s.labels));
  }
}

SplitIndices split_indices(std::size_t n, std::array<double, 3> ratios, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (!(sum > 0.0) || ratios[0] < 0.0 || ratios[1] < 0.0 || ratios[2] < 0.0) {
    throw InvalidConfigError("split ratios must be non-negative with a positive sum");
  }
  if (n < 3) {
    throw DataError("need at least 3 samples to split, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }
  const auto cut = [&](double r) {
    return static_cast<std::size_t>(static_cast<double>(n) * r / sum + 1e-9);
  };
  const std::size_t n_train = cut(ratios[0]);
  const std::size_t n_val = cut(ratios[1]);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + n_train);
  out.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  out.test.assign(order.begin() + n_train + n_val, order.end());
  return out;
}

DatasetSplit split_dataset(const std::vector<DatasetSample>& samples, std::array<double, 3> ratios,
                           std::uint64_t seed) {
  const auto idx = split_indices(samples.size(), ratios, seed);
  DatasetSplit out;
  for (auto i : idx.train) out.train.push_back(samples[i]);
  for (auto i : idx.val) out.val.push_back(samples[i]);
  for (auto i : idx.test) out.test.push_back(samples[i]);
  return out;
}

void write_manifest(const fs::path& path, const std::vector<std::string>& ids) {
  std::string text;
  for (const auto& id : ids) {
    text += id + "\n";
  }
  write_text(path, text);
}

std::vector<std::string> read_manifest(const fs::path& path) {
  if (!fs::exists(path)) {
    throw DataError("missing split manifest " + path.string());
  }
  std::vector<std::string> ids;
  std::istringstream lines(read_text(path));
  for (std::string line; std::getline(lines, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (!line.empty()) {
      ids.push_back(line);
    }
  }
  return ids;
}

void write_split_manifests(const fs::path& root, const std::vector<std::string>& ids,
                           std::array<double, 3> ratios, std::uint64_t seed) {
  const auto idx = split_indices(ids.size(), ratios, seed);
  auto pick = [&](const std::vector<std::size_t>& v) {
    std::vector<std::string> out;
    for (auto i : v) out.push_back(ids[i]);
    std::sort(out.begin(), out.end());
    return out;
  };
  write_manifest(root / "train.txt", pick(idx.train));
  write_manifest(root / "val.txt", pick(idx.val));
  write_manifest(root / "test.txt", pick(idx.test));
}

std::vector<DatasetSample> load_split(const fs::path& root, const std::string& split,
                                      std::vector<std::string>* warnings) {
  const auto ids = read_manifest(root / (split + ".txt"));
  if (ids.empty()) {
    throw DataError("split '" + split + "' under " + root.string() + " has no images");
  }
  LoadOptions options;
  options.ids = ids;
  options.warnings = warnings;
  return load_dataset(root, options);
}

std::vector<std::string> read_class_names(const fs::path& root) {
  const fs::path path = root / "classes.txt";
  if (!fs::exists(path)) {
    return {};
  }
  return read_manifest(path);
}

}  // namespace oreyolo
