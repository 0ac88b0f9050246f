#include "unlearn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "unlearn/errors.hpp"

namespace unlearn {
namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& what) {
  if (buf.size() < offset + 4) throw FormatError(what + ": truncated header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

std::vector<double> parse_row(const std::string& line, char delimiter, std::size_t line_no) {
  std::vector<double> row;
  auto parse_field = [&](std::string_view field) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) throw FormatError("line " + std::to_string(line_no) + ": empty field");
    field = field.substr(b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": non-numeric field '" + std::string(field) + "'");
    }
    row.push_back(v);
  };
  if (delimiter == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) parse_field(tok);
  } else {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(delimiter, start);
      parse_field(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  }
  return row;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

void RawDataset::validate() const {
  if (labels.size() != features.rows()) throw std::invalid_argument("RawDataset: label count mismatch");
  if (features.size() > 0 && (features.minCoeff() < lo || features.maxCoeff() > hi)) {
    throw std::invalid_argument("RawDataset: feature outside [lo, hi]");
  }
}

RawDataset load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path) {
  const auto images = read_bytes(image_path);
  const auto labels = read_bytes(label_path);
  if (read_be32(images, 0, "images") != kIdxImageMagic) throw FormatError("images: bad IDX magic");
  if (read_be32(labels, 0, "labels") != kIdxLabelMagic) throw FormatError("labels: bad IDX magic");

  const std::size_t n = read_be32(images, 4, "images");
  const std::size_t rows = read_be32(images, 8, "images");
  const std::size_t cols = read_be32(images, 12, "images");
  const std::size_t n_labels = read_be32(labels, 4, "labels");
  if (n != n_labels) {
    throw FormatError("IDX: " + std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
  }
  const std::size_t d = rows * cols;
  if (images.size() < 16 + n * d) throw FormatError("images: truncated pixel data");
  if (labels.size() < 8 + n) throw FormatError("labels: truncated label data");

  RawDataset raw;
  raw.lo = 0.0;
  raw.hi = 1.0;
  raw.features.resize(static_cast<Index>(n), static_cast<Index>(d));
  raw.labels.resize(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      raw.features(static_cast<Index>(i), static_cast<Index>(j)) = images[16 + i * d + j] / 255.0;
    }
    raw.labels(static_cast<Index>(i)) = labels[8 + i];
  }
  return raw;
}

RawDataset load_delimited(const std::filesystem::path& features_path, const std::filesystem::path& labels_path,
                          char delimiter, double lo, double hi) {
  std::ifstream fin(features_path);
  if (!fin) throw FormatError("cannot open " + features_path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(fin, line)) {
    ++line_no;
    if (blank(line)) continue;
    rows.push_back(parse_row(line, delimiter, line_no));
    if (rows.back().size() != rows.front().size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                        " fields, found " + std::to_string(rows.back().size()));
    }
  }

  std::ifstream lin(labels_path);
  if (!lin) throw FormatError("cannot open " + labels_path.string());
  std::vector<int> labels;
  line_no = 0;
  while (std::getline(lin, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto b = line.find_first_not_of(" \t\r");
    const auto e = line.find_last_not_of(" \t\r");
    int v = 0;
    const char* first = line.data() + b;
    const char* last = line.data() + e + 1;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw FormatError("labels line " + std::to_string(line_no) + ": not an integer");
    labels.push_back(v);
  }
  if (labels.size() != rows.size()) {
    throw FormatError(std::to_string(rows.size()) + " feature rows but " + std::to_string(labels.size()) + " labels");
  }

  RawDataset raw;
  raw.lo = lo;
  raw.hi = hi;
  const Index n = static_cast<Index>(rows.size());
  const Index d = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
  raw.features.resize(n, d);
  raw.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (v < lo || v > hi) {
        throw FormatError("row " + std::to_string(i) + ": feature " + std::to_string(v) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
      }
      raw.features(i, j) = v;
    }
    raw.labels(i) = labels[static_cast<std::size_t>(i)];
  }
  return raw;
}

RawDataset synth_gaussian(Index n, Index d, int n_classes, double separation, std::uint64_t seed, double noise) {
  if (n <= 0 || d <= 0 || n_classes < 2 || n_classes > d) {
    throw std::invalid_argument("synth_gaussian: need n, d > 0 and 2 <= n_classes <= d");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, n_classes - 1);
  std::normal_distribution<double> normal(0.0, noise);
  RawDataset raw;
  raw.lo = 0.0;
  raw.hi = 1.0;
  raw.features.resize(n, d);
  raw.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const int k = pick(rng);
    raw.labels(i) = k;
    for (Index j = 0; j < d; ++j) {
      const double mean = j == k ? separation : 0.0;
      raw.features(i, j) = std::clamp(mean + normal(rng), 0.0, 1.0);
    }
  }
  return raw;
}

RawDataset binarize(const RawDataset& raw, int class_a, int class_b) {
  std::vector<Index> keep;
  bool has_a = false, has_b = false;
  for (Index i = 0; i < raw.size(); ++i) {
    const int y = raw.labels(i);
    has_a = has_a || y == class_a;
    has_b = has_b || y == class_b;
    if (y == class_a || y == class_b) keep.push_back(i);
  }
  if (!has_a || !has_b) throw std::invalid_argument("binarize: class missing from the dataset");
  RawDataset out;
  out.lo = raw.lo;
  out.hi = raw.hi;
  out.features.resize(static_cast<Index>(keep.size()), raw.dim());
  out.labels.resize(static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.features.row(static_cast<Index>(i)) = raw.features.row(keep[i]);
    out.labels(static_cast<Index>(i)) = raw.labels(keep[i]) == class_a ? 1 : -1;
  }
  return out;
}

double normalization_scale(double lo, double hi, Index d) {
  return std::max(std::abs(lo), std::abs(hi)) * std::sqrt(static_cast<double>(d));
}

Dataset normalize(const RawDataset& raw) {
  Dataset out;
  out.scale = normalization_scale(raw.lo, raw.hi, raw.dim());
  out.features = raw.features / out.scale;
  out.labels = raw.labels;
  return out;
}

void SplitSpec::validate() const {
  auto sorted = [](std::vector<Index> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto train = sorted(train_indices);
  const auto test = sorted(test_indices);
  const auto poison = sorted(poison_indices);
  const auto surrogate = sorted(surrogate_indices);
  auto disjoint = [](const std::vector<Index>& a, const std::vector<Index>& b) {
    std::vector<Index> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return both.empty();
  };
  if (!std::includes(train.begin(), train.end(), poison.begin(), poison.end())) {
    throw std::logic_error("SplitSpec: poison rows must come from the training rows");
  }
  if (!disjoint(train, surrogate) || !disjoint(train, test) || !disjoint(test, surrogate)) {
    throw std::logic_error("SplitSpec: train, test and surrogate rows overlap");
  }
}

SplitSpec make_split(Index n, double test_fraction, Index m_poison, bool grey_box, double surrogate_fraction,
                     std::uint64_t seed) {
  if (n <= 0 || test_fraction < 0.0 || test_fraction >= 1.0 || surrogate_fraction < 0.0 || m_poison < 0) {
    throw std::invalid_argument("make_split: invalid sizes");
  }
  const Index n_test = static_cast<Index>(std::floor(test_fraction * static_cast<double>(n)));
  const Index n_surrogate = grey_box ? static_cast<Index>(std::floor(surrogate_fraction * static_cast<double>(n))) : 0;
  const Index n_train = n - n_test - n_surrogate;
  if (n_train <= 0 || m_poison > n_train || (grey_box && n_surrogate == 0)) {
    throw std::invalid_argument("make_split: infeasible split for n = " + std::to_string(n));
  }

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  SplitSpec split;
  auto it = perm.begin();
  split.test_indices.assign(it, it + n_test);
  it += n_test;
  split.surrogate_indices.assign(it, it + n_surrogate);
  it += n_surrogate;
  split.train_indices.assign(it, perm.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());

  // Poison rows: a uniform sample without replacement from the training rows.
  std::vector<Index> pool = split.train_indices;
  std::shuffle(pool.begin(), pool.end(), rng);
  split.poison_indices.assign(pool.begin(), pool.begin() + m_poison);
  std::sort(split.test_indices.begin(), split.test_indices.end());
  std::sort(split.surrogate_indices.begin(), split.surrogate_indices.end());
  split.validate();
  return split;
}

}  // namespace unlearn
