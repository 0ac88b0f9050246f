#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "unlearn/model.hpp"

namespace unlearn {

/// Features in native units with the box [lo, hi] every feature lies in.
struct RawDataset {
  Matrix features;
  Labels labels;
  double lo = 0.0;
  double hi = 1.0;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  /// Throws std::invalid_argument on a length mismatch or out-of-box feature.
  void validate() const;
};

/// Reads a pair of big-endian IDX files (u8 images of rank 3, u8 labels of
/// rank 1). Pixels are divided by 255. Throws FormatError on bad input.
RawDataset load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path);

/// Reads a numeric matrix with one sample per line. A delimiter of ' '
/// accepts any run of whitespace. Labels come one integer per line. Features
/// must lie in [lo, hi]. Throws FormatError on bad input.
RawDataset load_delimited(const std::filesystem::path& features_path, const std::filesystem::path& labels_path,
                          char delimiter = ' ', double lo = -1.0, double hi = 1.0);

/// Class-conditional Gaussians. Class k has mean separation * e_k and
/// isotropic standard deviation `noise`; samples are clipped to [0, 1].
/// Labels are class ids 0..n_classes-1 (drawn uniformly). Requires n_classes <= d.
RawDataset synth_gaussian(Index n, Index d, int n_classes, double separation, std::uint64_t seed,
                          double noise = 0.5);

/// Keeps classes `class_a` (relabelled +1) and `class_b` (relabelled -1).
RawDataset binarize(const RawDataset& raw, int class_a, int class_b);

/// Divides every feature by B sqrt(d), B = max(|lo|, |hi|), so every point of
/// the box [lo, hi]^d has l2 norm at most 1.
Dataset normalize(const RawDataset& raw);

/// The constant normalize() divides by.
double normalization_scale(double lo, double hi, Index d);

struct SplitSpec {
  std::vector<Index> train_indices;
  std::vector<Index> test_indices;
  std::vector<Index> poison_indices;     // subset of train_indices
  std::vector<Index> surrogate_indices;  // disjoint from train_indices

  /// Throws std::logic_error if the roles overlap where they must not.
  void validate() const;
};

/// Seeded split of n rows: a test share, an optional surrogate share kept
/// away from the defender, and m_poison rows drawn from the training share.
SplitSpec make_split(Index n, double test_fraction, Index m_poison, bool grey_box, double surrogate_fraction,
                     std::uint64_t seed);

}  // namespace unlearn
