#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "gvse/graph.hpp"
#include "gvse/tensor.hpp"

namespace gvse {

/// Seen/unseen class partition. Must be disjoint and cover every class.
struct SplitSpec {
  std::vector<std::size_t> seen;
  std::vector<std::size_t> unseen;
};

void validate_split(const SplitSpec& split, std::size_t num_classes);

struct Dataset {
  Tensor images;  // N x C x H x W
  std::vector<std::uint32_t> labels;
  CategoryAttributeMatrix cam;
  SplitSpec split;

  std::size_t size() const { return labels.size(); }
  std::size_t channels() const { return images.dim(1); }
  std::size_t image_size() const { return images.dim(2); }
  Tensor image(std::size_t i) const;  // C x H x W copy

  void validate() const;
};

enum class AttributeStructure { Block, OneHot };

struct SyntheticSpec {
  std::size_t classes = 12;
  std::size_t seen = 8;
  std::size_t attributes = 20;
  std::size_t image_size = 32;
  std::size_t samples_per_class = 40;
  double sigma = 0.1;
  std::uint64_t pattern_seed = 0;
  std::size_t group_size = 5;
  AttributeStructure structure = AttributeStructure::Block;

  void validate() const;
};

AttributeStructure parse_structure(std::string_view name);
std::string_view to_string(AttributeStructure s);

/// Attribute j owns a fixed patch and base colour; an image of class y sums the
/// patches of its member attributes scaled by phi(y)_j, plus N(0, sigma^2) noise.
/// Class layouts and patterns depend only on pattern_seed; noise on `seed`.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

struct DatasetPaths {
  std::filesystem::path images;
  std::filesystem::path labels;
  std::filesystem::path attributes;
  std::filesystem::path split;
};

Dataset load_dataset(const DatasetPaths& paths);
void save_dataset(const Dataset& dataset, const DatasetPaths& paths);

// Raw formats: "GVSE", version u32, N, C, H, W u32, then f64 pixels (all LE);
// labels are a bare u32 LE array.
std::vector<std::uint8_t> encode_images(const Tensor& images);
Tensor decode_images(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_labels(const std::vector<std::uint32_t>& labels);
std::vector<std::uint32_t> decode_labels(const std::vector<std::uint8_t>& bytes);

/// Sample indices used for training and for the seen/unseen test sets. A
/// fraction of each seen class is held out for generalized evaluation.
struct SamplePartition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test_seen;
  std::vector<std::size_t> test_unseen;
};

SamplePartition partition_samples(const Dataset& dataset, double seen_holdout, std::uint64_t seed);

}  // namespace gvse
