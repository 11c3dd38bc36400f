#include "gvse/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gvse/error.hpp"
#include "gvse/io.hpp"

namespace gvse {

void validate_split(const SplitSpec& split, std::size_t num_classes) {
  std::vector<int> owner(num_classes, 0);
  std::vector<std::size_t> overlap, out_of_range;
  for (const auto* list : {&split.seen, &split.unseen}) {
    for (auto c : *list) {
      if (c >= num_classes) {
        out_of_range.push_back(c);
        continue;
      }
      if (++owner[c] > 1) overlap.push_back(c);
    }
  }
  if (!out_of_range.empty()) throw SplitError(fmt::format("split names unknown classes {}", fmt::join(out_of_range, ", ")));
  if (!overlap.empty()) throw SplitError(fmt::format("classes {} are both seen and unseen", fmt::join(overlap, ", ")));
  std::vector<std::size_t> gaps;
  for (std::size_t c = 0; c < num_classes; ++c)
    if (owner[c] == 0) gaps.push_back(c);
  if (!gaps.empty()) throw SplitError(fmt::format("classes {} are neither seen nor unseen", fmt::join(gaps, ", ")));
  if (split.seen.empty() || split.unseen.empty()) throw SplitError("split needs at least one seen and one unseen class");
}

Tensor Dataset::image(std::size_t i) const {
  const auto c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const auto stride = c * h * w;
  const auto begin = images.values().begin() + static_cast<std::ptrdiff_t>(i * stride);
  return Tensor({c, h, w}, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(stride)));
}

void Dataset::validate() const {
  if (images.rank() != 4) throw ValidationError("images must be N x C x H x W, got " + to_string(images.shape()));
  if (images.dim(0) != labels.size()) {
    throw ValidationError(fmt::format("{} images but {} labels", images.dim(0), labels.size()));
  }
  if (images.dim(2) != images.dim(3)) throw ValidationError("images must be square");
  cam.validate();
  const auto classes = cam.num_categories();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      throw ValidationError(fmt::format("record {}: label {} >= number of classes {}", i, labels[i], classes));
    }
  }
  validate_split(split, classes);
  std::vector<std::size_t> counts(classes, 0);
  for (auto l : labels) ++counts[l];
  for (auto c : split.seen) {
    if (counts[c] < 2) throw ValidationError(fmt::format("seen class {} has {} samples, needs >= 2", c, counts[c]));
  }
}

void SyntheticSpec::validate() const {
  if (classes < 2 || seen < 1 || seen >= classes) {
    throw ConfigError(fmt::format("synthetic split {} seen of {} classes is invalid", seen, classes));
  }
  if (attributes < 2) throw ConfigError("synthetic data needs >= 2 attributes");
  if (image_size < 2 || attributes > image_size * image_size / 4) {
    throw ConfigError(fmt::format("{} attributes do not fit distinct patches in a {}x{} image", attributes, image_size,
                                  image_size));
  }
  if (samples_per_class < 2) throw ConfigError("synthetic data needs >= 2 samples per class");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("noise sigma must be >= 0");
  if (structure == AttributeStructure::OneHot && attributes != classes) {
    throw ConfigError("one-hot structure needs as many attributes as classes");
  }
  if (structure == AttributeStructure::Block && (group_size == 0 || group_size > attributes)) {
    throw ConfigError("group size must lie in [1, attributes]");
  }
}

AttributeStructure parse_structure(std::string_view name) {
  if (name == "block") return AttributeStructure::Block;
  if (name == "one-hot") return AttributeStructure::OneHot;
  throw ConfigError(fmt::format("unknown attribute structure '{}'", name));
}

std::string_view to_string(AttributeStructure s) { return s == AttributeStructure::Block ? "block" : "one-hot"; }

namespace {

// Block layout: classes draw 1-2 attribute groups plus 0-2 loose attributes,
// all layouts distinct, every attribute present in some seen class.
Membership sample_block_layout(const SyntheticSpec& spec, std::mt19937_64& rng) {
  const auto m = spec.attributes;
  const auto groups = std::max<std::size_t>(1, m / spec.group_size);
  auto group_of = [&](std::size_t j) { return std::min(j / spec.group_size, groups - 1); };

  for (int attempt = 0; attempt < 10000; ++attempt) {
    Membership layout = Membership::Zero(spec.classes, m);
    std::set<std::vector<std::uint8_t>> seen_layouts;
    bool ok = true;
    for (std::size_t y = 0; y < spec.classes && ok; ++y) {
      std::vector<std::size_t> order(groups);
      for (std::size_t g = 0; g < groups; ++g) order[g] = g;
      std::shuffle(order.begin(), order.end(), rng);
      const std::size_t take = std::min<std::size_t>(groups, 1 + rng() % 2);
      std::vector<bool> chosen(groups, false);
      for (std::size_t k = 0; k < take; ++k) chosen[order[k]] = true;
      for (std::size_t j = 0; j < m; ++j)
        if (chosen[group_of(j)]) layout(y, j) = 1;
      const std::size_t loose = rng() % 3;
      for (std::size_t k = 0; k < loose; ++k) {
        const std::size_t j = rng() % m;
        if (!chosen[group_of(j)]) layout(y, j) = 1;
      }
      std::vector<std::uint8_t> key;
      for (std::size_t j = 0; j < m; ++j) key.push_back(layout(y, j));
      ok = seen_layouts.insert(key).second;
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < m && ok; ++j) {
      bool present = false;
      for (std::size_t y = 0; y < spec.seen; ++y) present = present || layout(y, j);
      ok = present;
    }
    if (ok) return layout;
  }
  throw ConfigError("could not sample a valid block attribute layout; use more classes or fewer attributes");
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 pattern_rng(spec.pattern_seed);
  const auto m = spec.attributes;
  const auto side = spec.image_size;

  Membership layout;
  if (spec.structure == AttributeStructure::OneHot) {
    layout = Membership::Identity(spec.classes, m);
  } else {
    layout = sample_block_layout(spec, pattern_rng);
  }

  Dataset ds;
  ds.cam.values = Eigen::MatrixXd::Zero(spec.classes, m);
  std::uniform_real_distribution<double> strength(0.5, 1.0);
  for (std::size_t y = 0; y < spec.classes; ++y) {
    ds.cam.category_names.push_back(fmt::format("class{:02}", y));
    for (std::size_t j = 0; j < m; ++j)
      if (layout(y, j)) ds.cam.values(y, j) = spec.structure == AttributeStructure::OneHot ? 1.0 : strength(pattern_rng);
  }
  for (std::size_t j = 0; j < m; ++j) ds.cam.attribute_names.push_back(fmt::format("att{:02}", j));

  // Patch grid: g x g cells of side `cell`, one cell per attribute.
  const auto grid = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))));
  const auto cell = side / grid;
  std::uniform_real_distribution<double> colour(-1.0, 1.0);
  std::vector<std::array<double, 3>> colours(m);
  for (auto& c : colours) {
    double norm = 0.0;
    for (auto& v : c) {
      v = colour(pattern_rng);
      norm += v * v;
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (auto& v : c) v /= norm;
  }

  const std::size_t channels = 3;
  const std::size_t plane = side * side;
  // Clean class images first, then noisy samples.
  std::vector<std::vector<double>> clean(spec.classes, std::vector<double>(channels * plane, 0.0));
  for (std::size_t y = 0; y < spec.classes; ++y)
    for (std::size_t j = 0; j < m; ++j) {
      if (!layout(y, j)) continue;
      const auto r0 = (j / grid) * cell, c0 = (j % grid) * cell;
      for (std::size_t ch = 0; ch < channels; ++ch)
        for (std::size_t r = r0; r < r0 + cell; ++r)
          for (std::size_t c = c0; c < c0 + cell; ++c)
            clean[y][ch * plane + r * side + c] += ds.cam.values(y, j) * colours[j][ch];
    }

  std::mt19937_64 noise_rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto n = spec.classes * spec.samples_per_class;
  std::vector<double> pixels;
  pixels.reserve(n * channels * plane);
  for (std::size_t y = 0; y < spec.classes; ++y)
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      for (double v : clean[y]) pixels.push_back(spec.sigma > 0.0 ? v + spec.sigma * noise(noise_rng) : v);
      ds.labels.push_back(static_cast<std::uint32_t>(y));
    }
  ds.images = Tensor({n, channels, side, side}, std::move(pixels));
  for (std::size_t y = 0; y < spec.classes; ++y) (y < spec.seen ? ds.split.seen : ds.split.unseen).push_back(y);
  ds.validate();
  return ds;
}

std::vector<std::uint8_t> encode_images(const Tensor& images) {
  if (images.rank() != 4) throw DimensionError("image tensor must be rank 4");
  ByteWriter w;
  w.raw("GVSE");
  w.u32(1);
  for (std::size_t d = 0; d < 4; ++d) w.u32(static_cast<std::uint32_t>(images.dim(d)));
  for (double v : images.values()) w.f64(v);
  return std::move(w.bytes());
}

Tensor decode_images(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "image tensor file");
  if (r.raw(4) != "GVSE") throw ParseError("image tensor file: bad magic");
  if (const auto version = r.u32(); version != 1) {
    throw ParseError(fmt::format("image tensor file: unsupported version {}", version));
  }
  Shape shape;
  for (int d = 0; d < 4; ++d) shape.push_back(r.u32());
  const auto count = element_count(shape);
  if (r.remaining() != count * 8) {
    throw ParseError(fmt::format("image tensor file: header {} needs {} payload bytes, found {}", to_string(shape),
                                 count * 8, r.remaining()));
  }
  std::vector<double> data(count);
  for (auto& v : data) v = r.f64();
  return Tensor(std::move(shape), std::move(data));
}

std::vector<std::uint8_t> encode_labels(const std::vector<std::uint32_t>& labels) {
  ByteWriter w;
  for (auto l : labels) w.u32(l);
  return std::move(w.bytes());
}

std::vector<std::uint32_t> decode_labels(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0) throw ParseError("labels file size is not a multiple of 4");
  ByteReader r(bytes, "labels file");
  std::vector<std::uint32_t> out(bytes.size() / 4);
  for (auto& l : out) l = r.u32();
  return out;
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset ds;
  ds.images = decode_images(read_binary_file(paths.images));
  ds.labels = decode_labels(read_binary_file(paths.labels));
  ds.cam = read_attributes_csv(paths.attributes);
  try {
    const auto j = nlohmann::json::parse(read_text_file(paths.split));
    ds.split.seen = j.at("seen").get<std::vector<std::size_t>>();
    ds.split.unseen = j.at("unseen").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("split file {}: {}", paths.split.string(), e.what()));
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const DatasetPaths& paths) {
  write_binary_file(paths.images, encode_images(dataset.images));
  write_binary_file(paths.labels, encode_labels(dataset.labels));
  write_attributes_csv(dataset.cam, paths.attributes);
  const nlohmann::json split = {{"seen", dataset.split.seen}, {"unseen", dataset.split.unseen}};
  write_text_file(paths.split, split.dump(2) + "\n");
}

SamplePartition partition_samples(const Dataset& dataset, double seen_holdout, std::uint64_t seed) {
  if (!(seen_holdout >= 0.0 && seen_holdout < 1.0)) throw ConfigError("seen holdout must lie in [0, 1)");
  const auto classes = dataset.cam.num_categories();
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  SamplePartition out;
  for (auto c : dataset.split.seen) {
    auto idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    auto held = static_cast<std::size_t>(std::floor(seen_holdout * static_cast<double>(idx.size())));
    held = std::min(held, idx.size() - std::min<std::size_t>(idx.size(), 2));
    out.test_seen.insert(out.test_seen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(held));
    out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(held), idx.end());
  }
  for (auto c : dataset.split.unseen) out.test_unseen.insert(out.test_unseen.end(), by_class[c].begin(), by_class[c].end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test_seen.begin(), out.test_seen.end());
  std::sort(out.test_unseen.begin(), out.test_unseen.end());
  return out;
}

}  // namespace gvse
