#pragma once

#include <fmt/format.h>

#include "gvse/error.hpp"

namespace gvse {

template <typename Derived>
std::vector<ClassTarget> class_targets(const WordEmbeddingTable& table, const Eigen::MatrixBase<Derived>& membership) {
  if (static_cast<std::size_t>(membership.size()) != table.size()) {
    throw DimensionError(fmt::format("membership of length {} for a table of {} attributes", membership.size(),
                                     table.size()));
  }
  std::vector<ClassTarget> out;
  for (Eigen::Index v = 0; v < membership.size(); ++v) {
    if (membership(v) != 0) out.push_back({static_cast<std::size_t>(v), table.vectors.row(v).transpose()});
  }
  if (out.empty()) throw DegenerateError("class has no member attributes");
  return out;
}

}  // namespace gvse
