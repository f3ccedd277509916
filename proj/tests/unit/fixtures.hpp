#pragma once

#include <initializer_list>
#include <vector>

#include "gluefl/data.hpp"

namespace fixtures {

inline gluefl::Dataset make_dataset(std::size_t dim, std::size_t classes,
                                    std::initializer_list<std::pair<std::vector<double>, int>> rows) {
  gluefl::Dataset d;
  d.dim = dim;
  d.classes = classes;
  for (const auto& [x, y] : rows) d.push_back(x, y);
  return d;
}

inline std::vector<std::size_t> all_rows(const gluefl::Dataset& d) {
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace fixtures
