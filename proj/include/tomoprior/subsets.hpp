#pragma once

#include <cstddef>
#include <vector>

namespace tomoprior {

/// Interleaved view subsets: subset w holds views w, w + N, w + 2N, ...
struct SubsetPartition {
  std::size_t num_views = 0;
  std::vector<std::vector<std::size_t>> subsets;

  std::size_t num_subsets() const { return subsets.size(); }
};

/// Throws InvalidInput unless 1 <= num_subsets <= num_views.
SubsetPartition partition_subsets(std::size_t num_views, std::size_t num_subsets);

}  // namespace tomoprior
