#include "tomoprior/subsets.hpp"

#include <string>

#include "tomoprior/error.hpp"

namespace tomoprior {

SubsetPartition partition_subsets(std::size_t num_views, std::size_t num_subsets) {
  if (num_subsets < 1 || num_subsets > num_views)
    throw InvalidInput("partition_subsets: need 1 <= subsets <= views, got " +
                       std::to_string(num_subsets) + " subsets for " +
                       std::to_string(num_views) + " views");
  SubsetPartition p;
  p.num_views = num_views;
  p.subsets.resize(num_subsets);
  for (std::size_t w = 0; w < num_subsets; ++w)
    for (std::size_t v = w; v < num_views; v += num_subsets) p.subsets[w].push_back(v);
  return p;
}

}  // namespace tomoprior
