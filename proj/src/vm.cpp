#include "qvm/vm.hpp"

namespace qvm {

std::vector<uint32_t> frpr_gather(const PermSpec& p) {
  const size_t n = p.dims.size();
  const uint64_t total = static_cast<uint64_t>(p.in_rows) * p.in_cols;
  if (n == 0) return std::vector<uint32_t>(total, 0);
  std::vector<uint64_t> in_stride(n, 1);
  for (size_t i = n - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * p.dims[i + 1];
  std::vector<uint32_t> g(total);
  std::vector<uint32_t> idx(n, 0);
  for (uint64_t of = 0; of < total; ++of) {
    uint64_t inf = 0;
    for (size_t j = 0; j < n; ++j) inf += idx[j] * in_stride[p.perm[j]];
    g[of] = static_cast<uint32_t>(inf);
    for (size_t j = n; j-- > 0;) {
      if (++idx[j] < p.dims[p.perm[j]]) break;
      idx[j] = 0;
    }
  }
  return g;
}

}  // namespace qvm
