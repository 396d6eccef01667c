#include "support/oracles.hpp"

#include <algorithm>
#include <stdexcept>

#include "qgl/prelude.hpp"
#include "qvm/vm.hpp"

namespace support {

double max_diff(const qgl::CMat& a, const qgl::CMat& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_diff(const qgl::CMat& a, const std::complex<double>* b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double unitarity_error(const qgl::CMat& u, uint32_t dim) {
  double worst = 0;
  for (uint32_t r = 0; r < dim; ++r) {
    for (uint32_t c = 0; c < dim; ++c) {
      std::complex<double> s = 0;
      for (uint32_t k = 0; k < dim; ++k)
        s += u[r * dim + k] * std::conj(u[c * dim + k]);
      if (r == c) s -= 1.0;
      worst = std::max(worst, std::abs(s));
    }
  }
  return worst;
}

std::vector<double> rand_params(std::mt19937_64& rng, uint32_t n) {
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  std::vector<double> p(n);
  for (double& v : p) v = d(rng);
  return p;
}

qgl::CMat frpr_oracle(const qvm::PermSpec& p, const qgl::CMat& in) {
  const size_t n = p.dims.size();
  std::vector<uint64_t> ostride(n, 1);
  for (size_t i = n - 1; i-- > 0;) ostride[i] = ostride[i + 1] * p.dims[p.perm[i + 1]];
  qgl::CMat out(in.size());
  std::vector<uint32_t> idx(n, 0);
  for (size_t f = 0; f < in.size(); ++f) {
    uint64_t of = 0;
    for (size_t j = 0; j < n; ++j) of += static_cast<uint64_t>(idx[p.perm[j]]) * ostride[j];
    out[of] = in[f];
    for (size_t j = n; j-- > 0;) {
      if (++idx[j] < p.dims[j]) break;
      idx[j] = 0;
    }
  }
  return out;
}

qcir::Circuit random_circuit(std::mt19937_64& rng, std::vector<double>& params,
                             int max_qudits) {
  using qcir::Circuit;
  using qcir::ParamBinding;
  const qgl::GateLibrary& lib = qgl::prelude();
  int n = std::uniform_int_distribution<int>(1, max_qudits)(rng);
  std::vector<uint32_t> radices;
  std::vector<uint32_t> q2, q3;
  for (int i = 0; i < n; ++i) {
    uint32_t r = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 3 : 2;
    radices.push_back(r);
    (r == 2 ? q2 : q3).push_back(static_cast<uint32_t>(i));
  }
  Circuit c(radices);
  uint32_t nparams = std::uniform_int_distribution<uint32_t>(1, 6)(rng);
  c.reserve_params(nparams);
  int ngates = std::uniform_int_distribution<int>(1, 40)(rng);

  auto binding = [&]() {
    if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.4)
      return ParamBinding::constant(std::uniform_real_distribution<double>(-3, 3)(rng));
    return ParamBinding::param(std::uniform_int_distribution<uint32_t>(0, nparams - 1)(rng));
  };
  auto pick = [&](std::vector<uint32_t> pool, size_t k) {
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(k);
    return pool;
  };

  static const std::vector<std::pair<std::string, int>> one_q2 = {
      {"H", 0}, {"X", 0}, {"T", 0}, {"RX", 1}, {"RZ", 1}, {"U2", 2}, {"U3", 3}};
  static const std::vector<std::pair<std::string, int>> two_q2 = {
      {"CNOT", 0}, {"CZ", 0}, {"SWAP", 0}, {"CP", 1}, {"RZZ", 1}};

  for (int g = 0; g < ngates; ++g) {
    std::vector<int> options;
    if (!q2.empty()) options.push_back(0);
    if (!q3.empty()) options.push_back(1);
    if (q2.size() >= 2) options.push_back(2);
    if (q3.size() >= 2) options.push_back(3);
    if (q2.size() >= 3) options.push_back(4);
    int o = options[std::uniform_int_distribution<size_t>(0, options.size() - 1)(rng)];
    switch (o) {
      case 0: {
        auto [name, np] = one_q2[std::uniform_int_distribution<size_t>(0, one_q2.size() - 1)(rng)];
        std::vector<ParamBinding> ps;
        for (int i = 0; i < np; ++i) ps.push_back(binding());
        c.append_gate(lib.get(name), pick(q2, 1), ps);
        break;
      }
      case 1: {
        c.append_gate(lib.get("Phase3"), pick(q3, 1), {binding(), binding()});
        break;
      }
      case 2: {
        auto [name, np] = two_q2[std::uniform_int_distribution<size_t>(0, two_q2.size() - 1)(rng)];
        std::vector<ParamBinding> ps;
        for (int i = 0; i < np; ++i) ps.push_back(binding());
        c.append_gate(lib.get(name), pick(q2, 2), ps);
        break;
      }
      case 3: {
        c.append_gate(lib.get("CSUM"), pick(q3, 2), {});
        break;
      }
      case 4: {
        c.append_gate(lib.get("CCX"), pick(q2, 3), {});
        break;
      }
    }
  }
  params = rand_params(rng, c.n_params());
  return c;
}

std::vector<qgl::CMat> fd_gradients(const qvm::Bytecode& bc,
                                    const qgl::ExpressionModule& mod,
                                    const std::vector<double>& params, double h) {
  qvm::VM<double> vm(bc, mod);
  const size_t sz = static_cast<size_t>(vm.dim()) * vm.dim();
  std::vector<qgl::CMat> grads;
  for (size_t p = 0; p < params.size(); ++p) {
    std::vector<double> up = params, dn = params;
    up[p] += h;
    dn[p] -= h;
    if (!vm.run_unitary(up.data())) throw std::runtime_error("non-finite result");
    qgl::CMat hi(vm.unitary(), vm.unitary() + sz);
    if (!vm.run_unitary(dn.data())) throw std::runtime_error("non-finite result");
    qgl::CMat g(sz);
    for (size_t i = 0; i < sz; ++i) g[i] = (hi[i] - vm.unitary()[i]) / (2 * h);
    grads.push_back(std::move(g));
  }
  return grads;
}

std::vector<qgl::CMat> fd_gradients_sym(const qgl::UnitaryExprMatrix& u,
                                        const std::vector<double>& params, double h) {
  std::vector<qgl::CMat> grads;
  for (size_t p = 0; p < params.size(); ++p) {
    std::vector<double> up = params, dn = params;
    up[p] += h;
    dn[p] -= h;
    qgl::CMat hi = qgl::eval_numeric(u, up);
    qgl::CMat lo = qgl::eval_numeric(u, dn);
    qgl::CMat g(hi.size());
    for (size_t i = 0; i < g.size(); ++i) g[i] = (hi[i] - lo[i]) / (2 * h);
    grads.push_back(std::move(g));
  }
  return grads;
}

double optimal_contraction_flops(const std::vector<std::vector<uint32_t>>& spans,
                                 const std::vector<uint32_t>& radices) {
  const size_t k = spans.size();
  if (k == 0 || k > 20) throw std::invalid_argument("tensor count out of range");

  std::vector<uint32_t> tmask(k, 0);
  for (size_t t = 0; t < k; ++t)
    for (uint32_t q : spans[t]) tmask[t] |= 1u << q;

  auto dimprod = [&](uint32_t qmask) {
    double d = 1;
    for (size_t q = 0; q < radices.size(); ++q)
      if (qmask & (1u << q)) d *= radices[q];
    return d;
  };

  const uint32_t full = (k == 32) ? ~0u : (1u << k) - 1;
  std::vector<uint32_t> qmask(full + 1, 0);
  std::vector<double> best(full + 1, 0);
  for (uint32_t s = 1; s <= full; ++s) {
    uint32_t low = s & (~s + 1);
    size_t lowi = static_cast<size_t>(__builtin_ctz(s));
    qmask[s] = tmask[lowi] | qmask[s ^ low];
    if ((s & (s - 1)) == 0) continue;  // singleton: leaf, zero cost

    double bestc = std::numeric_limits<double>::infinity();
    // Enumerate bipartitions; pin the lowest tensor to one side so each
    // split is visited once.
    for (uint32_t a = (s - 1) & s; a; a = (a - 1) & s) {
      if (!(a & low)) continue;
      uint32_t b = s ^ a;
      double da = dimprod(qmask[a]), db = dimprod(qmask[b]);
      double m = dimprod(qmask[a] & qmask[b]);
      double step = (m == 1.0) ? da * da * db * db : 2.0 * da * da * db * db / m;
      double c = best[a] + best[b] + step;
      bestc = std::min(bestc, c);
    }
    best[s] = bestc;
  }
  return best[full];
}

}  // namespace support
