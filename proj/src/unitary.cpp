#include "qgl/unitary.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace qgl {

size_t UnitaryExprMatrix::param_index(SymId s) const {
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i] == s) return i;
  throw std::runtime_error(
      fmt::format("unknown parameter '{}'", sym_name(s)));
}

uint32_t radix_product(const std::vector<uint32_t>& radices) {
  uint64_t d = 1;
  for (uint32_t r : radices) {
    d *= r;
    if (d > (1u << 26))
      throw std::runtime_error("matrix dimension too large");
  }
  return static_cast<uint32_t>(d);
}

UnitaryExprMatrix identity_sym(const std::vector<uint32_t>& radices) {
  UnitaryExprMatrix m;
  m.radices = radices;
  m.dim = radix_product(radices);
  m.elems.assign(size_t(m.dim) * m.dim, cx_zero());
  for (uint32_t r = 0; r < m.dim; ++r) m.at(r, r) = cx_one();
  return m;
}

static void append_unseen(std::vector<SymId>& dst,
                          const std::vector<SymId>& src) {
  for (SymId s : src)
    if (std::find(dst.begin(), dst.end(), s) == dst.end()) dst.push_back(s);
}

UnitaryExprMatrix matmul_sym(const UnitaryExprMatrix& a,
                             const UnitaryExprMatrix& b) {
  if (a.dim != b.dim)
    throw std::runtime_error(
        fmt::format("matmul dimension mismatch: {} vs {}", a.dim, b.dim));
  UnitaryExprMatrix m;
  m.radices = a.radices;
  m.dim = a.dim;
  m.elems.assign(size_t(m.dim) * m.dim, cx_zero());
  for (uint32_t r = 0; r < m.dim; ++r) {
    for (uint32_t c = 0; c < m.dim; ++c) {
      CExpr acc = cx_mul(a.at(r, 0), b.at(0, c));
      for (uint32_t k = 1; k < m.dim; ++k)
        acc = cx_add(acc, cx_mul(a.at(r, k), b.at(k, c)));
      m.at(r, c) = acc;
    }
  }
  m.params = a.params;
  append_unseen(m.params, b.params);
  return m;
}

UnitaryExprMatrix kron_sym(const UnitaryExprMatrix& a,
                           const UnitaryExprMatrix& b) {
  UnitaryExprMatrix m;
  m.radices = a.radices;
  m.radices.insert(m.radices.end(), b.radices.begin(), b.radices.end());
  m.dim = a.dim * b.dim;
  m.elems.assign(size_t(m.dim) * m.dim, cx_zero());
  for (uint32_t ra = 0; ra < a.dim; ++ra)
    for (uint32_t ca = 0; ca < a.dim; ++ca)
      for (uint32_t rb = 0; rb < b.dim; ++rb)
        for (uint32_t cb = 0; cb < b.dim; ++cb)
          m.at(ra * b.dim + rb, ca * b.dim + cb) =
              cx_mul(a.at(ra, ca), b.at(rb, cb));
  m.params = a.params;
  append_unseen(m.params, b.params);
  return m;
}

UnitaryExprMatrix dagger(const UnitaryExprMatrix& a) {
  UnitaryExprMatrix m;
  m.radices = a.radices;
  m.dim = a.dim;
  m.params = a.params;
  m.elems.assign(size_t(m.dim) * m.dim, cx_zero());
  for (uint32_t r = 0; r < m.dim; ++r)
    for (uint32_t c = 0; c < m.dim; ++c) m.at(r, c) = cx_conj(a.at(c, r));
  return m;
}

UnitaryExprMatrix substitute(const UnitaryExprMatrix& a, const SubstMap& map) {
  UnitaryExprMatrix m;
  m.radices = a.radices;
  m.dim = a.dim;
  m.elems.reserve(a.elems.size());
  for (const CExpr& e : a.elems) m.elems.push_back(cx_subst(e, map));
  for (SymId p : a.params) {
    auto it = map.find(p);
    if (it == map.end()) {
      append_unseen(m.params, {p});
    } else {
      std::vector<SymId> vs;
      free_vars(it->second, vs);
      append_unseen(m.params, vs);
    }
  }
  return m;
}

UnitaryExprMatrix rename_params_positional(const UnitaryExprMatrix& a,
                                           const std::string& stem,
                                           uint32_t offset) {
  SubstMap map;
  for (size_t i = 0; i < a.params.size(); ++i)
    map[a.params[i]] = ex_var(fmt::format("{}{}", stem, offset + i));
  return substitute(a, map);
}

UnitaryExprMatrix embed(const UnitaryExprMatrix& a,
                        const std::vector<uint32_t>& target_radices,
                        const std::vector<uint32_t>& positions) {
  const size_t n = target_radices.size();
  if (positions.size() != a.radices.size())
    throw std::runtime_error("embed: position count does not match operand");
  std::vector<bool> used(n, false);
  for (size_t i = 0; i < positions.size(); ++i) {
    uint32_t p = positions[i];
    if (p >= n || used[p])
      throw std::runtime_error("embed: invalid or repeated position");
    if (target_radices[p] != a.radices[i])
      throw std::runtime_error(fmt::format(
          "embed: radix mismatch at position {} ({} vs {})", p,
          target_radices[p], a.radices[i]));
    used[p] = true;
  }

  std::vector<uint32_t> rest_radices;
  std::vector<uint32_t> order = positions;  // big-matrix qudit -> target qudit
  for (uint32_t q = 0; q < n; ++q)
    if (!used[q]) {
      order.push_back(q);
      rest_radices.push_back(target_radices[q]);
    }
  UnitaryExprMatrix big = rest_radices.empty()
                              ? a
                              : kron_sym(a, identity_sym(rest_radices));

  const uint32_t dim = radix_product(target_radices);
  std::vector<uint32_t> remap(dim);  // target index -> big index
  std::vector<uint32_t> digits(n);
  for (uint32_t idx = 0; idx < dim; ++idx) {
    uint32_t rem = idx;
    for (size_t j = n; j-- > 0;) {
      digits[j] = rem % target_radices[j];
      rem /= target_radices[j];
    }
    uint32_t big_idx = 0;
    for (size_t k = 0; k < n; ++k)
      big_idx = big_idx * target_radices[order[k]] + digits[order[k]];
    remap[idx] = big_idx;
  }

  UnitaryExprMatrix m;
  m.radices = target_radices;
  m.dim = dim;
  m.params = big.params;
  m.elems.assign(size_t(dim) * dim, cx_zero());
  for (uint32_t r = 0; r < dim; ++r)
    for (uint32_t c = 0; c < dim; ++c)
      m.at(r, c) = big.at(remap[r], remap[c]);
  return m;
}

std::vector<UnitaryExprMatrix> differentiate(const UnitaryExprMatrix& a) {
  std::vector<UnitaryExprMatrix> grads;
  grads.reserve(a.params.size());
  for (SymId p : a.params) {
    UnitaryExprMatrix g;
    g.radices = a.radices;
    g.dim = a.dim;
    g.params = a.params;
    g.elems.reserve(a.elems.size());
    for (const CExpr& e : a.elems)
      g.elems.push_back({differentiate(e.re, p), differentiate(e.im, p)});
    grads.push_back(std::move(g));
  }
  return grads;
}

CMat eval_numeric(const UnitaryExprMatrix& a,
                  const std::vector<double>& param_values) {
  if (param_values.size() != a.params.size())
    throw std::runtime_error(
        fmt::format("expected {} parameter values, got {}", a.params.size(),
                    param_values.size()));
  VarMap env;
  for (size_t i = 0; i < a.params.size(); ++i)
    env[a.params[i]] = param_values[i];
  CMat out(a.elems.size());
  for (uint32_t r = 0; r < a.dim; ++r) {
    for (uint32_t c = 0; c < a.dim; ++c) {
      try {
        out[size_t(r) * a.dim + c] = {eval_scalar(a.at(r, c).re, env),
                                      eval_scalar(a.at(r, c).im, env)};
      } catch (const EvalError& e) {
        throw EvalError(
            fmt::format("element ({}, {}): {}", r, c, e.what()));
      }
    }
  }
  return out;
}

std::string matrix_str(const UnitaryExprMatrix& a) {
  std::string s = "[\n";
  for (uint32_t r = 0; r < a.dim; ++r) {
    s += "  [";
    for (uint32_t c = 0; c < a.dim; ++c) {
      if (c) s += ", ";
      s += cx_str(a.at(r, c));
    }
    s += "],\n";
  }
  s += "]";
  return s;
}

std::string canonical_key(const UnitaryExprMatrix& a) {
  UnitaryExprMatrix c = rename_params_positional(a, "$p");
  std::string key;
  for (uint32_t r : c.radices) key += fmt::format("{},", r);
  key += fmt::format("|{};", c.params.size());
  for (const CExpr& e : c.elems) key += fmt::format("{},{};", e.re, e.im);
  return key;
}

}  // namespace qgl
