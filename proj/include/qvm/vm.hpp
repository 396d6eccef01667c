#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "qgl/kernel.hpp"
#include "qvm/bytecode.hpp"

namespace qvm {

// Element map of a relayout: out[i] = in[gather[i]].
std::vector<uint32_t> frpr_gather(const PermSpec& p);

template <typename T>
void frpr_exec(const PermSpec& p, const std::complex<T>* in, std::complex<T>* out) {
  std::vector<uint32_t> g = frpr_gather(p);
  for (size_t i = 0; i < g.size(); ++i) out[i] = in[g[i]];
}

// Executes compiled circuit bytecode. Buffers persist across runs: constant
// instructions run once at construction, kernel targets keep their untouched
// default slots, and everything else is fully overwritten each run, so
// repeated runs with the same parameters produce bit-identical results.
template <typename T>
class VM {
  using C = std::complex<T>;

 public:
  VM(Bytecode bc, qgl::ExpressionModule mod) : bc_(std::move(bc)), mod_(std::move(mod)) {
    dim_ = 1;
    for (uint32_t r : bc_.radices) dim_ *= r;
    validate();
    gathers_.reserve(bc_.perms.size());
    for (const PermSpec& p : bc_.perms) gathers_.push_back(frpr_gather(p));
    bufs_.resize(bc_.buffers.size());
    for (size_t i = 0; i < bc_.buffers.size(); ++i) {
      const BufferInfo& b = bc_.buffers[i];
      bufs_[i].assign(static_cast<size_t>(b.rows) * b.cols, C(0));
      if (b.write_target)
        for (uint32_t j = 0; j < b.rows; ++j) bufs_[i][static_cast<size_t>(j) * b.cols + j] = C(1);
    }
    build_plans();
    static_counts_.assign(bc_.static_code.size(), 0);
    static_ok_ = true;
    for (size_t i = 0; i < bc_.static_code.size(); ++i) {
      static_ok_ = exec_instr(bc_.static_code[i], nullptr) && static_ok_;
      ++static_counts_[i];
    }
  }

  uint32_t dim() const { return dim_; }
  uint32_t n_params() const { return bc_.n_params; }
  const Bytecode& bytecode() const { return bc_; }
  const C* unitary() const { return bufs_[bc_.out_buffer].data(); }
  const std::vector<uint64_t>& static_exec_counts() const { return static_counts_; }

  // Returns false when any result element came out non-finite.
  bool run_unitary(const double* params) {
    bool ok = static_ok_;
    for (const BInstr& in : bc_.dynamic_code) ok = exec_instr(in, params) && ok;
    return finite_out() && ok;
  }

  bool run_unitary_and_grad(const double* params) {
    bool ok = static_ok_;
    for (size_t i = 0; i < bc_.dynamic_code.size(); ++i) {
      const BInstr& in = bc_.dynamic_code[i];
      ok = exec_instr(in, params) && ok;
      ok = exec_grad(i, in) && ok;
    }
    return finite_out() && ok;
  }

  // dU/d(parameter p) after run_unitary_and_grad; zero when p is unused.
  void read_gradient(uint32_t p, C* out) const {
    const size_t sz = bufs_[bc_.out_buffer].size();
    int32_t s = slot_of(out_support_, p);
    if (s < 0) {
      std::fill_n(out, sz, C(0));
      return;
    }
    const C* b = bank_ptr(bc_.out_buffer, static_cast<uint32_t>(s));
    std::copy_n(b, sz, out);
  }

 private:
  struct WTerm {
    uint32_t slot;
    std::vector<uint32_t> formals;
  };
  struct BTerm {
    uint32_t d;
    int32_t a, b;
  };
  struct Plan {
    std::vector<WTerm> wt;
    std::vector<BTerm> bt;
    uint32_t n = 0;  // Frpr: slots carried through one-to-one
  };

  static int32_t slot_of(const std::vector<uint32_t>& sup, uint32_t p) {
    auto it = std::lower_bound(sup.begin(), sup.end(), p);
    if (it == sup.end() || *it != p) return -1;
    return static_cast<int32_t>(it - sup.begin());
  }

  size_t buf_size(uint32_t b) const {
    return static_cast<size_t>(bc_.buffers[b].rows) * bc_.buffers[b].cols;
  }

  C* bank_ptr(uint32_t buf, uint32_t slot) { return banks_[buf].data() + slot * buf_size(buf); }
  const C* bank_ptr(uint32_t buf, uint32_t slot) const {
    return banks_[buf].data() + slot * buf_size(buf);
  }

  void validate() const {
    if (bc_.out_buffer >= bc_.buffers.size()) throw std::invalid_argument("vm: bad out buffer");
    if (bc_.dyn_supports.size() != bc_.dynamic_code.size())
      throw std::invalid_argument("vm: support table size mismatch");
    auto check = [&](const BInstr& in, bool is_static) {
      if (in.dst >= bc_.buffers.size()) throw std::invalid_argument("vm: bad dst buffer");
      const BufferInfo& d = bc_.buffers[in.dst];
      switch (in.op) {
        case BOp::Write: {
          if (in.a >= bc_.writes.size()) throw std::invalid_argument("vm: bad write desc");
          const WriteDesc& w = bc_.writes[in.a];
          if (w.expr >= mod_.entries.size()) throw std::invalid_argument("vm: bad module entry");
          const qgl::CompiledExpr& e = *mod_.entries[w.expr];
          if (w.bindings.size() != e.n_params || e.gradients.size() != e.n_params)
            throw std::invalid_argument("vm: binding count mismatch");
          if (d.rows != e.dim || d.cols != e.dim)
            throw std::invalid_argument("vm: write shape mismatch");
          if (is_static)
            for (const ParamBinding& b : w.bindings)
              if (!b.is_const) throw std::invalid_argument("vm: parameter in constant section");
          break;
        }
        case BOp::Frpr: {
          if (in.a >= bc_.buffers.size() || in.b >= bc_.perms.size())
            throw std::invalid_argument("vm: bad relayout operands");
          const PermSpec& p = bc_.perms[in.b];
          const BufferInfo& s = bc_.buffers[in.a];
          if (static_cast<uint64_t>(s.rows) * s.cols !=
                  static_cast<uint64_t>(p.in_rows) * p.in_cols ||
              d.rows != p.out_rows || d.cols != p.out_cols)
            throw std::invalid_argument("vm: relayout shape mismatch");
          break;
        }
        case BOp::Matmul: {
          if (in.a >= bc_.buffers.size() || in.b >= bc_.buffers.size())
            throw std::invalid_argument("vm: bad matmul operands");
          const BufferInfo& a = bc_.buffers[in.a];
          const BufferInfo& b = bc_.buffers[in.b];
          if (a.cols != b.rows || d.rows != a.rows || d.cols != b.cols)
            throw std::invalid_argument("vm: matmul shape mismatch");
          break;
        }
        case BOp::Kron: {
          if (in.a >= bc_.buffers.size() || in.b >= bc_.buffers.size())
            throw std::invalid_argument("vm: bad kron operands");
          const BufferInfo& a = bc_.buffers[in.a];
          const BufferInfo& b = bc_.buffers[in.b];
          if (d.rows != a.rows * b.rows || d.cols != a.cols * b.cols)
            throw std::invalid_argument("vm: kron shape mismatch");
          break;
        }
      }
    };
    for (const BInstr& in : bc_.static_code) check(in, true);
    for (const BInstr& in : bc_.dynamic_code) check(in, false);
  }

  void build_plans() {
    std::vector<std::vector<uint32_t>> cur(bc_.buffers.size());
    std::vector<uint32_t> slots(bc_.buffers.size(), 0);
    plans_.resize(bc_.dynamic_code.size());
    for (size_t i = 0; i < bc_.dynamic_code.size(); ++i) {
      const BInstr& in = bc_.dynamic_code[i];
      const std::vector<uint32_t>& dsup = bc_.dyn_supports[i];
      Plan& pl = plans_[i];
      switch (in.op) {
        case BOp::Write: {
          const WriteDesc& w = bc_.writes[in.a];
          for (uint32_t s = 0; s < dsup.size(); ++s) {
            WTerm t{s, {}};
            for (uint32_t f = 0; f < w.bindings.size(); ++f)
              if (!w.bindings[f].is_const && w.bindings[f].index == dsup[s])
                t.formals.push_back(f);
            if (t.formals.empty()) throw std::invalid_argument("vm: stray support entry");
            pl.wt.push_back(std::move(t));
          }
          break;
        }
        case BOp::Matmul:
        case BOp::Kron: {
          for (uint32_t s = 0; s < dsup.size(); ++s) {
            BTerm t{s, slot_of(cur[in.a], dsup[s]), slot_of(cur[in.b], dsup[s])};
            if (t.a < 0 && t.b < 0) throw std::invalid_argument("vm: stray support entry");
            pl.bt.push_back(t);
          }
          break;
        }
        case BOp::Frpr: {
          if (cur[in.a] != dsup) throw std::invalid_argument("vm: support mismatch");
          pl.n = static_cast<uint32_t>(dsup.size());
          break;
        }
      }
      cur[in.dst] = dsup;
      slots[in.dst] = std::max(slots[in.dst], static_cast<uint32_t>(dsup.size()));
    }
    out_support_ = cur[bc_.out_buffer];
    banks_.resize(bc_.buffers.size());
    for (size_t b = 0; b < banks_.size(); ++b)
      banks_[b].assign(slots[b] * buf_size(static_cast<uint32_t>(b)), C(0));
  }

  static void matmul_t(const C* a, uint32_t m, uint32_t k, uint32_t n, const C* b, C* dst,
                       bool acc) {
    for (uint32_t i = 0; i < m; ++i) {
      C* drow = dst + static_cast<size_t>(i) * n;
      if (!acc) std::fill_n(drow, n, C(0));
      const C* arow = a + static_cast<size_t>(i) * k;
      for (uint32_t t = 0; t < k; ++t) {
        const C av = arow[t];
        const C* brow = b + static_cast<size_t>(t) * n;
        for (uint32_t j = 0; j < n; ++j) drow[j] += av * brow[j];
      }
    }
  }

  static void kron_t(const C* a, uint32_t ar, uint32_t ac, const C* b, uint32_t br, uint32_t bc,
                     C* dst, bool acc) {
    const uint32_t cols = ac * bc;
    for (uint32_t ra = 0; ra < ar; ++ra)
      for (uint32_t rb = 0; rb < br; ++rb) {
        C* drow = dst + static_cast<size_t>(ra * br + rb) * cols;
        const C* brow = b + static_cast<size_t>(rb) * bc;
        for (uint32_t ca = 0; ca < ac; ++ca) {
          const C av = a[static_cast<size_t>(ra) * ac + ca];
          for (uint32_t cb = 0; cb < bc; ++cb) {
            if (acc)
              drow[ca * bc + cb] += av * brow[cb];
            else
              drow[ca * bc + cb] = av * brow[cb];
          }
        }
      }
  }

  bool exec_instr(const BInstr& in, const double* params) {
    switch (in.op) {
      case BOp::Write: {
        const WriteDesc& w = bc_.writes[in.a];
        const qgl::CompiledExpr& e = *mod_.entries[w.expr];
        formals_.resize(w.bindings.size());
        for (size_t j = 0; j < w.bindings.size(); ++j)
          formals_[j] = w.bindings[j].is_const ? w.bindings[j].value : params[w.bindings[j].index];
        return qgl::exec_kernel(e.unitary, formals_.data(), bufs_[in.dst].data(), scratch_);
      }
      case BOp::Frpr: {
        const std::vector<uint32_t>& g = gathers_[in.b];
        const C* src = bufs_[in.a].data();
        C* dst = bufs_[in.dst].data();
        for (size_t j = 0; j < g.size(); ++j) dst[j] = src[g[j]];
        return true;
      }
      case BOp::Matmul: {
        const BufferInfo& a = bc_.buffers[in.a];
        const BufferInfo& b = bc_.buffers[in.b];
        matmul_t(bufs_[in.a].data(), a.rows, a.cols, b.cols, bufs_[in.b].data(),
                 bufs_[in.dst].data(), false);
        return true;
      }
      case BOp::Kron: {
        const BufferInfo& a = bc_.buffers[in.a];
        const BufferInfo& b = bc_.buffers[in.b];
        kron_t(bufs_[in.a].data(), a.rows, a.cols, bufs_[in.b].data(), b.rows, b.cols,
               bufs_[in.dst].data(), false);
        return true;
      }
    }
    return false;
  }

  bool exec_grad(size_t i, const BInstr& in) {
    const Plan& pl = plans_[i];
    bool ok = true;
    switch (in.op) {
      case BOp::Write: {
        if (pl.wt.empty()) break;
        const WriteDesc& w = bc_.writes[in.a];
        const qgl::CompiledExpr& e = *mod_.entries[w.expr];
        const size_t sz = buf_size(in.dst);
        for (const WTerm& t : pl.wt) {
          C* slot = bank_ptr(in.dst, t.slot);
          if (t.formals.size() == 1) {
            ok = qgl::exec_kernel(e.gradients[t.formals[0]], formals_.data(), slot, scratch_) && ok;
          } else {
            std::fill_n(slot, sz, C(0));
            for (uint32_t f : t.formals) {
              gscratch_.assign(sz, C(0));
              ok = qgl::exec_kernel(e.gradients[f], formals_.data(), gscratch_.data(), scratch_) &&
                   ok;
              for (size_t j = 0; j < sz; ++j) slot[j] += gscratch_[j];
            }
          }
        }
        break;
      }
      case BOp::Frpr: {
        const std::vector<uint32_t>& g = gathers_[in.b];
        for (uint32_t s = 0; s < pl.n; ++s) {
          const C* src = bank_ptr(in.a, s);
          C* dst = bank_ptr(in.dst, s);
          for (size_t j = 0; j < g.size(); ++j) dst[j] = src[g[j]];
        }
        break;
      }
      case BOp::Matmul: {
        const BufferInfo& a = bc_.buffers[in.a];
        const BufferInfo& b = bc_.buffers[in.b];
        for (const BTerm& t : pl.bt) {
          C* dst = bank_ptr(in.dst, t.d);
          bool acc = false;
          if (t.a >= 0) {
            matmul_t(bank_ptr(in.a, static_cast<uint32_t>(t.a)), a.rows, a.cols, b.cols,
                     bufs_[in.b].data(), dst, false);
            acc = true;
          }
          if (t.b >= 0)
            matmul_t(bufs_[in.a].data(), a.rows, a.cols, b.cols,
                     bank_ptr(in.b, static_cast<uint32_t>(t.b)), dst, acc);
        }
        break;
      }
      case BOp::Kron: {
        const BufferInfo& a = bc_.buffers[in.a];
        const BufferInfo& b = bc_.buffers[in.b];
        for (const BTerm& t : pl.bt) {
          C* dst = bank_ptr(in.dst, t.d);
          bool acc = false;
          if (t.a >= 0) {
            kron_t(bank_ptr(in.a, static_cast<uint32_t>(t.a)), a.rows, a.cols, bufs_[in.b].data(),
                   b.rows, b.cols, dst, false);
            acc = true;
          }
          if (t.b >= 0)
            kron_t(bufs_[in.a].data(), a.rows, a.cols, bank_ptr(in.b, static_cast<uint32_t>(t.b)),
                   b.rows, b.cols, dst, acc);
        }
        break;
      }
    }
    return ok;
  }

  bool finite_out() const {
    for (const C& v : bufs_[bc_.out_buffer])
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  Bytecode bc_;
  qgl::ExpressionModule mod_;
  uint32_t dim_ = 0;
  bool static_ok_ = true;
  std::vector<std::vector<C>> bufs_;
  std::vector<std::vector<C>> banks_;
  std::vector<std::vector<uint32_t>> gathers_;
  std::vector<Plan> plans_;
  std::vector<uint32_t> out_support_;
  std::vector<uint64_t> static_counts_;
  std::vector<double> formals_;
  std::vector<T> scratch_;
  std::vector<C> gscratch_;
};

}  // namespace qvm
