// Array evaluator. A goal denotes a dense array over its free variables;
// conj/fresh chains are contracted one summed variable at a time, picking
// the variable whose contraction touches the fewest cells.

#include <fmt/format.h>

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "skn/eval.hpp"

namespace skn {

namespace {

constexpr std::size_t kMaxCells = std::size_t{1} << 28;

// Index of a value as a function of variable indices.
struct VNode {
  enum Kind { k_const, k_var, k_shift, k_pair } kind = k_const;
  std::size_t c = 0;  // constant, shift amount, or right-hand size for pairs
  int var = -1;
  int a = -1, b = -1;
};

struct Node {
  enum Kind { conj, disj, fresh, eq, neq, call, factor } kind = factor;
  int lhs = -1, rhs = -1;       // conj/disj children; fresh body in lhs
  int var = -1;                 // fresh binder
  int v1 = -1, v2 = -1;         // eq/neq value roots
  std::vector<int> args;        // call argument roots
  std::vector<std::size_t> arg_strides;
  const RelTable* table = nullptr;
  Weight w;
  std::vector<int> free;        // sorted
};

struct Tensor {
  std::vector<int> dims;  // sorted variable ids
  std::vector<std::size_t> sizes;
  std::vector<Weight> data;
};

std::size_t checked_cells(const std::vector<std::size_t>& sizes) {
  std::size_t n = 1;
  for (auto s : sizes) {
    if (s != 0 && n > kMaxCells / s) {
      throw std::runtime_error("intermediate array exceeds the cell limit");
    }
    n *= s;
  }
  return n;
}

std::vector<int> merge(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

class Compiler {
 public:
  Compiler(const std::vector<Param>& scope, const Tables& tables, const Semiring& k)
      : tables_(tables), k_(k) {
    for (const auto& p : scope) {
      names_.emplace_back(p.name, bind(p.type));
    }
  }

  int goal(const Goal& g) {
    Node n;
    if (auto c = g.as<Goal::Conj>()) {
      n.kind = Node::conj;
      n.lhs = goal(c->lhs);
      n.rhs = goal(c->rhs);
      n.free = merge(nodes_[n.lhs].free, nodes_[n.rhs].free);
    } else if (auto d = g.as<Goal::Disj>()) {
      n.kind = Node::disj;
      n.lhs = goal(d->lhs);
      n.rhs = goal(d->rhs);
      n.free = merge(nodes_[n.lhs].free, nodes_[n.rhs].free);
    } else if (auto f = g.as<Goal::Fresh>()) {
      n.kind = Node::fresh;
      n.var = bind(f->type);
      names_.emplace_back(f->var, n.var);
      n.lhs = goal(f->body);
      names_.pop_back();
      n.free = nodes_[n.lhs].free;
      n.free.erase(std::remove(n.free.begin(), n.free.end(), n.var), n.free.end());
    } else if (auto u = g.as<Goal::Unify>()) {
      equation(n, u->lhs, u->rhs, u->type);
      n.kind = Node::eq;
    } else if (auto u = g.as<Goal::Disunify>()) {
      equation(n, u->lhs, u->rhs, u->type);
      n.kind = Node::neq;
    } else if (auto c = g.as<Goal::Call>()) {
      n.kind = Node::call;
      auto it = tables_.find(c->rel);
      if (it == tables_.end()) {
        throw std::invalid_argument(fmt::format("no table for relation '{}'", c->rel));
      }
      n.table = &it->second;
      if (n.table->params.size() != c->args.size()) {
        throw std::invalid_argument(fmt::format("arity mismatch calling '{}'", c->rel));
      }
      std::size_t stride = 1;
      n.arg_strides.resize(c->args.size());
      for (std::size_t i = c->args.size(); i-- > 0;) {
        n.arg_strides[i] = stride;
        stride *= n.table->sizes[i];
      }
      for (std::size_t i = 0; i < c->args.size(); ++i) {
        n.args.push_back(value(c->args[i], n.table->params[i].type, n.free));
      }
      finish_free(n.free);
    } else {
      n.kind = Node::factor;
      n.w = k_.parse_literal(g.as<Goal::Factor>()->literal);
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Node& node(int i) const { return nodes_[i]; }
  const VNode& vnode(int i) const { return vnodes_[i]; }
  std::size_t var_size(int v) const { return var_sizes_[v]; }
  std::size_t num_vars() const { return var_sizes_.size(); }

 private:
  int bind(const Type& t) {
    var_sizes_.push_back(type_size(t));
    return static_cast<int>(var_sizes_.size()) - 1;
  }

  int lookup(const std::string& name) const {
    for (auto it = names_.rbegin(); it != names_.rend(); ++it) {
      if (it->first == name) return it->second;
    }
    throw std::invalid_argument(fmt::format("unbound variable '{}'", name));
  }

  static void finish_free(std::vector<int>& free) {
    std::sort(free.begin(), free.end());
    free.erase(std::unique(free.begin(), free.end()), free.end());
  }

  void equation(Node& n, const Value& a, const Value& b, const std::optional<Type>& t) {
    if (!t) throw std::invalid_argument("equation without a resolved type; check first");
    n.v1 = value(a, *t, n.free);
    n.v2 = value(b, *t, n.free);
    finish_free(n.free);
  }

  int push(VNode v) {
    vnodes_.push_back(v);
    return static_cast<int>(vnodes_.size()) - 1;
  }

  int value(const Value& v, const Type& t, std::vector<int>& free) {
    switch (v.kind()) {
      case Value::Kind::sole:
        return push({VNode::k_const, 0, -1, -1, -1});
      case Value::Kind::var: {
        const int id = lookup(v.name());
        free.push_back(id);
        return push({VNode::k_var, 0, id, -1, -1});
      }
      case Value::Kind::left:
      case Value::Kind::right: {
        if (!t.is_sum()) throw std::invalid_argument("ill-typed sum value");
        const bool left = v.kind() == Value::Kind::left;
        const int inner = value(v.inner(), left ? t.left() : t.right(), free);
        const std::size_t shift = left ? 0 : type_size(t.left());
        if (shift == 0) return inner;
        if (vnodes_[inner].kind == VNode::k_const) {
          return push({VNode::k_const, vnodes_[inner].c + shift, -1, -1, -1});
        }
        return push({VNode::k_shift, shift, -1, inner, -1});
      }
      case Value::Kind::pair: {
        if (!t.is_prod()) throw std::invalid_argument("ill-typed pair value");
        const int a = value(v.first(), t.left(), free);
        const int b = value(v.second(), t.right(), free);
        const std::size_t m = type_size(t.right());
        if (vnodes_[a].kind == VNode::k_const && vnodes_[b].kind == VNode::k_const) {
          return push({VNode::k_const, vnodes_[a].c * m + vnodes_[b].c, -1, -1, -1});
        }
        return push({VNode::k_pair, m, -1, a, b});
      }
    }
    throw std::logic_error("bad value");
  }

  const Tables& tables_;
  const Semiring& k_;
  std::vector<std::pair<std::string, int>> names_;
  std::vector<std::size_t> var_sizes_;
  std::vector<Node> nodes_;
  std::vector<VNode> vnodes_;
};

class Evaluator {
 public:
  Evaluator(const Compiler& c, const Semiring& k, std::size_t nvars)
      : c_(c), k_(k), assignment_(nvars, 0) {}

  Tensor eval(int id) {
    const Node& n = c_.node(id);
    switch (n.kind) {
      case Node::conj:
      case Node::fresh:
        return chain(id);
      case Node::disj:
        return combine(eval(n.lhs), eval(n.rhs), false);
      case Node::factor: {
        Tensor t;
        t.data.push_back(n.w);
        return t;
      }
      default:
        return leaf(n);
    }
  }

 private:
  std::size_t index_of(int v) const {
    const VNode& n = c_.vnode(v);
    switch (n.kind) {
      case VNode::k_const:
        return n.c;
      case VNode::k_var:
        return assignment_[n.var];
      case VNode::k_shift:
        return index_of(n.a) + n.c;
      case VNode::k_pair:
        return index_of(n.a) * n.c + index_of(n.b);
    }
    return 0;
  }

  Tensor shaped(const std::vector<int>& dims) const {
    Tensor t;
    t.dims = dims;
    for (int d : dims) t.sizes.push_back(c_.var_size(d));
    t.data.assign(checked_cells(t.sizes), k_.zero());
    return t;
  }

  Tensor leaf(const Node& n) {
    Tensor t = shaped(n.free);
    std::vector<std::size_t> idx(t.dims.size(), 0);
    for (std::size_t flat = 0; flat < t.data.size(); ++flat) {
      for (std::size_t d = 0; d < idx.size(); ++d) assignment_[t.dims[d]] = idx[d];
      if (n.kind == Node::call) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < n.args.size(); ++i) {
          off += index_of(n.args[i]) * n.arg_strides[i];
        }
        t.data[flat] = n.table->cells[off];
      } else {
        const bool same = index_of(n.v1) == index_of(n.v2);
        t.data[flat] = (same == (n.kind == Node::eq)) ? k_.one() : k_.zero();
      }
      for (std::size_t d = idx.size(); d-- > 0;) {
        if (++idx[d] < t.sizes[d]) break;
        idx[d] = 0;
      }
    }
    return t;
  }

  // Elementwise product (or sum) broadcast over the union of dimensions.
  Tensor combine(const Tensor& a, const Tensor& b, bool multiply) const {
    Tensor out = shaped(merge(a.dims, b.dims));
    const std::size_t rank = out.dims.size();
    std::vector<std::size_t> sa(rank, 0), sb(rank, 0);
    auto strides = [&](const Tensor& t, std::vector<std::size_t>& s) {
      std::size_t stride = 1;
      for (std::size_t d = t.dims.size(); d-- > 0;) {
        const auto pos = std::lower_bound(out.dims.begin(), out.dims.end(), t.dims[d]) -
                         out.dims.begin();
        s[pos] = stride;
        stride *= t.sizes[d];
      }
    };
    strides(a, sa);
    strides(b, sb);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t flat = 0; flat < out.data.size(); ++flat) {
      out.data[flat] = multiply ? k_.mul(a.data[ia], b.data[ib])
                                : k_.add(a.data[ia], b.data[ib]);
      for (std::size_t d = rank; d-- > 0;) {
        ia += sa[d];
        ib += sb[d];
        if (++idx[d] < out.sizes[d]) break;
        ia -= sa[d] * out.sizes[d];
        ib -= sb[d] * out.sizes[d];
        idx[d] = 0;
      }
    }
    return out;
  }

  Tensor sum_out(const Tensor& t, int var) const {
    std::vector<int> dims;
    for (int d : t.dims) {
      if (d != var) dims.push_back(d);
    }
    Tensor out = shaped(dims);
    const std::size_t rank = t.dims.size();
    std::vector<std::size_t> so(rank, 0);
    std::size_t stride = 1;
    for (std::size_t d = rank; d-- > 0;) {
      if (t.dims[d] == var) continue;
      so[d] = stride;
      stride *= t.sizes[d];
    }
    std::vector<std::size_t> idx(rank, 0);
    std::size_t io = 0;
    for (std::size_t flat = 0; flat < t.data.size(); ++flat) {
      out.data[io] = k_.add(out.data[io], t.data[flat]);
      for (std::size_t d = rank; d-- > 0;) {
        io += so[d];
        if (++idx[d] < t.sizes[d]) break;
        io -= so[d] * t.sizes[d];
        idx[d] = 0;
      }
    }
    return out;
  }

  void collect(int id, std::vector<Tensor>& factors, std::vector<int>& summed) {
    const Node& n = c_.node(id);
    if (n.kind == Node::conj) {
      collect(n.lhs, factors, summed);
      collect(n.rhs, factors, summed);
    } else if (n.kind == Node::fresh) {
      summed.push_back(n.var);
      collect(n.lhs, factors, summed);
    } else {
      factors.push_back(eval(id));
    }
  }

  bool all_zero(const Tensor& t) const {
    return std::all_of(t.data.begin(), t.data.end(),
                       [&](Weight w) { return w == k_.zero(); });
  }

  Tensor chain(int id) {
    std::vector<Tensor> factors;
    std::vector<int> summed;
    collect(id, factors, summed);
    for (const auto& f : factors) {
      if (all_zero(f)) return shaped(c_.node(id).free);
    }
    while (!summed.empty()) {
      std::size_t best = summed.size();
      std::size_t best_cost = 0;
      for (std::size_t i = 0; i < summed.size(); ++i) {
        std::vector<int> dims;
        bool used = false;
        for (const auto& f : factors) {
          if (std::binary_search(f.dims.begin(), f.dims.end(), summed[i])) {
            dims = merge(dims, f.dims);
            used = true;
          }
        }
        if (!used) continue;
        std::size_t cost = 1;
        for (int d : dims) cost = std::min(kMaxCells * 2, cost * c_.var_size(d));
        if (best == summed.size() || cost < best_cost) {
          best = i;
          best_cost = cost;
        }
      }
      if (best == summed.size()) break;  // remaining variables occur in no factor
      const int var = summed[best];
      summed.erase(summed.begin() + static_cast<std::ptrdiff_t>(best));
      std::vector<Tensor> rest;
      std::optional<Tensor> joined;
      for (auto& f : factors) {
        if (std::binary_search(f.dims.begin(), f.dims.end(), var)) {
          joined = joined ? combine(*joined, f, true) : std::move(f);
        } else {
          rest.push_back(std::move(f));
        }
      }
      rest.push_back(sum_out(*joined, var));
      factors = std::move(rest);
    }
    Tensor acc;
    acc.data.push_back(k_.one());
    for (const auto& f : factors) acc = combine(acc, f, true);
    // Σ over a variable the product does not mention: |τ| copies added.
    for (int var : summed) {
      Weight n = k_.zero();
      for (std::size_t i = 0; i < c_.var_size(var); ++i) {
        const Weight next = k_.add(n, k_.one());
        if (next == n) break;
        n = next;
      }
      Tensor scale;
      scale.data.push_back(n);
      acc = combine(acc, scale, true);
    }
    return acc;
  }

  const Compiler& c_;
  const Semiring& k_;
  std::vector<std::size_t> assignment_;
};

}  // namespace

std::vector<Weight> eval_goal_array(const Goal& g, const std::vector<Param>& scope,
                                    const Tables& tables, const Semiring& k) {
  Compiler compiler(scope, tables, k);
  const int root = compiler.goal(g);
  Evaluator ev(compiler, k, compiler.num_vars());
  const Tensor t = ev.eval(root);

  // Broadcast onto the full grid of `scope`; scope variables are ids 0..n-1.
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    sizes.push_back(compiler.var_size(static_cast<int>(i)));
  }
  std::vector<Weight> out(checked_cells(sizes));
  std::vector<std::size_t> st(scope.size(), 0);
  std::size_t stride = 1;
  for (std::size_t d = t.dims.size(); d-- > 0;) {
    st[static_cast<std::size_t>(t.dims[d])] = stride;
    stride *= t.sizes[d];
  }
  std::vector<std::size_t> idx(scope.size(), 0);
  std::size_t it = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = t.data[it];
    for (std::size_t d = idx.size(); d-- > 0;) {
      it += st[d];
      if (++idx[d] < sizes[d]) break;
      it -= st[d] * sizes[d];
      idx[d] = 0;
    }
  }
  return out;
}

}  // namespace skn
