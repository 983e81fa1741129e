// Lowering of polymorphic programs to monomorphic ones.
//
// Every polymorphic relation is emitted as instances over canonical types,
// keyed by the size of each type variable. A call either targets the instance
// of its own sizes (converting non-canonical argument types by index), or in
// large-enough mode the smallest large-enough instance, tied to the arguments
// by enforce-eqpat.

#include <fmt/format.h>

#include <deque>
#include <stdexcept>

#include "skn/poly.hpp"

namespace skn {

namespace {

struct CallSite {
  std::string callee;
  Subst subst;
};

void collect_calls(const Goal& g, std::vector<CallSite>& out) {
  if (auto c = g.as<Goal::Conj>()) {
    collect_calls(c->lhs, out);
    collect_calls(c->rhs, out);
  } else if (auto d = g.as<Goal::Disj>()) {
    collect_calls(d->lhs, out);
    collect_calls(d->rhs, out);
  } else if (auto f = g.as<Goal::Fresh>()) {
    collect_calls(f->body, out);
  } else if (auto c = g.as<Goal::Call>()) {
    if (!c->info) throw std::invalid_argument("lowering needs a checked program");
    out.push_back({c->rel, c->info->subst});
  }
}

void collect_fresh_types(const Goal& g, std::vector<Type>& out) {
  if (auto c = g.as<Goal::Conj>()) {
    collect_fresh_types(c->lhs, out);
    collect_fresh_types(c->rhs, out);
  } else if (auto d = g.as<Goal::Disj>()) {
    collect_fresh_types(d->lhs, out);
    collect_fresh_types(d->rhs, out);
  } else if (auto f = g.as<Goal::Fresh>()) {
    out.push_back(f->type);
    collect_fresh_types(f->body, out);
  }
}

std::map<std::string, std::size_t> size_map(const RelationDef& rel, const SizeSubst& s) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) out[rel.tyvars[i]] = s[i];
  return out;
}

bool at_least(const SizeSubst& a, const SizeSubst& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
  }
  return true;
}

class Lowerer {
 public:
  Lowerer(const Program& p, PolyMode mode, const Semiring& k, const LowerOptions& options)
      : program_(p), rels_(rel_env_of(p)), mode_(mode), k_(k), options_(options) {
    for (const auto& r : p.relations) {
      if (r.is_polymorphic()) le_[r.name] = smallest_large_enough(r);
    }
  }

  LowerResult run() {
    if (mode_ == PolyMode::large_enough && !le_.empty() && !k_.idempotent_add()) {
      throw NonIdempotentSemiring(fmt::format(
          "large-enough mode needs idempotent addition; the {} semiring does not have it",
          k_.name()));
    }
    if (mode_ == PolyMode::large_enough) compute_eligible();
    for (const auto& r : program_.relations) {
      enqueue(InstanceKey{r.name, r.is_polymorphic() ? le_.at(r.name) : SizeSubst{}});
    }
    while (!queue_.empty()) {
      InstanceKey key = queue_.front();
      queue_.pop_front();
      result_.program.relations.push_back(emit(key));
    }
    try {
      result_.program = check_program(result_.program);
    } catch (const TypeError& e) {
      throw std::logic_error(std::string("lowered program does not type check: ") + e.what());
    }
    result_.eligible = eligible_;
    return std::move(result_);
  }

 private:
  // Greatest set of relations whose large-enough instance determines every
  // larger one: each call whose substitution depends on the caller's type
  // variables must itself land on an eligible relation at large-enough sizes.
  void compute_eligible() {
    std::map<std::string, std::vector<CallSite>> calls;
    for (const auto& [name, sizes] : le_) {
      eligible_.insert(name);
      collect_calls(program_.find(name)->body, calls[name]);
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (auto it = eligible_.begin(); it != eligible_.end();) {
        const RelationDef& rel = *program_.find(*it);
        const auto sizes = size_map(rel, le_.at(rel.name));
        bool ok = true;
        for (const auto& site : calls.at(rel.name)) {
          auto callee_le = le_.find(site.callee);
          if (callee_le == le_.end()) continue;
          const RelationDef& callee = *program_.find(site.callee);
          bool dependent = false;
          SizeSubst at;
          for (const auto& b : callee.tyvars) {
            const Type& t = site.subst.at(b);
            dependent = dependent || !t.is_concrete();
            try {
              at.push_back(size_under(t, sizes));
            } catch (const std::overflow_error&) {
              at.push_back(std::size_t(-1));
            }
          }
          if (!dependent) continue;
          if (!eligible_.count(site.callee) || !at_least(at, callee_le->second)) {
            result_.notes.push_back(fmt::format(
                "{}: large-enough instance cannot serve larger calls (calls {} at <{}>)",
                rel.name, site.callee, fmt::join(at, ",")));
            ok = false;
            break;
          }
        }
        if (ok) {
          ++it;
        } else {
          it = eligible_.erase(it);
          changed = true;
        }
      }
    }
  }

  void enqueue(const InstanceKey& key) {
    if (seen_.count(key)) return;
    if (seen_.size() >= options_.instance_cap) {
      throw InstanceExplosion(fmt::format(
          "more than {} relation instances needed (at {}); polymorphic recursion grows "
          "types without bound",
          options_.instance_cap, key.mangled()));
    }
    const RelationDef& rel = *program_.find(key.rel);
    const auto sizes = size_map(rel, key.sizes);
    std::size_t cells = 1;
    try {
      for (const auto& p : rel.params) {
        const std::size_t n = size_under(p.type, sizes);
        if (n > options_.cell_cap || cells > options_.cell_cap / n) {
          throw std::overflow_error("cells");
        }
        cells *= n;
      }
      std::vector<Type> fresh;
      collect_fresh_types(rel.body, fresh);
      for (const auto& t : fresh) {
        if (size_under(t, sizes) > options_.cell_cap) throw std::overflow_error("fresh");
      }
    } catch (const std::overflow_error&) {
      throw InstanceExplosion(fmt::format(
          "instance {} needs a table or fresh domain larger than {}; polymorphic recursion grows "
          "types without bound",
          key.mangled(), options_.cell_cap));
    }
    seen_.insert(key);
    result_.instances.push_back(key);
    queue_.push_back(key);
  }

  RelationDef emit(const InstanceKey& key) {
    const RelationDef& source = *program_.find(key.rel);
    RelationDef inst = source;
    if (source.is_polymorphic()) {
      inst = instantiate_relation(source, canonical_subst(source, key.sizes), key.mangled());
      inst = check_relation(rels_, inst);
    }
    NameSupply names(inst);
    TypeEnv env;
    for (const auto& p : inst.params) env.vars.emplace_back(p.name, p.type);
    RelationDef out;
    out.name = key.mangled();
    out.params = inst.params;
    out.body = rewrite(inst.body, env, names, out.name);
    return out;
  }

  Goal rewrite(const Goal& g, const TypeEnv& env, NameSupply& names, const std::string& where) {
    if (auto c = g.as<Goal::Conj>()) {
      return Goal::conj(rewrite(c->lhs, env, names, where), rewrite(c->rhs, env, names, where));
    }
    if (auto d = g.as<Goal::Disj>()) {
      return Goal::disj(rewrite(d->lhs, env, names, where), rewrite(d->rhs, env, names, where));
    }
    if (auto f = g.as<Goal::Fresh>()) {
      return Goal::fresh(f->var, f->type,
                         rewrite(f->body, env.extended(f->var, f->type), names, where));
    }
    if (auto c = g.as<Goal::Call>()) return rewrite_call(*c, env, names, where);
    return g;
  }

  Goal rewrite_call(const Goal::Call& call, const TypeEnv& env, NameSupply& names,
                    const std::string& where) {
    auto le = le_.find(call.rel);
    if (le == le_.end()) return Goal::call(call.rel, call.args);
    const RelationDef& callee = *program_.find(call.rel);
    const RelSig& sig = rels_.at(call.rel);
    const Subst& sigma = call.info->subst;
    SizeSubst sizes;
    bool canonical = true;
    for (const auto& a : callee.tyvars) {
      const Type& t = sigma.at(a);
      try {
        sizes.push_back(type_size(t));
      } catch (const std::overflow_error&) {
        throw InstanceExplosion(fmt::format("{}: call to {} at a type too large to enumerate",
                                            where, call.rel));
      }
      canonical = canonical && is_canonical(t);
    }

    if (mode_ == PolyMode::large_enough) {
      if (eligible_.count(call.rel) && at_least(sizes, le->second)) {
        const InstanceKey target{call.rel, le->second};
        enqueue(target);
        const Subst sigma2 = canonical_subst(callee, le->second);
        if (sizes != le->second) {
          return compile_call(call, sig, env, sigma2, target.mangled(), k_, names);
        }
        if (canonical) return Goal::call(target.mangled(), call.args);
        return coerce_call(call, sig, env, sigma2, target.mangled(), names);
      }
      result_.notes.push_back(fmt::format(
          "{}: call to {} at <{}> monomorphized ({})", where, call.rel, fmt::join(sizes, ","),
          eligible_.count(call.rel) ? fmt::format("below <{}>", fmt::join(le->second, ","))
                                    : std::string("relation not eligible")));
    }
    const InstanceKey target{call.rel, sizes};
    enqueue(target);
    if (canonical) return Goal::call(target.mangled(), call.args);
    return coerce_call(call, sig, env, canonical_subst(callee, sizes), target.mangled(), names);
  }

  const Program& program_;
  RelEnv rels_;
  PolyMode mode_;
  Semiring k_;
  LowerOptions options_;
  std::map<std::string, SizeSubst> le_;
  std::set<std::string> eligible_;
  std::set<InstanceKey> seen_;
  std::deque<InstanceKey> queue_;
  LowerResult result_;
};

}  // namespace

LowerResult lower_program(const Program& checked, PolyMode mode, const Semiring& k,
                          const LowerOptions& options) {
  return Lowerer(checked, mode, k, options).run();
}

std::vector<InstanceKey> collect_instances(const Program& checked, PolyMode mode,
                                           const Semiring& k, const LowerOptions& options) {
  return lower_program(checked, mode, k, options).instances;
}

}  // namespace skn
