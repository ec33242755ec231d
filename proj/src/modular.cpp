#include "lmplambda/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace lmplambda {

// ---------------------------------------------------------------------------
// kernel algebra
// ---------------------------------------------------------------------------

KernelPtr k_identity(int dim) { return std::make_shared<RealKernel>(RealKernel{KIdentity{dim}}); }
KernelPtr k_lebesgue() { return std::make_shared<RealKernel>(RealKernel{KLebesgue{}}); }
KernelPtr k_prim(const std::string& name) {
  if (!prim_lookup(name)) throw std::runtime_error("kernel over unknown primitive " + name);
  return std::make_shared<RealKernel>(RealKernel{KPrimLift{name}});
}

KernelPtr k_reindex(std::vector<int> select, int in_dim) {
  for (int s : select)
    if (s < 0 || s >= in_dim) throw std::runtime_error("reindex out of range");
  if ((int)select.size() == in_dim) {
    bool ident = true;
    for (int j = 0; j < in_dim; ++j)
      if (select[j] != j) ident = false;
    if (ident) return k_identity(in_dim);
  }
  return std::make_shared<RealKernel>(RealKernel{KReindex{std::move(select), in_dim}});
}

KernelPtr k_product(KernelPtr left, KernelPtr right) {
  auto* li = std::get_if<KIdentity>(&left->node);
  auto* ri = std::get_if<KIdentity>(&right->node);
  if (li && ri) return k_identity(li->dim + ri->dim);
  if (li && li->dim == 0) return right;
  if (ri && ri->dim == 0) return left;
  return std::make_shared<RealKernel>(RealKernel{KProduct{std::move(left), std::move(right)}});
}

KernelPtr k_compose(KernelPtr after, KernelPtr before) {
  if (kernel_in_dim(after) != kernel_out_dim(before))
    throw std::runtime_error("kernel composition dimension mismatch");
  if (std::holds_alternative<KIdentity>(after->node)) return before;
  if (std::holds_alternative<KIdentity>(before->node)) return after;
  if (auto* ra = std::get_if<KReindex>(&after->node)) {
    if (auto* rb = std::get_if<KReindex>(&before->node)) {
      std::vector<int> sel(ra->select.size());
      for (size_t j = 0; j < sel.size(); ++j) sel[j] = rb->select[ra->select[j]];
      return k_reindex(std::move(sel), rb->in_dim);
    }
  }
  return std::make_shared<RealKernel>(RealKernel{KCompose{std::move(after), std::move(before)}});
}

int kernel_in_dim(const KernelPtr& k) {
  if (auto* x = std::get_if<KIdentity>(&k->node)) return x->dim;
  if (std::holds_alternative<KLebesgue>(k->node)) return 0;
  if (auto* x = std::get_if<KPrimLift>(&k->node)) return prim_lookup(x->name)->arity;
  if (auto* x = std::get_if<KReindex>(&k->node)) return x->in_dim;
  if (auto* x = std::get_if<KProduct>(&k->node))
    return kernel_in_dim(x->left) + kernel_in_dim(x->right);
  const auto& c = std::get<KCompose>(k->node);
  return kernel_in_dim(c.before);
}

int kernel_out_dim(const KernelPtr& k) {
  if (auto* x = std::get_if<KIdentity>(&k->node)) return x->dim;
  if (std::holds_alternative<KLebesgue>(k->node)) return 1;
  if (std::holds_alternative<KPrimLift>(k->node)) return 1;
  if (auto* x = std::get_if<KReindex>(&k->node)) return (int)x->select.size();
  if (auto* x = std::get_if<KProduct>(&k->node))
    return kernel_out_dim(x->left) + kernel_out_dim(x->right);
  const auto& c = std::get<KCompose>(k->node);
  return kernel_out_dim(c.after);
}

int kernel_draw_count(const KernelPtr& k) {
  if (std::holds_alternative<KLebesgue>(k->node)) return 1;
  if (auto* x = std::get_if<KProduct>(&k->node))
    return kernel_draw_count(x->left) + kernel_draw_count(x->right);
  if (auto* x = std::get_if<KCompose>(&k->node))
    return kernel_draw_count(x->before) + kernel_draw_count(x->after);
  return 0;
}

std::string kernel_signature(const KernelPtr& k) {
  if (auto* x = std::get_if<KIdentity>(&k->node)) return "id" + std::to_string(x->dim);
  if (std::holds_alternative<KLebesgue>(k->node)) return "leb";
  if (auto* x = std::get_if<KPrimLift>(&k->node)) return "prim:" + x->name;
  if (auto* x = std::get_if<KReindex>(&k->node)) {
    std::string s = "re[";
    for (size_t j = 0; j < x->select.size(); ++j) {
      if (j) s += ",";
      s += std::to_string(x->select[j]);
    }
    return s + "]/" + std::to_string(x->in_dim);
  }
  if (auto* x = std::get_if<KProduct>(&k->node))
    return "(" + kernel_signature(x->left) + " x " + kernel_signature(x->right) + ")";
  const auto& c = std::get<KCompose>(k->node);
  return "(" + kernel_signature(c.after) + " . " + kernel_signature(c.before) + ")";
}

std::vector<double> kernel_sample(const KernelPtr& k, const std::vector<double>& in,
                                  RngStream& rng) {
  if ((int)in.size() != kernel_in_dim(k))
    throw std::runtime_error("kernel input dimension mismatch");
  if (std::holds_alternative<KIdentity>(k->node)) return in;
  if (std::holds_alternative<KLebesgue>(k->node)) return {rng.uniform()};
  if (auto* x = std::get_if<KPrimLift>(&k->node)) return {prim_apply(x->name, in)};
  if (auto* x = std::get_if<KReindex>(&k->node)) {
    std::vector<double> out(x->select.size());
    for (size_t j = 0; j < out.size(); ++j) out[j] = in[x->select[j]];
    return out;
  }
  if (auto* x = std::get_if<KProduct>(&k->node)) {
    int dl = kernel_in_dim(x->left);
    std::vector<double> a(in.begin(), in.begin() + dl);
    std::vector<double> b(in.begin() + dl, in.end());
    std::vector<double> oa = kernel_sample(x->left, a, rng);
    std::vector<double> ob = kernel_sample(x->right, b, rng);
    oa.insert(oa.end(), ob.begin(), ob.end());
    return oa;
  }
  const auto& c = std::get<KCompose>(k->node);
  std::vector<double> mid = kernel_sample(c.before, in, rng);
  return kernel_sample(c.after, mid, rng);
}

std::vector<double> kernel_apply_draws(const KernelPtr& k, const std::vector<double>& in,
                                       const std::vector<double>& draws, size_t& pos) {
  if ((int)in.size() != kernel_in_dim(k))
    throw std::runtime_error("kernel input dimension mismatch");
  if (std::holds_alternative<KIdentity>(k->node)) return in;
  if (std::holds_alternative<KLebesgue>(k->node)) {
    if (pos >= draws.size()) throw std::runtime_error("kernel draw list exhausted");
    return {draws[pos++]};
  }
  if (auto* x = std::get_if<KPrimLift>(&k->node)) return {prim_apply(x->name, in)};
  if (auto* x = std::get_if<KReindex>(&k->node)) {
    std::vector<double> out(x->select.size());
    for (size_t j = 0; j < out.size(); ++j) out[j] = in[x->select[j]];
    return out;
  }
  if (auto* x = std::get_if<KProduct>(&k->node)) {
    int dl = kernel_in_dim(x->left);
    std::vector<double> a(in.begin(), in.begin() + dl);
    std::vector<double> b(in.begin() + dl, in.end());
    std::vector<double> oa = kernel_apply_draws(x->left, a, draws, pos);
    std::vector<double> ob = kernel_apply_draws(x->right, b, draws, pos);
    oa.insert(oa.end(), ob.begin(), ob.end());
    return oa;
  }
  const auto& c = std::get<KCompose>(k->node);
  std::vector<double> mid = kernel_apply_draws(c.before, in, draws, pos);
  return kernel_apply_draws(c.after, mid, draws, pos);
}

// ---------------------------------------------------------------------------
// modular evaluation. Working pre-terms carry input-slot ids on their holes
// (1-based); canonicalization renumbers holes in print order and returns the
// selection map feeding a Reindex kernel.
// ---------------------------------------------------------------------------

namespace {

void collect_slots_v(const ValuePtr& v, std::vector<int>& slots);

void collect_slots_t(const TermPtr& m, std::vector<int>& slots) {
  if (auto* x = std::get_if<TVal>(&m->node)) return collect_slots_v(x->v, slots);
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    for (const auto& a : x->args) collect_slots_v(a, slots);
    return;
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    for (const auto& a : x->args) collect_slots_v(a, slots);
    return;
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    collect_slots_v(x->scrutinee, slots);
    for (const auto& br : x->branches) collect_slots_t(br.body, slots);
    return;
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    collect_slots_v(x->fn, slots);
    collect_slots_v(x->arg, slots);
    return;
  }
  if (auto* x = std::get_if<TLet>(&m->node)) {
    collect_slots_t(x->bound, slots);
    collect_slots_t(x->body, slots);
    return;
  }
  if (auto* x = std::get_if<TUnfold>(&m->node)) collect_slots_v(x->v, slots);
}

void collect_slots_v(const ValuePtr& v, std::vector<int>& slots) {
  if (auto* x = std::get_if<VHole>(&v->node)) {
    slots.push_back(x->index);
    return;
  }
  if (auto* x = std::get_if<VInj>(&v->node)) return collect_slots_v(x->payload, slots);
  if (auto* x = std::get_if<VLam>(&v->node)) return collect_slots_t(x->body, slots);
  if (auto* x = std::get_if<VFold>(&v->node)) return collect_slots_v(x->payload, slots);
}

ValuePtr renumber_v(const ValuePtr& v, int& next);

TermPtr renumber_t(const TermPtr& m, int& next) {
  if (auto* x = std::get_if<TVal>(&m->node)) return m_val(renumber_v(x->v, next));
  if (std::holds_alternative<TSample>(m->node)) return m;
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(renumber_v(a, next));
    return m_primc(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(renumber_v(a, next));
    return m_primb(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    ValuePtr s = renumber_v(x->scrutinee, next);
    std::vector<CaseBranch> brs;
    for (const auto& br : x->branches) brs.push_back({br.tag, br.var, renumber_t(br.body, next)});
    return m_case(std::move(s), std::move(brs));
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    ValuePtr f = renumber_v(x->fn, next);
    return m_app(std::move(f), renumber_v(x->arg, next));
  }
  if (auto* x = std::get_if<TLet>(&m->node)) {
    TermPtr b = renumber_t(x->bound, next);
    return m_let(x->var, std::move(b), renumber_t(x->body, next));
  }
  return m_unfold(renumber_v(std::get<TUnfold>(m->node).v, next));
}

ValuePtr renumber_v(const ValuePtr& v, int& next) {
  if (std::holds_alternative<VHole>(v->node)) return v_hole(++next);
  if (auto* x = std::get_if<VInj>(&v->node)) return v_inj(x->tag, renumber_v(x->payload, next), x->ann);
  if (auto* x = std::get_if<VLam>(&v->node)) return v_lam(x->var, x->ty, renumber_t(x->body, next));
  if (auto* x = std::get_if<VFold>(&v->node)) return v_fold(renumber_v(x->payload, next), x->ann);
  return v;
}

// relabels slot ids: hole with slot s becomes hole with slot map(s)
ValuePtr relabel_v(const ValuePtr& v, const std::function<int(int)>& map);

TermPtr relabel_t(const TermPtr& m, const std::function<int(int)>& map) {
  if (auto* x = std::get_if<TVal>(&m->node)) return m_val(relabel_v(x->v, map));
  if (std::holds_alternative<TSample>(m->node)) return m;
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(relabel_v(a, map));
    return m_primc(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(relabel_v(a, map));
    return m_primb(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    ValuePtr s = relabel_v(x->scrutinee, map);
    std::vector<CaseBranch> brs;
    for (const auto& br : x->branches) brs.push_back({br.tag, br.var, relabel_t(br.body, map)});
    return m_case(std::move(s), std::move(brs));
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    ValuePtr f = relabel_v(x->fn, map);
    return m_app(std::move(f), relabel_v(x->arg, map));
  }
  if (auto* x = std::get_if<TLet>(&m->node)) {
    TermPtr b = relabel_t(x->bound, map);
    return m_let(x->var, std::move(b), relabel_t(x->body, map));
  }
  return m_unfold(relabel_v(std::get<TUnfold>(m->node).v, map));
}

ValuePtr relabel_v(const ValuePtr& v, const std::function<int(int)>& map) {
  if (auto* x = std::get_if<VHole>(&v->node)) return v_hole(map(x->index));
  if (auto* x = std::get_if<VInj>(&v->node)) return v_inj(x->tag, relabel_v(x->payload, map), x->ann);
  if (auto* x = std::get_if<VLam>(&v->node)) return v_lam(x->var, x->ty, relabel_t(x->body, map));
  if (auto* x = std::get_if<VFold>(&v->node)) return v_fold(relabel_v(x->payload, map), x->ann);
  return v;
}

struct RawEntry {
  ValuePtr prevalue; // canonical holes
  KernelPtr kernel;  // R^{in_dim} to R^{holes(prevalue)}
  double weight;
};

// canonical prevalue plus the kernel selecting its hole slots from R^{in_dim}
RawEntry value_entry(const ValuePtr& v_slots, int in_dim) {
  std::vector<int> slots;
  collect_slots_v(v_slots, slots);
  std::vector<int> select;
  select.reserve(slots.size());
  for (int s : slots) select.push_back(s - 1);
  int next = 0;
  ValuePtr canon = renumber_v(v_slots, next);
  return {canon, k_reindex(std::move(select), in_dim), 1.0};
}

std::vector<RawEntry> mod_eval(const TermPtr& p, int in_dim, long fuel) {
  if (fuel <= 0) return {};
  if (auto* x = std::get_if<TVal>(&p->node)) return {value_entry(x->v, in_dim)};
  if (std::holds_alternative<TSample>(p->node)) {
    KernelPtr k = k_compose(k_lebesgue(), k_reindex({}, in_dim));
    return {{v_hole(1), std::move(k), 1.0}};
  }
  if (auto* x = std::get_if<TPrimC>(&p->node)) {
    // mirrors the sampler: one unit for the application, one for the result
    if (fuel < 2) return {};
    const PrimEntry* e = prim_lookup(x->name);
    if (!e || !e->continuous)
      throw std::runtime_error("modular semantics: primitive " + x->name +
                               " is outside the continuous fragment");
    std::vector<int> select;
    for (const auto& a : x->args) {
      auto* h = std::get_if<VHole>(&a->node);
      if (!h) throw std::runtime_error("modular semantics: primitive argument is not a hole");
      select.push_back(h->index - 1);
    }
    KernelPtr k = k_compose(k_prim(x->name), k_reindex(std::move(select), in_dim));
    return {{v_hole(1), std::move(k), 1.0}};
  }
  if (std::holds_alternative<TPrimB>(p->node))
    throw std::runtime_error("modular semantics: boolean tests are outside the continuous fragment");
  if (auto* x = std::get_if<TUnfold>(&p->node)) {
    auto* f = std::get_if<VFold>(&x->v->node);
    if (!f) throw std::runtime_error("modular semantics: unfold of a non-fold value");
    return mod_eval(m_val(f->payload), in_dim, fuel - 1);
  }
  if (auto* x = std::get_if<TApp>(&p->node)) {
    auto* lam = std::get_if<VLam>(&x->fn->node);
    if (!lam) throw std::runtime_error("modular semantics: application of a non-function");
    TermPtr s = substitute(lam->body, lam->var, x->arg);
    return mod_eval(s, in_dim, fuel - 1);
  }
  if (auto* x = std::get_if<TCase>(&p->node)) {
    auto* inj = std::get_if<VInj>(&x->scrutinee->node);
    if (!inj) throw std::runtime_error("modular semantics: case on a non-injection");
    const CaseBranch* hit = nullptr;
    for (const auto& br : x->branches)
      if (br.tag == inj->tag) hit = &br;
    if (!hit) throw std::runtime_error("modular semantics: no branch for tag " + inj->tag);
    TermPtr s = substitute(hit->body, hit->var, inj->payload);
    return mod_eval(s, in_dim, fuel - 1);
  }
  const auto& let = std::get<TLet>(p->node);
  std::vector<RawEntry> out;
  std::vector<RawEntry> first = mod_eval(let.bound, in_dim, fuel - 1);
  for (const auto& e1 : first) {
    int l1 = kernel_out_dim(e1.kernel);
    // extended space: the l1 outputs of e1 followed by a copy of the input
    std::vector<int> dup;
    dup.reserve(2 * in_dim);
    // build Product(e1.kernel, Identity(in_dim)) over a duplicated input
    std::vector<int> dup_select;
    for (int j = 0; j < in_dim; ++j) dup_select.push_back(j);
    for (int j = 0; j < in_dim; ++j) dup_select.push_back(j);
    KernelPtr ext = k_compose(k_product(e1.kernel, k_identity(in_dim)),
                              k_reindex(std::move(dup_select), in_dim));
    // plug: e1's prevalue with hole j referring to ext output j
    ValuePtr plug = e1.prevalue; // canonical holes 1..l1 already match ext outputs
    TermPtr body = relabel_t(let.body, [&](int s) { return l1 + s; });
    TermPtr s = substitute(body, let.var, plug);
    for (const auto& e2 : mod_eval(s, l1 + in_dim, fuel - 1)) {
      out.push_back({e2.prevalue, k_compose(e2.kernel, ext), e1.weight * e2.weight});
    }
  }
  return out;
}

} // namespace

double ModularDistribution::mass() const {
  double s = 0;
  for (const auto& e : entries) s += e.weight;
  return s;
}

ModularDistribution modular_eval(const PreTerm& pre, long fuel) {
  if (count_holes(pre.skeleton) != pre.hole_count)
    throw std::runtime_error("modular_eval: inconsistent hole count");
  ModularDistribution out;
  out.pre = pre;
  out.fuel = fuel;
  std::map<std::pair<std::string, std::string>, ModularEntry> merged;
  for (auto& e : mod_eval(pre.skeleton, pre.hole_count, fuel)) {
    auto key = std::make_pair(print_value(e.prevalue), kernel_signature(e.kernel));
    auto it = merged.find(key);
    if (it == merged.end())
      merged.emplace(key, ModularEntry{e.prevalue, e.kernel, e.weight});
    else
      it->second.weight += e.weight;
  }
  for (auto& [k, e] : merged) out.entries.push_back(std::move(e));
  if (out.mass() > 1.0 + 1e-12)
    throw std::runtime_error("modular_eval: total weight exceeds one");
  return out;
}

EmpiricalMeasure modular_reconstruct(const ModularDistribution& dist,
                                     const std::vector<double>& reals, size_t samples,
                                     uint64_t seed, uint64_t stream) {
  if ((int)reals.size() != dist.pre.hole_count)
    throw std::runtime_error("modular_reconstruct: wrong number of reals");
  EmpiricalMeasure out;
  out.seed = seed;
  out.samples = samples;
  out.fuel = dist.fuel;
  TermPtr filled = fill(dist.pre, reals);
  out.type = typecheck({}, filled, LanguageMode::Continuous);

  std::vector<double> cum;
  double acc = 0;
  for (const auto& e : dist.entries) {
    acc += e.weight;
    cum.push_back(acc);
  }
  RngStream base(seed, stream);
  for (size_t i = 0; i < samples; ++i) {
    RngStream s = base.split(i);
    double u = s.uniform();
    size_t idx = cum.size();
    for (size_t j = 0; j < cum.size(); ++j)
      if (u < cum[j]) {
        idx = j;
        break;
      }
    if (idx == cum.size()) continue; // missing mass: divergence
    const ModularEntry& e = dist.entries[idx];
    std::vector<double> outs = kernel_sample(e.kernel, reals, s);
    out.converged.push_back(fill_value(e.prevalue, outs));
  }
  return out;
}

DiscreteMeasure modular_exact_grid(const ModularDistribution& dist,
                                   const std::vector<double>& reals, int grid_points,
                                   int max_draws) {
  if ((int)reals.size() != dist.pre.hole_count)
    throw std::runtime_error("modular_exact_grid: wrong number of reals");
  std::map<std::string, WeightedValue> acc;
  for (const auto& e : dist.entries) {
    int d = kernel_draw_count(e.kernel);
    if (d > max_draws)
      throw std::runtime_error("modular_exact_grid: kernel exceeds the draw bound");
    long cells = 1;
    for (int i = 0; i < d; ++i) cells *= grid_points;
    std::vector<double> draws(d);
    for (long c = 0; c < cells; ++c) {
      long t = c;
      for (int i = 0; i < d; ++i) {
        draws[i] = ((t % grid_points) + 0.5) / grid_points;
        t /= grid_points;
      }
      size_t pos = 0;
      std::vector<double> outs = kernel_apply_draws(e.kernel, reals, draws, pos);
      ValuePtr v = fill_value(e.prevalue, outs);
      std::string key = print_value(v);
      double w = e.weight / (double)cells;
      auto it = acc.find(key);
      if (it == acc.end())
        acc.emplace(key, WeightedValue{v, w});
      else
        it->second.weight += w;
    }
  }
  DiscreteMeasure out;
  for (auto& [k, wv] : acc) out.atoms.push_back(std::move(wv));
  return out;
}

Json modular_report(const ModularDistribution& dist) {
  Json j;
  j["pre_term"] = print_term(dist.pre.skeleton);
  j["hole_count"] = dist.pre.hole_count;
  j["fuel"] = dist.fuel;
  j["mass"] = dist.mass();
  Json entries = Json::array();
  for (const auto& e : dist.entries)
    entries.push_back(Json{{"prevalue", print_value(e.prevalue)},
                           {"kernel", kernel_signature(e.kernel)},
                           {"draws", kernel_draw_count(e.kernel)},
                           {"weight", e.weight}});
  j["entries"] = entries;
  return j;
}

} // namespace lmplambda
