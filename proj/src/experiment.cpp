#include "deflab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace deflab {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& item : j.items())
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      bad("unknown key '" + item.key() + "' in " + where);
}

double num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad(where + "." + key + " is required");
  if (!j.at(key).is_number()) bad(where + "." + key + " must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) bad(where + "." + key + " must be finite");
  return v;
}

double num(const json& j, const char* key, const std::string& where, double def) {
  return j.contains(key) ? num(j, key, where) : def;
}

std::optional<double> opt_num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return num(j, key, where);
}

long long integer(const json& j, const char* key, const std::string& where, long long def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number_integer()) bad(where + "." + key + " must be an integer");
  return j.at(key).get<long long>();
}

int small_int(const json& j, const char* key, const std::string& where, int def, int lo) {
  const long long v = integer(j, key, where, def);
  if (v < lo || v > 1'000'000'000) bad(where + "." + key + " must be >= " + std::to_string(lo));
  return static_cast<int>(v);
}

Point point(const json& j, const std::string& where, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    bad(where + " must be an array of " + std::to_string(dim) + " numbers");
  Point p(dim);
  for (int i = 0; i < dim; ++i) {
    if (!j[i].is_number() || !std::isfinite(j[i].get<double>())) bad(where + " must contain finite numbers");
    p[i] = j[i].get<double>();
  }
  return p;
}

std::vector<int> resolution(const json& j, const char* key, const std::string& where, std::vector<int> def, int dim,
                            int lo) {
  if (!j.contains(key)) return def;
  const json& r = j.at(key);
  std::vector<int> out;
  if (r.is_number_integer()) out = {r.get<int>()};
  else if (r.is_array()) {
    for (const auto& v : r) {
      if (!v.is_number_integer()) bad(where + "." + key + " must hold integers");
      out.push_back(v.get<int>());
    }
  } else {
    bad(where + "." + key + " must be an integer or an array");
  }
  if (out.size() != 1 && static_cast<int>(out.size()) != dim)
    bad(where + "." + key + " needs one entry or one per axis");
  for (int v : out)
    if (v < lo || v > 100'000) bad(where + "." + key + " entries must be >= " + std::to_string(lo));
  return out;
}

json to_json(const Point& p) {
  json a = json::array();
  for (int i = 0; i < p.dim(); ++i) a.push_back(p[i]);
  return a;
}

json to_json(const RegionSpec& spec) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmptyD>) {
          return {{"type", "empty"}};
        } else if constexpr (std::is_same_v<T, LevelSetD>) {
          json j{{"type", "level_set"}, {"value", d.value}};
          if (d.thickness) j["thickness"] = *d.thickness;
          return j;
        } else {
          json pts = json::array();
          for (const auto& p : d.points) pts.push_back(to_json(p));
          return {{"type", "point_cloud"}, {"points", pts}};
        }
      },
      spec);
}

RegionSpec parse_region(const json& j, int dim) {
  const std::string where = "deformation.d_spec";
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) bad(where + ".type is required");
  const auto type = j.at("type").get<std::string>();
  if (type == "empty") {
    check_keys(j, {"type"}, where);
    return EmptyD{};
  }
  if (type == "level_set") {
    check_keys(j, {"type", "value", "thickness"}, where);
    return LevelSetD{num(j, "value", where), opt_num(j, "thickness", where)};
  }
  if (type == "point_cloud") {
    check_keys(j, {"type", "points"}, where);
    if (!j.contains("points") || !j.at("points").is_array() || j.at("points").empty())
      bad(where + ".points must be a non-empty array");
    PointCloudD d;
    for (const auto& p : j.at("points")) d.points.push_back(point(p, where + ".points[]", dim));
    return d;
  }
  bad(where + ".type must be empty, level_set or point_cloud");
}

FunctionalSpec parse_functional(const json& j) {
  const std::string where = "functional";
  if (!j.is_object()) bad("functional must be an object");
  if (j.contains("poly")) {
    check_keys(j, {"poly"}, where);
    const json& p = j.at("poly");
    check_keys(p, {"dim", "terms"}, "functional.poly");
    PolySpec spec;
    spec.dim = small_int(p, "dim", "functional.poly", 0, 1);
    if (spec.dim > kMaxDim) bad("functional.poly.dim must be 1..3");
    if (!p.contains("terms") || !p.at("terms").is_array()) bad("functional.poly.terms must be an array");
    for (const auto& t : p.at("terms")) {
      check_keys(t, {"exps", "coef"}, "functional.poly.terms[]");
      PolyTerm term;
      if (!t.contains("exps") || !t.at("exps").is_array() || static_cast<int>(t.at("exps").size()) != spec.dim)
        bad("functional.poly.terms[].exps needs one exponent per axis");
      for (int i = 0; i < spec.dim; ++i) {
        if (!t.at("exps")[i].is_number_integer() || t.at("exps")[i].get<int>() < 0)
          bad("functional.poly.terms[].exps must be non-negative integers");
        term.exps[i] = t.at("exps")[i].get<int>();
      }
      term.coef = num(t, "coef", "functional.poly.terms[]");
      spec.terms.push_back(term);
    }
    return spec;
  }
  check_keys(j, {"catalog", "dim", "a", "b"}, where);
  if (!j.contains("catalog") || !j.at("catalog").is_string()) bad("functional needs 'catalog' or 'poly'");
  const auto entry = catalog_from_name(j.at("catalog").get<std::string>());
  if (!entry) bad("unknown catalog entry '" + j.at("catalog").get<std::string>() + "'");
  CatalogSpec spec;
  spec.entry = *entry;
  int dim_default = 2;
  if (j.contains("a") && j.at("a").is_array()) dim_default = static_cast<int>(j.at("a").size());
  spec.dim = small_int(j, "dim", where, dim_default, 1);
  if (spec.dim > kMaxDim) bad("functional.dim must be 1..3");
  if (spec.entry == Catalog::Affine) {
    if (j.contains("a")) spec.a = point(j.at("a"), "functional.a", spec.dim);
    spec.b = num(j, "b", where, 0.0);
  } else if (j.contains("a") || j.contains("b")) {
    bad("functional.a and functional.b apply to the affine entry only");
  }
  return spec;
}

json functional_json(const FunctionalSpec& spec) {
  if (const auto* c = std::get_if<CatalogSpec>(&spec)) {
    json j{{"catalog", std::string(catalog_name(c->entry))}, {"dim", c->dim}};
    if (c->entry == Catalog::Affine) {
      if (c->a) j["a"] = to_json(*c->a);
      j["b"] = c->b;
    }
    return j;
  }
  const auto& p = std::get<PolySpec>(spec);
  json terms = json::array();
  for (const auto& t : p.terms) terms.push_back({{"exps", std::vector<int>(t.exps.begin(), t.exps.begin() + p.dim)},
                                                 {"coef", t.coef}});
  return {{"poly", {{"dim", p.dim}, {"terms", terms}}}};
}

std::vector<int> default_oracle_resolution(int dim) {
  switch (dim) {
    case 1: return {1025};
    case 2: return {257};
    default: return {33};
  }
}

ExperimentConfig parse_json(const json& j) {
  check_keys(j, {"functional", "box", "deformation", "minimax", "oracle", "ps", "geometry", "proof", "seed", "workers"},
             "config");
  ExperimentConfig cfg;
  if (!j.contains("functional")) bad("config.functional is required");
  cfg.functional = parse_functional(j.at("functional"));
  const int dim = spec_dim(cfg.functional);

  if (j.contains("box")) {
    check_keys(j.at("box"), {"lo", "hi"}, "box");
    if (!j.at("box").contains("lo") || !j.at("box").contains("hi")) bad("box needs lo and hi");
    cfg.box = DomainBox(point(j.at("box").at("lo"), "box.lo", dim), point(j.at("box").at("hi"), "box.hi", dim));
  } else {
    cfg.box = default_box(cfg.functional);
  }
  // Surfaces invalid functionals (degree, dimension) at parse time.
  const ScalarField field = make_field(cfg.functional, cfg.box);

  cfg.seed = static_cast<std::uint64_t>(integer(j, "seed", "config", 0));
  if (j.contains("seed") && j.at("seed").is_number_integer() && j.at("seed").get<long long>() < 0 &&
      !j.at("seed").is_number_unsigned())
    bad("config.seed must be non-negative");
  cfg.workers = small_int(j, "workers", "config", 0, 0);

  if (j.contains("deformation")) {
    const json& d = j.at("deformation");
    const std::string w = "deformation";
    check_keys(d, {"c", "eps", "d_spec", "backend", "step", "samples", "record_every", "dump_trajectories", "claim_tol"},
               w);
    DeformationConfig dc;
    dc.c = num(d, "c", w);
    dc.eps = num(d, "eps", w);
    if (d.contains("d_spec")) dc.d_spec = parse_region(d.at("d_spec"), dim);
    dc.backend.kind = field.affine() ? BackendKind::ExactAffine : BackendKind::Sampled;
    if (d.contains("backend")) {
      const json& b = d.at("backend");
      check_keys(b, {"type", "resolution"}, "deformation.backend");
      if (b.contains("type")) {
        const auto t = b.at("type").is_string() ? b.at("type").get<std::string>() : std::string();
        if (t == "exact_affine") dc.backend.kind = BackendKind::ExactAffine;
        else if (t == "sampled") dc.backend.kind = BackendKind::Sampled;
        else bad("deformation.backend.type must be exact_affine or sampled");
      }
      dc.backend.resolution = resolution(b, "resolution", "deformation.backend", dc.backend.resolution, dim, 2);
    }
    dc.step = opt_num(d, "step", w);
    dc.samples = small_int(d, "samples", w, dc.samples, 1);
    dc.record_every = small_int(d, "record_every", w, dc.record_every, 1);
    dc.dump_trajectories = small_int(d, "dump_trajectories", w, dc.dump_trajectories, 0);
    dc.claim_tol = num(d, "claim_tol", w, dc.claim_tol);
    if (!(dc.eps > 0.0)) bad("deformation.eps must be > 0");
    if (dc.step && !(*dc.step > 0.0)) bad("deformation.step must be > 0");
    if (dc.step && *dc.step > 2.0 * dc.eps) bad("deformation.step must not exceed the horizon 2 eps");
    if (!(dc.claim_tol > 0.0)) bad("deformation.claim_tol must be > 0");
    if (dc.backend.kind == BackendKind::ExactAffine && !field.affine())
      bad("deformation.backend exact_affine needs an affine functional");
    cfg.deformation = dc;
  }

  if (j.contains("minimax")) {
    const json& m = j.at("minimax");
    const std::string w = "minimax";
    check_keys(m, {"pin_zero", "pin_e", "pin_mode", "M", "ensemble_size", "max_iters", "tol", "jitter_scale", "eps",
                   "radius"},
               w);
    MinimaxConfig mc;
    mc.pin_zero = m.contains("pin_zero") ? point(m.at("pin_zero"), "minimax.pin_zero", dim) : Point(dim);
    if (!m.contains("pin_e")) bad("minimax.pin_e is required");
    mc.pin_e = point(m.at("pin_e"), "minimax.pin_e", dim);
    if (m.contains("pin_mode")) {
      const auto pm = m.at("pin_mode").is_string() ? m.at("pin_mode").get<std::string>() : std::string();
      if (pm == "interior") mc.pin_mode = PinMode::Interior;
      else if (pm == "endpoints") mc.pin_mode = PinMode::Endpoints;
      else bad("minimax.pin_mode must be interior or endpoints");
    }
    mc.m = small_int(m, "M", w, mc.m, 8);
    if (mc.m % 4 != 0) bad("minimax.M must be a multiple of 4");
    mc.ensemble_size = small_int(m, "ensemble_size", w, mc.ensemble_size, 1);
    mc.max_iters = small_int(m, "max_iters", w, mc.max_iters, 1);
    mc.tol = num(m, "tol", w, mc.tol);
    mc.jitter_scale = num(m, "jitter_scale", w, mc.jitter_scale);
    mc.eps = num(m, "eps", w, mc.eps);
    mc.radius = opt_num(m, "radius", w);
    if (!(mc.tol > 0.0)) bad("minimax.tol must be > 0");
    if (!(mc.jitter_scale >= 0.0)) bad("minimax.jitter_scale must be >= 0");
    if (!(mc.eps > 0.0)) bad("minimax.eps must be > 0");
    if (mc.radius && !(*mc.radius > 0.0)) bad("minimax.radius must be > 0");
    cfg.minimax = mc;
  }

  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    const std::string w = "oracle";
    check_keys(o, {"resolution", "connectivity", "grad_tol"}, w);
    OracleConfig oc;
    oc.resolution = resolution(o, "resolution", w, default_oracle_resolution(dim), dim, 3);
    if (o.contains("connectivity")) {
      const int n = small_int(o, "connectivity", w, 0, 1);
      const bool ok = (dim == 1 && n == 2) || (dim == 2 && (n == 4 || n == 8)) || (dim == 3 && (n == 6 || n == 26));
      if (!ok) bad("oracle.connectivity must be 2 (1-D), 4 or 8 (2-D), 6 or 26 (3-D)");
      oc.connectivity = n;
    }
    oc.grad_tol = num(o, "grad_tol", w, oc.grad_tol);
    if (!(oc.grad_tol > 0.0)) bad("oracle.grad_tol must be > 0");
    cfg.oracle = oc;
  }

  if (j.contains("ps")) {
    const json& p = j.at("ps");
    const std::string w = "ps";
    check_keys(p, {"level", "band_halfwidth", "samples", "grad_tol", "max_iters", "resolution"}, w);
    PsConfig pc;
    pc.level = num(p, "level", w);
    pc.band_halfwidth = num(p, "band_halfwidth", w, pc.band_halfwidth);
    pc.samples = small_int(p, "samples", w, pc.samples, 1);
    pc.grad_tol = num(p, "grad_tol", w, pc.grad_tol);
    pc.max_iters = small_int(p, "max_iters", w, pc.max_iters, 1);
    pc.resolution = resolution(p, "resolution", w, pc.resolution, dim, 2);
    if (!(pc.band_halfwidth > 0.0)) bad("ps.band_halfwidth must be > 0");
    if (!(pc.grad_tol > 0.0)) bad("ps.grad_tol must be > 0");
    cfg.ps = pc;
  }

  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    check_keys(g, {"r", "sphere_samples"}, "geometry");
    GeometryConfig gc;
    gc.r = num(g, "r", "geometry");
    gc.sphere_samples = small_int(g, "sphere_samples", "geometry", gc.sphere_samples, 1);
    if (!(gc.r > 0.0)) bad("geometry.r must be > 0");
    cfg.geometry = gc;
  }

  if (j.contains("proof")) {
    const json& p = j.at("proof");
    const std::string w = "proof";
    check_keys(p, {"c1", "c2", "eps", "flow_steps", "resolution", "ensemble_size"}, w);
    ProofConfig pc;
    pc.c1 = opt_num(p, "c1", w);
    pc.c2 = opt_num(p, "c2", w);
    pc.eps = num(p, "eps", w, pc.eps);
    pc.flow_steps = small_int(p, "flow_steps", w, pc.flow_steps, 1);
    pc.resolution = resolution(p, "resolution", w, pc.resolution, dim, 2);
    pc.ensemble_size = small_int(p, "ensemble_size", w, pc.ensemble_size, 1);
    if (!(pc.eps > 0.0)) bad("proof.eps must be > 0");
    if (pc.c1 && pc.c2 && *pc.c1 == *pc.c2) bad("proof.c1 and proof.c2 must differ");
    cfg.proof = pc;
  }
  return cfg;
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["functional"] = functional_json(cfg.functional);
  j["box"] = {{"lo", to_json(cfg.box.lo())}, {"hi", to_json(cfg.box.hi())}};
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  if (const auto& d = cfg.deformation) {
    json dj{{"c", d->c},
            {"eps", d->eps},
            {"d_spec", to_json(d->d_spec)},
            {"backend",
             {{"type", d->backend.kind == BackendKind::ExactAffine ? "exact_affine" : "sampled"},
              {"resolution", d->backend.resolution}}},
            {"samples", d->samples},
            {"record_every", d->record_every},
            {"dump_trajectories", d->dump_trajectories},
            {"claim_tol", d->claim_tol}};
    dj["step"] = d->step ? json(*d->step) : json(nullptr);
    j["deformation"] = dj;
  }
  if (const auto& m = cfg.minimax) {
    json mj{{"pin_zero", to_json(m->pin_zero)},
            {"pin_e", to_json(m->pin_e)},
            {"pin_mode", m->pin_mode == PinMode::Interior ? "interior" : "endpoints"},
            {"M", m->m},
            {"ensemble_size", m->ensemble_size},
            {"max_iters", m->max_iters},
            {"tol", m->tol},
            {"jitter_scale", m->jitter_scale},
            {"eps", m->eps}};
    mj["radius"] = m->radius ? json(*m->radius) : json(nullptr);
    j["minimax"] = mj;
  }
  if (const auto& o = cfg.oracle) {
    j["oracle"] = {{"resolution", o->resolution}, {"grad_tol", o->grad_tol}};
    if (o->connectivity) j["oracle"]["connectivity"] = *o->connectivity;
  }
  if (const auto& p = cfg.ps)
    j["ps"] = {{"level", p->level},         {"band_halfwidth", p->band_halfwidth}, {"samples", p->samples},
               {"grad_tol", p->grad_tol},   {"max_iters", p->max_iters},           {"resolution", p->resolution}};
  if (const auto& g = cfg.geometry) j["geometry"] = {{"r", g->r}, {"sphere_samples", g->sphere_samples}};
  if (const auto& p = cfg.proof) {
    json pj{{"eps", p->eps}, {"flow_steps", p->flow_steps}, {"resolution", p->resolution},
            {"ensemble_size", p->ensemble_size}};
    pj["c1"] = p->c1 ? json(*p->c1) : json(nullptr);
    pj["c2"] = p->c2 ? json(*p->c2) : json(nullptr);
    j["proof"] = pj;
  }
  return j;
}

// ---------------------------------------------------------------------------

struct Checks {
  json list = json::array();
  bool passed = true;
  void add(const std::string& name, bool ok, bool invariant = true) {
    list.push_back({{"name", name}, {"passed", ok}, {"invariant", invariant}});
    if (invariant && !ok) passed = false;
  }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

template <typename Fn>
void write_csv(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  fn(os);
}

MountainPassInstance make_instance(const ExperimentConfig& cfg, const ScalarField& field) {
  const auto& m = *cfg.minimax;
  std::optional<double> r = m.radius;
  if (cfg.geometry) r = cfg.geometry->r;
  return {field, m.pin_zero, m.pin_e, m.pin_mode, r};
}

MinimaxOptions minimax_options(const ExperimentConfig& cfg) {
  const auto& m = *cfg.minimax;
  MinimaxOptions o;
  o.ensemble_size = m.ensemble_size;
  o.m = m.m;
  o.max_iters = m.max_iters;
  o.tol = m.tol;
  o.seed = cfg.seed;
  o.jitter_scale = m.jitter_scale;
  o.workers = cfg.workers;
  return o;
}

Connectivity oracle_connectivity(const ExperimentConfig& cfg, int dim) {
  if (cfg.oracle && cfg.oracle->connectivity) {
    const int n = *cfg.oracle->connectivity;
    return (n == 8 || n == 26) ? Connectivity::Full : Connectivity::Axis;
  }
  return default_connectivity(dim);
}

int neighbour_count(Connectivity c, int dim) {
  if (dim == 1) return 2;
  if (dim == 2) return c == Connectivity::Full ? 8 : 4;
  return c == Connectivity::Full ? 26 : 6;
}

json path_json(const DiscretePath& p) {
  json nodes = json::array();
  for (const auto& n : p.nodes) nodes.push_back(to_json(n));
  return {{"m", p.m}, {"nodes", nodes}};
}

json minimax_json(const MinimaxResult& r) {
  return {{"value", r.value},         {"witness_path", path_json(r.witness_path)},
          {"witness_point", to_json(r.witness_point)}, {"iterations", r.iterations},
          {"converged", r.converged}, {"history", r.history}};
}

json check_json(const ConclusionCheck& c) {
  json j{{"holds", c.holds}, {"lhs", c.lhs}};
  j["lower"] = c.lower ? json(*c.lower) : json(nullptr);
  j["upper"] = c.upper ? json(*c.upper) : json(nullptr);
  return j;
}

json oracle_json(const OracleResult& r) {
  return {{"value", r.value}, {"witness", r.witness}, {"method", r.method}};
}

json band_record(const BandClaimRecord& r, bool b) {
  if (b)
    return {{"sampled_B", r.sampled},
            {"confined_in_B", r.confined},
            {"confined_satisfying", r.confined_satisfying},
            {"unconditional_fraction_reaching_c_plus_eps", r.unconditional_fraction}};
  return {{"sampled_C", r.sampled},
          {"confined_in_C", r.confined},
          {"confined_satisfying", r.confined_satisfying},
          {"unconditional_fraction_reaching_c_minus_eps", r.unconditional_fraction}};
}

template <typename T>
bool monotone(const std::vector<T>& h, bool nonincreasing) {
  for (std::size_t i = 1; i < h.size(); ++i)
    if (nonincreasing ? h[i] > h[i - 1] : h[i] < h[i - 1]) return false;
  return true;
}

std::string csv_name(const char* stem, std::size_t k) {
  std::ostringstream os;
  os << stem << '_' << std::setw(3) << std::setfill('0') << k << ".csv";
  return os.str();
}

json run_deform(const ExperimentConfig& cfg, const ScalarField& field, const std::filesystem::path& out, Checks& checks) {
  const auto& d = *cfg.deformation;
  const BandPartition part(field, {d.c, d.eps}, d.d_spec);
  const DistanceBackend backend = d.backend.kind == BackendKind::ExactAffine
                                      ? DistanceBackend::exact_affine(part)
                                      : DistanceBackend::sampled(part, d.backend.resolution);
  const DeformationField df(part, backend);
  FlowConfig fc{d.step.value_or(2.0 * d.eps / 1000.0), 2.0 * d.eps, d.record_every};
  fc.validate();

  VerifyOptions vo;
  vo.samples = d.samples;
  vo.seed = cfg.seed;
  vo.claim_tol = d.claim_tol;
  vo.workers = cfg.workers;
  vo.keep_trajectories = d.dump_trajectories;
  const auto run = verify_deformation(df, fc, vo);
  const auto& rep = run.report;

  json artifacts = json::array();
  write_csv(out / "regions.csv", [&](std::ostream& os) { write_region_csv(os, part, d.backend.resolution, &backend); });
  artifacts.push_back("regions.csv");
  for (std::size_t k = 0; k < run.kept.size(); ++k) {
    const auto name = csv_name("trajectory", k);
    write_csv(out / name, [&](std::ostream& os) { write_trajectory_csv(os, run.kept[k]); });
    artifacts.push_back(name);
  }

  checks.add("a_prime_identity", rep.a_prime_violations == 0);
  checks.add("b_prime_conditional", rep.b_prime.confined_satisfying == rep.b_prime.confined);
  checks.add("c_prime_conditional", rep.c_prime.confined_satisfying == rep.c_prime.confined);
  checks.add("speed_bound", rep.speed_bound_violations == 0);
  if (backend.exact()) checks.add("flow_identity_residual_within_100_step", rep.eq31_max_residual <= 100.0 * fc.step);

  return {{"report",
           {{"hypothesis_min_grad", rep.hypothesis_min_grad},
            {"a_prime_violations", rep.a_prime_violations},
            {"b_prime", band_record(rep.b_prime, true)},
            {"c_prime", band_record(rep.c_prime, false)},
            {"eq31_max_residual", rep.eq31_max_residual}}},
          {"diagnostics",
           {{"clamped_trajectories", rep.clamped_trajectories},
            {"speed_bound_violations", rep.speed_bound_violations},
            {"step", fc.step},
            {"horizon", fc.horizon},
            {"backend", backend.exact() ? "exact_affine" : "sampled"},
            {"cell_diagonal", backend.cell_diagonal()}}},
          {"artifacts", artifacts}};
}

json run_minimax(const ExperimentConfig& cfg, const ScalarField& field, const std::filesystem::path& out,
                 Checks& checks) {
  const auto inst = make_instance(cfg, field);
  const auto opts = minimax_options(cfg);
  const auto c1 = optimize_c1(inst, opts);
  const auto c2 = optimize_c2(inst, opts);
  const auto cc = check_conclusions(inst, c1, c2, cfg.minimax->eps);

  OracleConfig oc;
  oc.resolution = default_oracle_resolution(field.dim());
  if (cfg.oracle) oc = *cfg.oracle;
  const Connectivity conn = oracle_connectivity(cfg, field.dim());
  const GridGraph grid(field, field.box(), oc.resolution, conn, cfg.workers);
  const auto p = grid.nearest_node(inst.pin_zero), q = grid.nearest_node(inst.pin_e);
  const auto bott = bottleneck_value(grid, p, q);
  const auto wide = widest_value(grid, p, q);
  double cell = 0.0;
  for (int i = 0; i < grid.dim(); ++i) cell += grid.spacing(i) * grid.spacing(i);
  cell = std::sqrt(cell);
  auto slack_of = [&](const OracleResult& r) {
    double lip = 0.0;
    for (auto n : r.witness) lip = std::max(lip, norm(field.gradient(grid.position(n))));
    return lip * cell;
  };
  const double slack_b = slack_of(bott), slack_w = slack_of(wide);
  const double band_grad = level_set_min_grad(field, field.box(), c2.value, oc.resolution);

  write_csv(out / "path_c1.csv", [&](std::ostream& os) { write_path_csv(os, inst, c1.witness_path); });
  write_csv(out / "path_c2.csv", [&](std::ostream& os) { write_path_csv(os, inst, c2.witness_path); });

  const double p0 = field.evaluate(inst.pin_zero), pe = field.evaluate(inst.pin_e);
  checks.add("c2_history_nonincreasing", monotone(c2.history, true));
  checks.add("c1_history_nondecreasing", monotone(c1.history, false));
  checks.add("c2_at_least_pin_max", c2.value >= std::max(p0, pe) - 1e-12);
  checks.add("c1_at_most_pin_min", c1.value <= std::min(p0, pe) + 1e-12);
  checks.add("c2_oracle_sandwich", c2.value >= bott.value - slack_b);
  checks.add("c1_oracle_sandwich", c1.value <= wide.value + slack_w);
  checks.add("witness_points_on_paths",
             c1.witness_path.nodes[c1.witness_index] == c1.witness_point &&
                 c2.witness_path.nodes[c2.witness_index] == c2.witness_point);
  checks.add("c2_within_0.03_of_oracle", std::abs(c2.value - bott.value) <= 0.03, false);
  checks.add("c1_within_0.03_of_oracle", std::abs(c1.value - wide.value) <= 0.03, false);

  return {{"c1", minimax_json(c1)},
          {"c2", minimax_json(c2)},
          {"conclusions",
           {{"eps", cc.eps}, {"I", check_json(cc.i)}, {"II", check_json(cc.ii)}, {"III", check_json(cc.iii)},
            {"IV", check_json(cc.iv)}}},
          {"band_min_grad_c2", band_grad},
          {"oracle",
           {{"resolution", oc.resolution},
            {"connectivity", neighbour_count(conn, field.dim())},
            {"bottleneck", oracle_json(bott)},
            {"widest", oracle_json(wide)},
            {"bottleneck_slack", slack_b},
            {"widest_slack", slack_w}}},
          {"artifacts", {"path_c1.csv", "path_c2.csv"}}};
}

json run_oracle(const ExperimentConfig& cfg, const ScalarField& field, const std::filesystem::path& out,
                Checks& checks) {
  const auto inst = make_instance(cfg, field);
  const OracleConfig& oc = *cfg.oracle;
  const Connectivity conn = oracle_connectivity(cfg, field.dim());
  const GridGraph grid(field, field.box(), oc.resolution, conn, cfg.workers);
  const auto p = grid.nearest_node(inst.pin_zero), q = grid.nearest_node(inst.pin_e);
  const auto bott = bottleneck_value(grid, p, q);
  const auto wide = widest_value(grid, p, q);
  const auto crit = critical_scan(field, field.box(), oc.resolution, oc.grad_tol);

  write_csv(out / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, grid); });

  checks.add("bottleneck_at_least_terminals", bott.value >= std::max(grid.value(p), grid.value(q)));
  checks.add("widest_at_most_terminals", wide.value <= std::min(grid.value(p), grid.value(q)));
  checks.add("bottleneck_symmetric", bottleneck_value(grid, q, p).value == bott.value);
  checks.add("widest_symmetric", widest_value(grid, q, p).value == wide.value);

  json clusters = json::array();
  for (const auto& c : crit)
    clusters.push_back({{"center", to_json(c.center)}, {"min_grad", c.min_grad}, {"phi", c.phi}, {"size", c.size}});
  return {{"resolution", oc.resolution},
          {"connectivity", neighbour_count(conn, field.dim())},
          {"terminals", {p, q}},
          {"bottleneck", oracle_json(bott)},
          {"widest", oracle_json(wide)},
          {"critical_points", clusters},
          {"artifacts", {"grid.csv"}}};
}

json run_pscheck(const ExperimentConfig& cfg, const ScalarField& field, Checks& checks) {
  const auto& pc = *cfg.ps;
  MountainPassInstance inst{field, Point(field.dim()), field.box().hi(), PinMode::Interior, std::nullopt};
  if (cfg.minimax) inst = make_instance(cfg, field);
  PsOptions o;
  o.band_halfwidth = pc.band_halfwidth;
  o.samples = pc.samples;
  o.grad_tol = pc.grad_tol;
  o.max_iters = pc.max_iters;
  o.resolution = pc.resolution;
  o.seed = cfg.seed;
  o.workers = cfg.workers;
  const auto rep = ps_probe(inst, pc.level, o);

  json acc = json::array();
  for (const auto& p : rep.accumulation_points) acc.push_back(to_json(p));
  json seq = json::array();
  std::vector<double> grads, dists;
  for (const auto& s : rep.sample_sequence) {
    seq.push_back({{"point", to_json(s.point)}, {"phi", s.phi}, {"grad_norm", s.grad_norm}});
    grads.push_back(s.grad_norm);
    if (!rep.sample_sequence.empty()) dists.push_back(distance(s.point, rep.sample_sequence.front().point));
  }
  if (rep.verdict == PsVerdict::Consistent) checks.add("consistent_has_clusters", !acc.empty());
  if (rep.verdict == PsVerdict::EscapingTrend)
    checks.add("escaping_sequence_monotone", monotone(grads, true) && monotone(dists, false));

  return {{"ps",
           {{"level", rep.level},
            {"verdict", std::string(to_string(rep.verdict))},
            {"accumulation_points", acc},
            {"sample_sequence", seq},
            {"band_min_grad", rep.band_min_grad}}}};
}

json run_proof(const ExperimentConfig& cfg, const ScalarField& field, Checks& checks) {
  const auto inst = make_instance(cfg, field);
  const auto& pc = *cfg.proof;
  std::string source = "config";
  double c1 = 0.0, c2 = 0.0;
  if (pc.c1 && pc.c2) {
    c1 = *pc.c1;
    c2 = *pc.c2;
  } else {
    source = "optimizer";
    const auto opts = minimax_options(cfg);
    c1 = pc.c1 ? *pc.c1 : optimize_c1(inst, opts).value;
    c2 = pc.c2 ? *pc.c2 : optimize_c2(inst, opts).value;
  }
  TraceOptions to;
  to.flow_steps = pc.flow_steps;
  to.resolution = pc.resolution;
  to.ensemble_size = pc.ensemble_size;
  to.m = cfg.minimax->m;
  to.jitter_scale = cfg.minimax->jitter_scale;
  to.seed = cfg.seed;
  to.workers = cfg.workers;
  const auto tr = trace_proof_argument(inst, c1, c2, pc.eps, to);

  json steps = json::array();
  for (const auto& s : tr.steps)
    steps.push_back({{"name", s.name},
                     {"claimed", s.claimed},
                     {"observed", s.observed},
                     {"verdict", std::string(to_string(s.verdict))}});
  checks.add("eps1_arithmetic", tr.eps1 == std::min(std::abs(c2 - c1) / 4.0, pc.eps));
  const bool sep = c1 < c2 ? c2 > c1 + 2.0 * tr.eps1 : c2 < c1 - 2.0 * tr.eps1;
  checks.add("separation_verdict_arithmetic", (tr.steps.at(1).verdict == Verdict::Holds) == sep);

  json trace{{"eps", tr.eps},
             {"eps1", tr.eps1},
             {"case", std::string(to_string(tr.proof_case))},
             {"d_choice", to_json(tr.d_choice)},
             {"d_choice_upper", to_json(tr.d_choice_upper)},
             {"steps", steps}};
  trace["eps2"] = tr.eps2 ? json(*tr.eps2) : json(nullptr);
  trace["eps3"] = tr.eps3 ? json(*tr.eps3) : json(nullptr);
  return {{"c1", c1}, {"c2", c2}, {"c_source", source}, {"trace", trace}};
}

json run_geometry(const ExperimentConfig& cfg, const ScalarField& field, Checks& checks) {
  const auto inst = make_instance(cfg, field);
  const auto res = check_mpt_geometry(inst, cfg.geometry->sphere_samples, cfg.seed);
  checks.add("verdict_matches_inequality",
             res.verdict == (res.b > res.phi_at_zero && res.phi_at_zero >= res.phi_at_e));
  return {{"geometry",
           {{"b", res.b},
            {"r", res.r},
            {"phi_at_zero", res.phi_at_zero},
            {"phi_at_e", res.phi_at_e},
            {"verdict", res.verdict}}}};
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_json(j);
  } catch (const json::exception& e) {
    bad(std::string("config has the wrong shape: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    bad(e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) bad("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_echo(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

bool is_subcommand(std::string_view name) {
  return std::find(std::begin(kSubcommands), std::end(kSubcommands), name) != std::end(kSubcommands);
}

void validate_for(const ExperimentConfig& cfg, std::string_view sub) {
  if (!is_subcommand(sub)) bad("unknown subcommand '" + std::string(sub) + "'");
  auto need = [&](bool present, const char* section) {
    if (!present) bad(std::string(sub) + " needs the '" + section + "' section");
  };
  try {
    const ScalarField field = make_field(cfg.functional, cfg.box);
    if (sub == "deform") {
      need(cfg.deformation.has_value(), "deformation");
      const BandPartition part(field, {cfg.deformation->c, cfg.deformation->eps}, cfg.deformation->d_spec);
      (void)part;
      return;
    }
    if (sub == "pscheck") {
      need(cfg.ps.has_value(), "ps");
      return;
    }
    need(cfg.minimax.has_value(), "minimax");
    if (sub == "oracle") need(cfg.oracle.has_value(), "oracle");
    if (sub == "proof-trace") need(cfg.proof.has_value(), "proof");
    if (sub == "geometry") need(cfg.geometry.has_value(), "geometry");
    const auto inst = make_instance(cfg, field);
    inst.validate();
    minimax_options(cfg).validate();
    if (sub == "geometry" && !(norm(inst.pin_e) > cfg.geometry->r)) bad("geometry needs |pin_e| > r");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    bad(e.what());
  }
}

RunResult run_experiment(const ExperimentConfig& cfg, std::string_view sub, const std::filesystem::path& out_dir) {
  validate_for(cfg, sub);
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string());

  const ScalarField field = make_field(cfg.functional, cfg.box);
  Checks checks;
  json payload;
  if (sub == "deform") payload = run_deform(cfg, field, out_dir, checks);
  else if (sub == "minimax") payload = run_minimax(cfg, field, out_dir, checks);
  else if (sub == "oracle") payload = run_oracle(cfg, field, out_dir, checks);
  else if (sub == "pscheck") payload = run_pscheck(cfg, field, checks);
  else if (sub == "proof-trace") payload = run_proof(cfg, field, checks);
  else payload = run_geometry(cfg, field, checks);
  payload["subcommand"] = std::string(sub);
  payload["checks"] = checks.list;

  const double wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  json report{{"config", config_json(cfg)}, {"version", kVersion}, {"payload", payload}, {"wall_ms", wall}};
  RunResult res;
  res.report = report.dump(2);
  res.checks_passed = checks.passed;
  write_text(out_dir / "report.json", res.report + "\n");
  return res;
}

}  // namespace deflab
