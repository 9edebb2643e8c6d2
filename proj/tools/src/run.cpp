#include "triproxy/bounds.hpp"
#include "triproxy/cli.hpp"
#include "triproxy/error.hpp"
#include "triproxy/relabel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef TRIPROXY_VERSION
#define TRIPROXY_VERSION "0.0.0"
#endif
#ifndef TRIPROXY_GOLDEN_DIR
#define TRIPROXY_GOLDEN_DIR "golden"
#endif

namespace triproxy::cli {

namespace {

bool is_figure(std::string_view id) {
  const auto& ids = builtin::figure_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

ZShape z_shape_from(const std::string& s) {
  if (s == "generic") return ZShape::Generic;
  if (s == "unbiased") return ZShape::Unbiased;
  if (s == "monotone") return ZShape::MonotoneIncreasing;
  if (s == "monotone-decreasing") return ZShape::MonotoneDecreasing;
  throw Error(ErrorCode::InvalidArgument, "unknown --z-shape '" + s + "'");
}

OutcomeShape outcome_shape_from(const std::string& s) {
  if (s == "generic") return OutcomeShape::Generic;
  if (s == "rank-invariant") return OutcomeShape::RankInvariant;
  if (s == "rank-violating") return OutcomeShape::RankViolating;
  if (s == "constant-effect") return OutcomeShape::ConstantEffect;
  throw Error(ErrorCode::InvalidArgument, "unknown --outcome-shape '" + s + "'");
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inputs and config folded into one digest.
class Context {
 public:
  explicit Context(const RunConfig& c) : cfg(c) {}

  const RunConfig& cfg;

  Json read_input(const std::string& path) {
    const auto bytes = read_bytes(path);
    digest_ = fnv1a(bytes, digest_);
    try {
      return Json::parse(bytes);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ParseError, "'" + path + "': " + e.what());
    }
  }

  std::uint64_t config_hash() const { return fnv1a(dump(cfg.to_json()), digest_); }

 private:
  std::uint64_t digest_ = 14695981039346656037ull;
};

GeneratorOptions generator_options(const RunConfig& cfg) {
  GeneratorOptions g;
  g.latent_dim = cfg.latent_dim;
  g.z_shape = z_shape_from(cfg.z_shape);
  g.outcome = outcome_shape_from(cfg.outcome_shape);
  return g;
}

std::uint64_t require_seed(const RunConfig& cfg, const std::string& why) {
  if (!cfg.seed) throw Error(ErrorCode::InvalidArgument, "--seed is required to " + why);
  return *cfg.seed;
}

Npsem load_model(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.model.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
  if (is_figure(cfg.model)) {
    return random_figure_model(cfg.model, require_seed(cfg, "generate a model for " + cfg.model),
                               generator_options(cfg));
  }
  return npsem_from_json(ctx.read_input(cfg.model));
}

Dag load_graph(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.graph.empty()) throw Error(ErrorCode::InvalidArgument, "--graph is required");
  if (is_figure(cfg.graph)) return builtin::figure(cfg.graph);
  return dag_from_json(ctx.read_input(cfg.graph));
}

struct LoadedJoint {
  ProbTensor joint;
  std::map<std::string, std::string> roles;
};

LoadedJoint load_joint(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.joint.empty()) throw Error(ErrorCode::InvalidArgument, "--joint is required");
  const auto j = ctx.read_input(cfg.joint);
  const Json* body = &j;
  if (j.contains("result") && j["result"].contains("joint")) body = &j["result"];
  std::map<std::string, std::string> roles;
  if (body->contains("roles")) roles = (*body)["roles"].get<std::map<std::string, std::string>>();
  if (body->contains("joint")) return {tensor_from_json((*body)["joint"]), roles};
  return {tensor_from_json(*body), roles};
}

Roles roles_from(const std::map<std::string, std::string>& file_roles, const std::map<std::string, std::string>& cli) {
  auto merged = file_roles;
  for (const auto& [k, v] : cli) merged[k] = v;
  Roles r;
  for (const auto& [k, v] : merged) {
    if (k == "Y") r.y = v;
    else if (k == "X") r.x = v;
    else if (k == "W") r.w = v;
    else if (k == "Z") r.z = v;
    else if (k == "V") r.v = v;
    else if (k == "C") r.c = v;
    else throw Error(ErrorCode::InvalidArgument, "unknown role '" + k + "' (expected Y, X, W, Z, V or C)");
  }
  return r;
}

PipelineOptions pipeline_options(const RunConfig& cfg, Roles roles) {
  PipelineOptions o;
  o.hs.latent_dim = cfg.latent_dim;
  o.hs.eigen_gap_tol = cfg.tol.eigen_gap;
  o.hs.imag_tol = cfg.tol.imag;
  o.hs.rank_tol = cfg.tol.rank;
  o.hs.negativity_tol = cfg.tol.negativity;
  o.hs.seed = cfg.seed.value_or(0);
  o.max_condition = cfg.tol.max_condition;
  o.max_projection = cfg.tol.max_projection;
  o.roles = std::move(roles);
  return o;
}

Json tolerances_json(const Tolerances& t) {
  return Json{{"eigen_gap", t.eigen_gap},       {"imag", t.imag},
              {"rank", t.rank},                 {"negativity", t.negativity},
              {"max_condition", t.max_condition}, {"max_projection", t.max_projection},
              {"golden", t.golden},             {"atom_merge", kAtomTolerance},
              {"alpha_collision", kAlphaTolerance}, {"bound_mass", kBoundMassTolerance},
              {"point_identified", kPointIdentifiedTolerance}};
}

Json envelope(const Context& ctx, Json result) {
  return Json{{"tool", "triproxy"},
              {"version", TRIPROXY_VERSION},
              {"format", kReportFormat},
              {"verb", ctx.cfg.verb},
              {"config", ctx.cfg.to_json()},
              {"config_hash", hex64(ctx.config_hash())},
              {"tolerances", tolerances_json(ctx.cfg.tol)},
              {"result", std::move(result)}};
}

void emit(const RunConfig& cfg, const Json& report, std::ostream& out) {
  const auto text = dump(report);
  if (cfg.out.empty()) {
    out << text;
  } else {
    write_text_file(cfg.out, text);
  }
}

void write_csv(const RunConfig& cfg, const std::string& name, const std::string& body) {
  if (cfg.csv_dir.empty()) return;
  std::filesystem::create_directories(cfg.csv_dir);
  write_text_file(cfg.csv_dir / name, body);
}

std::string graph_role(const Dag& g, const std::string& role) {
  const auto n = g.node_for_role(role);
  if (!n) throw Error(ErrorCode::MissingRole, "graph has no node playing " + role);
  return *n;
}

Roles roles_of(const Dag& g) {
  Roles r;
  r.y = graph_role(g, "Y");
  r.x = graph_role(g, "X");
  if (auto n = g.node_for_role("Z")) r.z = *n;
  if (auto n = g.node_for_role("V")) r.v = *n;
  if (auto n = g.node_for_role("C")) r.c = *n;
  return r;
}

std::map<std::string, std::string> role_map_of(const Dag& g) {
  std::map<std::string, std::string> out;
  for (const char* role : {"Y", "X", "Z", "V", "C"}) {
    if (auto n = g.node_for_role(role)) out[role] = *n;
  }
  return out;
}

ProbTensor observed_joint(const Npsem& m) {
  std::vector<std::string> keep;
  for (const auto& n : m.nodes()) {
    if (!n.latent) keep.push_back(n.space.name);
  }
  return marginal(observable_joint(m), keep);
}

std::optional<DesignTag> design_of(Design d) {
  switch (d) {
    case Design::OutcomeProxy: return DesignTag::Outcome;
    case Design::TreatmentProxy: return DesignTag::Treatment;
    case Design::CondTreatmentProxy: return DesignTag::CondTreatment;
    case Design::AuxiliaryProxy: return DesignTag::Auxiliary;
    default: return std::nullopt;
  }
}

Json classification_json(const DesignSet& ds) {
  Json designs = Json::array();
  for (const auto& m : ds.matches) {
    designs.push_back(Json{{"design", to_string(m.design)},
                           {"triple_proxy", is_triple_proxy(m.design)},
                           {"assignment", m.assignment}});
  }
  return Json{{"designs", designs}, {"triple_proxy", ds.any_triple_proxy()}};
}

[[noreturn]] void refuse_double_only(const DesignSet& ds) {
  throw Error(ErrorCode::NoTripleProxyDesign,
              ds.contains(Design::DoubleProxy)
                  ? "graph supports the double-proxy design but no triple-proxy design"
                  : "graph supports no proxy design",
              "Proposition 1-4 prerequisites");
}

// Picks the design: explicit flag, else the graph's first triple-proxy design.
DesignTag resolve_design(Context& ctx) {
  const auto& cfg = ctx.cfg;
  std::optional<DesignTag> chosen;
  if (cfg.design) chosen = design_from_string(*cfg.design);
  if (!cfg.graph.empty()) {
    const auto ds = classify_designs(load_graph(ctx));
    if (!ds.any_triple_proxy()) refuse_double_only(ds);
    if (!chosen) {
      for (const auto& m : ds.matches) {
        if ((chosen = design_of(m.design))) break;
      }
    }
  }
  if (!chosen) throw Error(ErrorCode::InvalidArgument, "--design is required (outcome, treatment, cond-treatment, auxiliary)");
  return *chosen;
}

Json estimand_csvs(const RunConfig& cfg, const EstimandReport& r) {
  std::vector<std::vector<std::string>> qte, atoms;
  for (const auto& q : r.qte) {
    qte.push_back({csv_number(q.tau), csv_number(q.q0), csv_number(q.q1), csv_number(q.qte)});
  }
  if (r.cate_distribution) {
    for (const auto& a : *r.cate_distribution) atoms.push_back({csv_number(a.value), csv_number(a.mass), csv_number(a.cdf)});
  }
  write_csv(cfg, "qte.csv", csv_table({"tau", "q0", "q1", "qte"}, qte));
  write_csv(cfg, "cate_distribution.csv", csv_table({"value", "mass", "cdf"}, atoms));
  return Json{};
}

// ---------------------------------------------------------------------------
// verbs

Json verb_simulate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto m = load_model(ctx);
  if (!cfg.model_out.empty()) write_text_file(cfg.model_out, dump(to_json(m)));
  Json result{{"roles", role_map_of(m.graph())}};
  if (cfg.samples > 0) {
    const auto data = sample(m, cfg.samples, require_seed(cfg, "sample"));
    std::vector<std::string> keep;
    for (const auto& n : m.nodes()) {
      if (!n.latent) keep.push_back(n.space.name);
    }
    result["joint"] = to_json(empirical_tensor(data, keep));
    result["samples"] = cfg.samples;
    result["exact"] = false;
  } else {
    result["joint"] = to_json(observed_joint(m));
    result["exact"] = true;
  }
  return result;
}

Json verb_oracle(Context& ctx) { return oracle_report(load_model(ctx), ctx.cfg.tau); }

Json verb_identify(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto design = resolve_design(ctx);
  const auto loaded = load_joint(ctx);
  const auto model = identify(design, loaded.joint, pipeline_options(cfg, roles_from(loaded.roles, cfg.roles)));
  EstimandOptions eo;
  eo.strict = cfg.strict;
  if (!cfg.tau.empty()) eo.tau_grid = cfg.tau;
  const auto rep = estimands(model, eo);
  estimand_csvs(cfg, rep);
  return Json{{"design", to_string(design)}, {"model", to_json(canonicalize(model))}, {"estimands", to_json(rep)}};
}

RelabelRule relabel_rule(const RunConfig& cfg) {
  auto rule = RelabelRule::parse(cfg.rule);
  rule.w_coordinates = cfg.w_coordinates;
  rule.z_coordinates = cfg.z_coordinates;
  return rule;
}

Json verb_relabel(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto design = resolve_design(ctx);
  const auto loaded = load_joint(ctx);
  const auto model = identify(design, loaded.joint, pipeline_options(cfg, roles_from(loaded.roles, cfg.roles)));
  const auto labeled = relabel(model, relabel_rule(cfg), cfg.tau);
  const auto effects = confounder_effects(labeled);
  std::vector<std::vector<std::string>> rows;
  for (const auto& q : labeled.quantile_map) {
    rows.push_back({csv_number(q.tau), std::to_string(q.state), q.cate ? csv_number(*q.cate) : std::string()});
  }
  if (!labeled.quantile_map.empty()) write_csv(cfg, "quantile_map.csv", csv_table({"tau", "state", "cate"}, rows));
  return Json{{"design", to_string(design)}, {"labeled", to_json(labeled)}, {"confounder_effects", to_json(effects)}};
}

Json verb_bounds(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (!cfg.design) throw Error(ErrorCode::InvalidArgument, "--design is required (outcome or auxiliary)");
  const auto design = design_from_string(*cfg.design);
  const auto loaded = load_joint(ctx);
  return to_json(bounds(design, loaded.joint, pipeline_options(cfg, roles_from(loaded.roles, cfg.roles))));
}

template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < n;) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::set<std::string> to_nodes(const Dag& g, const std::set<std::string>& roles) {
  std::set<std::string> out;
  for (const auto& r : roles) out.insert(graph_role(g, r));
  return out;
}

Json verb_dag_check(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto g = load_graph(ctx);
  std::vector<int> props;
  if (cfg.proposition) {
    props.push_back(cfg.proposition);
  } else if (is_figure(cfg.graph) && builtin::proposition_for(cfg.graph)) {
    props.push_back(builtin::proposition_for(cfg.graph));
  } else {
    for (int p = 1; p <= 7; ++p) props.push_back(p);
  }

  // Models are drawn once and shared by every counterfactual conclusion.
  std::vector<std::optional<Npsem>> models(cfg.seeds);
  GeneratorOptions gen;
  gen.latent_dim = cfg.latent_dim;
  bool drawn = false;
  auto draw = [&] {
    if (drawn) return;
    drawn = true;
    const std::uint64_t base = cfg.seed.value_or(0);
    parallel_for(cfg.seeds, [&](std::size_t i) { models[i] = random_npsem(g, base + i, gen); });
  };

  Json out = Json::array();
  for (int p : props) {
    const auto roles = proposition_roles(p);
    bool applicable = true;
    for (const auto& r : roles) applicable = applicable && g.node_for_role(r).has_value();
    if (!applicable) {
      out.push_back(Json{{"proposition", p}, {"applicable", false}});
      continue;
    }
    const auto report = check_proposition(g, p);
    Json items = Json::array();
    for (const auto& item : report.items) {
      Json j{{"label", item.conclusion.label}, {"text", item.conclusion.text()}, {"status", to_string(item.status)}};
      if (item.conclusion.counterfactual()) {
        draw();
        CounterfactualQuery q;
        for (const auto& r : item.conclusion.intervene) q.intervene.push_back(graph_role(g, r));
        q.right = to_nodes(g, item.conclusion.query.right);
        q.given = to_nodes(g, item.conclusion.query.given);
        q.outcome = graph_role(g, "Y");
        std::vector<char> ok(cfg.seeds, 0);
        parallel_for(cfg.seeds, [&](std::size_t i) { ok[i] = check_counterfactual_ci(*models[i], q); });
        const auto confirmed = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
        j["simulation"] = Json{{"seeds", cfg.seeds}, {"confirmed", confirmed}};
      }
      items.push_back(std::move(j));
    }
    out.push_back(Json{{"proposition", p},
                       {"applicable", true},
                       {"items", items},
                       {"all_observational_certified", report.all_observational_certified()}});
  }
  return Json{{"graph", to_json(g)}, {"propositions", out}};
}

Json verb_classify(Context& ctx) {
  const auto g = load_graph(ctx);
  return Json{{"graph", to_json(g)}, {"classification", classification_json(classify_designs(g))}};
}

// ---------------------------------------------------------------------------
// end-to-end

struct Diff {
  std::string field;
  double expected;
  double actual;
};

class GoldenCheck {
 public:
  explicit GoldenCheck(double tol) : tol_(tol) {}

  void value(const std::string& field, double expected, double actual) {
    ++compared_;
    const double d = std::abs(expected - actual);
    max_diff_ = std::max(max_diff_, d);
    if (!(d <= tol_)) diffs_.push_back({field, expected, actual});
  }
  void values(const std::string& field, const Json& expected, const std::vector<double>& actual) {
    if (expected.size() != actual.size()) {
      diffs_.push_back({field + ".size", static_cast<double>(expected.size()), static_cast<double>(actual.size())});
      return;
    }
    for (std::size_t i = 0; i < actual.size(); ++i) {
      value(field + "[" + std::to_string(i) + "]", expected[i].get<double>(), actual[i]);
    }
  }
  void inside(const std::string& field, double expected, const Interval& iv) {
    ++compared_;
    if (!iv.contains(expected)) diffs_.push_back({field + " inside bounds", expected, expected < iv.lower ? iv.lower : iv.upper});
  }

  Json to_json() const {
    Json d = Json::array();
    for (const auto& x : diffs_) d.push_back(Json{{"field", x.field}, {"expected", x.expected}, {"actual", x.actual}});
    return Json{{"compared", compared_}, {"max_abs_diff", max_diff_}, {"tolerance", tol_}, {"mismatches", d},
                {"pass", diffs_.empty()}};
  }
  bool pass() const { return diffs_.empty(); }
  std::string summary() const {
    std::string s;
    for (const auto& x : diffs_) {
      s += (s.empty() ? "" : "; ") + x.field + ": expected " + csv_number(x.expected) + ", got " + csv_number(x.actual);
    }
    return s;
  }

 private:
  double tol_;
  std::size_t compared_ = 0;
  double max_diff_ = 0;
  std::vector<Diff> diffs_;
};

std::vector<double> atom_field(const std::vector<Atom>& atoms, bool mass) {
  std::vector<double> out;
  for (const auto& a : atoms) out.push_back(mass ? a.mass : a.value);
  return out;
}

std::vector<double> json_atom_field(const Json& atoms, const char* key) {
  std::vector<double> out;
  for (const auto& a : atoms) out.push_back(a.at(key).get<double>());
  return out;
}

void print_error(std::ostream& err, const Error& e) {
  Json j{{"error",
          {{"code", to_string(e.code())},
           {"message", e.message()},
           {"assumption", e.assumption()},
           {"context", e.context()},
           {"exit", is_validation_error(e.code()) ? kExitValidation : kExitIdentification}}}};
  err << j.dump() << "\n";
}

int verb_end_to_end(Context& ctx, std::ostream& out, std::ostream& err) {
  const auto& cfg = ctx.cfg;
  const auto& f = fixture(cfg.fixture);
  auto gen = f.generator;
  gen.latent_dim = f.latent_dim;
  const auto m = random_figure_model(f.figure, f.seed, gen);
  const auto model_json = to_json(m);
  const auto fingerprint = hex64(fnv1a(model_json.dump()));
  const auto ds = classify_designs(m.graph());

  Json result{{"fixture", f.name},
              {"figure", f.figure},
              {"description", f.description},
              {"model_fingerprint", fingerprint},
              {"classification", classification_json(ds)}};
  if (!f.design) {
    result["identify"] = "refused";
    emit(cfg, envelope(ctx, result), out);
    try {
      refuse_double_only(ds);
    } catch (const Error& e) {
      print_error(err, e);
      return kExitIdentification;
    }
  }
  const auto design = *f.design;
  result["design"] = to_string(design);
  const auto& tau = cfg.tau;
  const auto golden_dir = cfg.golden_dir.empty() ? std::filesystem::path(TRIPROXY_GOLDEN_DIR) : cfg.golden_dir;
  const auto golden_path = golden_dir / (f.name + ".json");

  if (cfg.write_golden) {
    Json golden{{"fixture", f.name}, {"model_fingerprint", fingerprint}, {"tau", tau}, {"oracle", oracle_report(m, tau)}};
    std::filesystem::create_directories(golden_dir);
    write_text_file(golden_path, dump(golden));
    result["golden_written"] = golden_path.filename().string();
    emit(cfg, envelope(ctx, result), out);
    return kExitOk;
  }

  const auto golden = ctx.read_input(golden_path.string());
  GoldenCheck check(cfg.tol.golden);
  if (golden.at("model_fingerprint") != fingerprint) {
    throw Error(ErrorCode::GoldenMismatch, "fixture model differs from the one the golden file was built from");
  }
  const auto& oracle = golden.at("oracle");
  const auto joint = observed_joint(m);
  const auto opts = pipeline_options(cfg, roles_of(m.graph()));

  if (f.bounds) {
    const auto b = bounds(design, joint, opts);
    result["bounds"] = to_json(b);
    check.inside("att", oracle.at("att").get<double>(), b.att);
    check.inside("atu", oracle.at("atu").get<double>(), b.atu);
    const auto cates = oracle.at("stratum_cate").get<std::vector<double>>();
    for (std::size_t w = 0; w < cates.size(); ++w) {
      check.inside("stratum_cate[" + std::to_string(w) + "]", cates[w], Interval{b.s_lower, b.s_upper});
    }
  } else {
    const auto model = identify(design, joint, opts);
    const auto rep = estimands(model);
    result["estimands"] = to_json(rep);
    check.value("ate", oracle.at("ate").get<double>(), *rep.ate);
    check.value("att", oracle.at("att").get<double>(), *rep.att);
    check.value("atu", oracle.at("atu").get<double>(), *rep.atu);
    for (std::size_t x = 0; x < rep.potential_pmf.size(); ++x) {
      check.values("potential_pmf[" + std::to_string(x) + "]", oracle.at("potential_pmf")[x], rep.potential_pmf[x]);
    }
    check.values("cate_distribution.value", Json(json_atom_field(oracle.at("cate_distribution"), "value")),
                 atom_field(*rep.cate_distribution, false));
    check.values("cate_distribution.mass", Json(json_atom_field(oracle.at("cate_distribution"), "mass")),
                 atom_field(*rep.cate_distribution, true));
    if (f.rule) {
      const auto labeled = relabel(model, RelabelRule::parse(*f.rule), tau);
      result["relabel"] = to_json(labeled);
      if (labeled.rule.mode == RelabelMode::Unbiased) {
        check.values("stratum_cate", oracle.at("stratum_cate"), stratum_cate(labeled.base));
      } else {
        std::vector<double> q;
        for (const auto& s : labeled.quantile_map) q.push_back(*s.cate);
        Json expected = Json::array();
        for (const auto& row : oracle.at("quantile_cate")) expected.push_back(row.at("cate"));
        check.values("quantile_cate", expected, q);
      }
      if (f.confounder_effects) {
        const auto eff = confounder_effects(labeled);
        result["confounder_effects"] = to_json(eff);
        for (std::size_t x = 0; x < eff.means.size(); ++x) {
          check.values("confounder_means[" + std::to_string(x) + "]", oracle.at("confounder_means")[x], eff.means[x]);
        }
      }
    }
  }
  result["golden"] = check.to_json();
  emit(cfg, envelope(ctx, result), out);
  if (!check.pass()) throw Error(ErrorCode::GoldenMismatch, check.summary());
  return kExitOk;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    Context ctx(config);
    Json result;
    const auto& v = config.verb;
    if (v == "simulate") {
      result = verb_simulate(ctx);
    } else if (v == "oracle") {
      result = verb_oracle(ctx);
    } else if (v == "identify") {
      result = verb_identify(ctx);
    } else if (v == "relabel") {
      result = verb_relabel(ctx);
    } else if (v == "bounds") {
      result = verb_bounds(ctx);
    } else if (v == "dag-check") {
      result = verb_dag_check(ctx);
    } else if (v == "classify") {
      result = verb_classify(ctx);
    } else if (v == "end-to-end") {
      return verb_end_to_end(ctx, out, err);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown verb '" + v + "'");
    }
    emit(config, envelope(ctx, std::move(result)), out);
    return kExitOk;
  } catch (const Error& e) {
    print_error(err, e);
    return is_validation_error(e.code()) ? kExitValidation : kExitIdentification;
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(err, Error(ErrorCode::ParseError, e.what()));
    return kExitValidation;
  }
}

}  // namespace triproxy::cli
