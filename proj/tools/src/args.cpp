#include "triproxy/cli.hpp"
#include "triproxy/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace triproxy::cli {

namespace {

std::vector<std::vector<double>> parse_blocks(const std::string& s) {
  std::vector<std::vector<double>> out;
  std::stringstream blocks(s);
  for (std::string block; std::getline(blocks, block, ';');) {
    std::vector<double> levels;
    std::stringstream items(block);
    for (std::string item; std::getline(items, item, ',');) {
      try {
        levels.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad level '" + item + "' in --z-coordinates");
      }
    }
    out.push_back(std::move(levels));
  }
  return out;
}

std::map<std::string, std::string> parse_roles(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == it.size()) {
      throw Error(ErrorCode::InvalidArgument, "--role expects ROLE=axis, got '" + it + "'");
    }
    out[it.substr(0, eq)] = it.substr(eq + 1);
  }
  return out;
}

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent-confounder effect identification from three proxies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TRIPROXY_VERSION);

  RunConfig cfg;
  std::uint64_t seed = 0;
  std::string z_blocks;
  std::vector<std::string> roles;
  std::string design;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out,-o", cfg.out, "Report path (stdout when omitted)");
    sub->add_option("--seed", seed, "Seed for every stochastic step");
    sub->add_option("--eigen-gap-tol", cfg.tol.eigen_gap);
    sub->add_option("--imag-tol", cfg.tol.imag);
    sub->add_option("--rank-tol", cfg.tol.rank);
    sub->add_option("--negativity-tol", cfg.tol.negativity);
    sub->add_option("--max-condition", cfg.tol.max_condition);
    sub->add_option("--max-projection", cfg.tol.max_projection);
  };
  auto identification = [&](CLI::App* sub) {
    sub->add_option("--joint", cfg.joint, "Observed joint tensor (JSON)")->required();
    sub->add_option("--latent-dim,-k", cfg.latent_dim, "Number of latent states K");
    sub->add_option("--role", roles, "Axis playing a role, e.g. --role Y=gpa")->take_all();
    sub->add_option("--csv-dir", cfg.csv_dir, "Directory for CSV tables");
  };

  auto* simulate = app.add_subcommand("simulate", "Exact (or sampled) observed joint of a structural model");
  simulate->add_option("--model", cfg.model, "Model file, or a builtin figure id to generate one")->required();
  simulate->add_option("--samples", cfg.samples, "Draw this many rows instead of the exact joint");
  simulate->add_option("--latent-dim,-k", cfg.latent_dim);
  simulate->add_option("--z-shape", cfg.z_shape, "generic|unbiased|monotone|monotone-decreasing");
  simulate->add_option("--outcome-shape", cfg.outcome_shape, "generic|rank-invariant|rank-violating|constant-effect");
  simulate->add_option("--model-out", cfg.model_out, "Write the (generated) model here");
  common(simulate);

  auto* oracle = app.add_subcommand("oracle", "Ground-truth effects by counterfactual enumeration");
  oracle->add_option("--model", cfg.model)->required();
  oracle->add_option("--latent-dim,-k", cfg.latent_dim);
  oracle->add_option("--z-shape", cfg.z_shape);
  oracle->add_option("--outcome-shape", cfg.outcome_shape);
  oracle->add_option("--tau", cfg.tau)->delimiter(',');
  common(oracle);

  auto* ident = app.add_subcommand("identify", "Run a two-stage pipeline and report estimands");
  ident->add_option("--design", design, "outcome|treatment|cond-treatment|auxiliary");
  ident->add_option("--graph", cfg.graph, "Refuse unless the graph admits a triple-proxy design");
  ident->add_option("--tau", cfg.tau, "Quantile grid for QTE")->delimiter(',');
  ident->add_flag("--strict", cfg.strict, "Fail instead of omitting mean-based estimands");
  identification(ident);
  common(ident);

  auto* rel = app.add_subcommand("relabel", "Resolve latent labels and report confounder effects");
  rel->add_option("--design", design);
  rel->add_option("--graph", cfg.graph);
  rel->add_option("--rule", cfg.rule, "mean-unbiased|median-unbiased|mean-monotone|median-monotone");
  rel->add_option("--tau", cfg.tau)->delimiter(',');
  rel->add_option("--w-coordinates", cfg.w_coordinates, "Level counts of a product-coded W")->delimiter(',');
  rel->add_option("--z-coordinates", z_blocks, "Levels per Z coordinate, e.g. 0,1;0,1,2");
  identification(rel);
  common(rel);

  auto* bnd = app.add_subcommand("bounds", "Rank-invariance bounds from per-arm fits");
  bnd->add_option("--design", design, "outcome|auxiliary")->required();
  identification(bnd);
  common(bnd);

  auto* dag = app.add_subcommand("dag-check", "Certify proposition conclusions on a graph");
  dag->add_option("--graph", cfg.graph, "Graph file or builtin figure id")->required();
  dag->add_option("--proposition", cfg.proposition);
  dag->add_option("--seeds", cfg.seeds, "Random models per counterfactual conclusion");
  dag->add_option("--latent-dim,-k", cfg.latent_dim);
  common(dag);

  auto* cls = app.add_subcommand("classify", "List the identification designs a graph supports");
  cls->add_option("--graph", cfg.graph)->required();
  common(cls);

  auto* e2e = app.add_subcommand("end-to-end", "Run a builtin fixture against its golden report");
  e2e->add_option("--fixture", cfg.fixture)->required();
  e2e->add_option("--golden-dir", cfg.golden_dir);
  e2e->add_flag("--write-golden", cfg.write_golden, "Regenerate the golden file from the oracle");
  e2e->add_option("--golden-tol", cfg.tol.golden);
  e2e->add_option("--tau", cfg.tau)->delimiter(',');
  common(e2e);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  cfg.verb = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed")) cfg.seed = seed;
  if (!design.empty()) cfg.design = design;
  try {
    cfg.roles = parse_roles(roles);
    if (!z_blocks.empty()) cfg.z_coordinates = parse_blocks(z_blocks);
  } catch (const Error& e) {
    err << Json{{"error", {{"code", to_string(e.code())}, {"message", e.message()}}}}.dump() << "\n";
    return kExitValidation;
  }
  return run(cfg, out, err);
}

}  // namespace triproxy::cli
