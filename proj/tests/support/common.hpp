#pragma once

#include "triproxy/npsem.hpp"
#include "triproxy/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace triproxy::testing {

inline DesignTag tag(ProxyDesign d) {
  switch (d) {
    case ProxyDesign::Outcome: return DesignTag::Outcome;
    case ProxyDesign::Treatment: return DesignTag::Treatment;
    case ProxyDesign::CondTreatment: return DesignTag::CondTreatment;
    case ProxyDesign::Auxiliary: return DesignTag::Auxiliary;
  }
  return DesignTag::Outcome;
}

inline PipelineOptions options_for(const Npsem& m, std::size_t k, std::uint64_t seed = 0) {
  PipelineOptions po;
  po.hs.latent_dim = k;
  po.hs.seed = seed;
  po.roles.y = m.role_node("Y");
  po.roles.x = m.role_node("X");
  po.roles.w = m.role_node("W");
  po.roles.z = m.role_node("Z");
  po.roles.v = m.role_node("V");
  if (auto c = m.graph().node_for_role("C")) po.roles.c = *c;
  return po;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double e = 0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

inline GeneratorOptions generator(std::size_t k) {
  GeneratorOptions g;
  g.latent_dim = k;
  return g;
}

/// Figures whose graphs support one of the four point-identification designs.
inline const std::vector<std::string>& oracle_figures() {
  static const std::vector<std::string> f = {"fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c",
                                             "fig4a", "fig4b", "fig5a", "fig5b", "fig5c"};
  return f;
}

}  // namespace triproxy::testing
