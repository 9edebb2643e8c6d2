#include "triproxy/cli.hpp"
#include "triproxy/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <thread>

namespace triproxy::cli {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

std::size_t thread_cap() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TRIPROXY_THREADS")) {
    std::size_t cap = 0;
    const auto* end = env + std::char_traits<char>::length(env);
    if (std::from_chars(env, end, cap).ec == std::errc{} && cap > 0) n = std::min(n, cap);
  }
  return n;
}

std::string csv_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void csv_record(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
}

}  // namespace

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  csv_record(out, header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error(ErrorCode::InvalidArgument, "CSV row width differs from header");
    csv_record(out, r);
  }
  return out;
}

Json RunConfig::to_json() const {
  Json j{{"verb", verb},
         {"latent_dim", latent_dim},
         {"samples", samples},
         {"rule", rule},
         {"tau", tau},
         {"z_shape", z_shape},
         {"outcome_shape", outcome_shape},
         {"proposition", proposition},
         {"seeds", seeds},
         {"strict", strict},
         {"format", kReportFormat}};
  if (!model.empty()) j["model"] = model;
  if (!graph.empty()) j["graph"] = graph;
  if (!joint.empty()) j["joint"] = joint;
  if (!fixture.empty()) j["fixture"] = fixture;
  if (design) j["design"] = *design;
  if (seed) j["seed"] = *seed;
  if (!w_coordinates.empty()) j["w_coordinates"] = w_coordinates;
  if (!z_coordinates.empty()) j["z_coordinates"] = z_coordinates;
  if (!roles.empty()) j["roles"] = roles;
  return j;
}

const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> all = [] {
    std::vector<Fixture> f;
    GeneratorOptions unbiased;
    unbiased.z_shape = ZShape::Unbiased;
    f.push_back({"fig1a-early-late-tests", "fig1a", DesignTag::Outcome, 2, 11, unbiased, "mean-unbiased", false, true,
                 "early and late test scores proxy ability; late tests respond to the intervention"});
    GeneratorOptions monotone;
    monotone.z_shape = ZShape::MonotoneIncreasing;
    f.push_back({"fig1c-late-tests-after-outcome", "fig1c", DesignTag::CondTreatment, 2, 12, monotone,
                 "mean-monotone", false, true, "late tests are taken after the outcome is realized"});
    f.push_back({"fig1d-auxiliary", "fig1d", DesignTag::Auxiliary, 2, 13, GeneratorOptions{}, std::nullopt, false,
                 false, "late tests act as an auxiliary proxy affected by the intervention"});
    f.push_back({"fig1b-double-only", "fig1b", std::nullopt, 2, 14, GeneratorOptions{}, std::nullopt, false, false,
                 "two early tests: enough for a double proxy design only"});
    GeneratorOptions ranked;
    ranked.outcome = OutcomeShape::RankInvariant;
    f.push_back({"fig6a-rank-invariance", "fig6a", DesignTag::Outcome, 2, 15, ranked, std::nullopt, true, false,
                 "proxy depends on treatment; rank-invariant outcome gives interval bounds"});
    return f;
  }();
  return all;
}

const Fixture& fixture(std::string_view name) {
  for (const auto& f : fixtures()) {
    if (f.name == name) return f;
  }
  std::string known;
  for (const auto& f : fixtures()) known += (known.empty() ? "" : ", ") + f.name;
  throw Error(ErrorCode::InvalidArgument, "unknown fixture '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace triproxy::cli
