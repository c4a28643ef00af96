#include "json.hpp"
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/mfg.hpp"

namespace mmfg {
namespace {

using ojson = nlohmann::ordered_json;

ojson fit_to_json(const PolyFit& f) {
  return ojson{{"degree", f.degree},
               {"center", {f.center[0], f.center[1]}},
               {"scale", {f.scale[0], f.scale[1]}},
               {"active", {f.active[0], f.active[1]}},
               {"coef", f.coef},
               {"r2", f.r2},
               {"rms_residual", f.rms_residual}};
}

PolyFit fit_from_json(const ojson& j) {
  PolyFit f;
  f.degree = j.at("degree").get<int>();
  for (int k = 0; k < 2; ++k) {
    f.center[k] = j.at("center").at(k).get<double>();
    f.scale[k] = j.at("scale").at(k).get<double>();
    f.active[k] = j.at("active").at(k).get<bool>();
  }
  f.coef = j.at("coef").get<std::vector<double>>();
  f.r2 = j.at("r2").get<double>();
  f.rms_residual = j.at("rms_residual").get<double>();
  if (f.coef.size() != basis_exponents(f.degree, f.active).size()) {
    throw IoError("bundle: coefficient count does not match the basis");
  }
  return f;
}

ojson field_pair(const std::vector<PolyFit>& a, const std::vector<PolyFit>& b, int degree) {
  ojson fits = ojson::array();
  for (std::size_t n = 0; n < a.size(); ++n) fits.push_back({fit_to_json(a[n]), fit_to_json(b[n])});
  return ojson{{"degree", degree}, {"fits", fits}};
}

void read_pair(const ojson& j, std::vector<PolyFit>& a, std::vector<PolyFit>& b) {
  for (const auto& pair : j.at("fits")) {
    a.push_back(fit_from_json(pair.at(0)));
    b.push_back(fit_from_json(pair.at(1)));
  }
}

}  // namespace

std::string bundle_to_json(const EquilibriumBundle& b) {
  ojson params = ojson::object();
  for (const auto& [k, v] : b.params) params[k] = v;
  ojson summaries = ojson::array();
  for (const auto& s : b.flow_summaries) {
    summaries.push_back(
        {{"mean_x", s.mean_x}, {"mean_gamma", s.mean_gamma}, {"second_moment", s.second_moment}});
  }
  ojson doc{
      {"spec_version", kSpecVersion},
      {"model", b.model},
      {"params", params},
      {"config", ojson::parse(b.config_echo.empty() ? "{}" : b.config_echo)},
      {"grid", {{"t_min", b.grid.t_min}, {"T", b.grid.horizon}, {"steps", b.grid.steps}}},
      {"startup", {{"mean_x", b.startup.mean_x}, {"var_x", b.startup.var_x}, {"gamma", b.startup.gamma}}},
      {"alpha0", b.alpha0},
      {"theta_P", field_pair(b.fields.P, b.fields.Pgrave, b.fields.degree)},
      {"theta_Y", field_pair(b.fields.Y, b.fields.Ygrave, b.fields.degree)},
      {"fit_residuals", b.fields.residual},
      {"flow_summaries", summaries},
  };
  return doc.dump(2) + "\n";
}

EquilibriumBundle bundle_from_json(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bundle: malformed JSON: ") + e.what());
  }
  try {
    if (!doc.contains("spec_version")) throw IoError("bundle: missing spec_version");
    EquilibriumBundle b;
    b.model = doc.at("model").get<std::string>();
    for (const auto& [k, v] : doc.at("params").items()) b.params.emplace_back(k, v.get<double>());
    b.config_echo = doc.at("config").dump();
    const auto& g = doc.at("grid");
    b.grid = TimeGrid::make(g.at("t_min").get<double>(), g.at("T").get<double>(),
                            g.at("steps").get<std::size_t>());
    const auto& s = doc.at("startup");
    b.startup = {s.at("mean_x").get<double>(), s.at("var_x").get<double>(), s.at("gamma").get<double>()};
    b.alpha0 = doc.at("alpha0").get<std::vector<double>>();
    b.fields.degree = doc.at("theta_Y").at("degree").get<int>();
    b.fields.grid = b.grid;
    read_pair(doc.at("theta_P"), b.fields.P, b.fields.Pgrave);
    read_pair(doc.at("theta_Y"), b.fields.Y, b.fields.Ygrave);
    b.fields.residual = doc.at("fit_residuals").get<std::vector<double>>();
    for (const auto& f : doc.at("flow_summaries")) {
      b.flow_summaries.push_back(LambdaSummary::of(f.at("mean_x").get<double>(),
                                                   f.at("mean_gamma").get<double>(),
                                                   f.at("second_moment").get<double>()));
    }
    const std::size_t n = b.grid.size();
    if (b.alpha0.size() != n || b.flow_summaries.size() != n || b.fields.Y.size() != n ||
        b.fields.P.size() != n) {
      throw IoError("bundle: per-time arrays do not match the grid");
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bundle: ") + e.what());
  }
}

}  // namespace mmfg
