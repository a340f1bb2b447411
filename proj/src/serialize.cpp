#include "traject/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "traject/error.hpp"

namespace traject {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double get_number(const Json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

Json optional_date(const std::optional<Date>& d) { return d ? Json(format_date(*d)) : Json(nullptr); }

std::optional<Date> get_optional_date(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return parse_date(j.at(key).get<std::string>());
}

Json to_json(const ingest::DateRange& r) { return Json{{"first", format_date(r.first)}, {"last", format_date(r.last)}}; }

ingest::DateRange range_from_json(const Json& j) {
  return {parse_date(j.at("first").get<std::string>()), parse_date(j.at("last").get<std::string>())};
}

std::string cycle_label(const CycleTime& c) {
  auto s = format_date(c.date()) + "T";
  if (c.init_hour() < 10) s += '0';
  return s + std::to_string(c.init_hour());
}

CycleTime parse_cycle_label(std::string_view text) {
  if (text.size() != 13 || text[10] != 'T') throw DataError("invalid cycle '" + std::string(text) + "'");
  return CycleTime(parse_date(text.substr(0, 10)), std::stoi(std::string(text.substr(11))));
}

template <class F>
auto with_context(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

void write_json_file(const std::filesystem::path& path, const Json& value) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Json to_json(const ingest::SyntheticConfig& c) {
  Json bias = Json::array();
  for (double b : c.forecast_bias) bias.push_back(b);
  return Json{{"seed", c.seed},
              {"n_stations", c.n_stations},
              {"n_days", c.n_days},
              {"spinup_days", c.spinup_days},
              {"training_days", c.training_days},
              {"start", format_date(c.start)},
              {"diurnal_amplitude", c.diurnal_amplitude},
              {"seasonal_amplitude", c.seasonal_amplitude},
              {"truth_ar1_coeff", c.truth_ar1_coeff},
              {"truth_anomaly_sd", c.truth_anomaly_sd},
              {"forecast_bias", bias},
              {"spread_deflation", c.spread_deflation},
              {"error_ar1_coeff", c.error_ar1_coeff},
              {"error_sd", c.error_sd},
              {"error_growth", c.error_growth},
              {"cross_run_share", c.cross_run_share},
              {"obs_noise_sd", c.obs_noise_sd},
              {"missing_obs_fraction", c.missing_obs_fraction}};
}

ingest::SyntheticConfig synthetic_config_from_json(const Json& j) {
  return with_context("synthetic config", [&] {
    ingest::SyntheticConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_stations = j.at("n_stations").get<int>();
    c.n_days = j.at("n_days").get<int>();
    c.spinup_days = j.at("spinup_days").get<int>();
    c.training_days = j.at("training_days").get<int>();
    c.start = parse_date(j.at("start").get<std::string>());
    c.diurnal_amplitude = j.at("diurnal_amplitude").get<double>();
    c.seasonal_amplitude = j.at("seasonal_amplitude").get<double>();
    c.truth_ar1_coeff = j.at("truth_ar1_coeff").get<double>();
    c.truth_anomaly_sd = j.at("truth_anomaly_sd").get<double>();
    const auto& bias = j.at("forecast_bias");
    if (bias.size() != static_cast<std::size_t>(kMaxLead)) throw DataError("forecast_bias needs 36 values");
    for (std::size_t i = 0; i < bias.size(); ++i) c.forecast_bias[i] = bias[i].get<double>();
    c.spread_deflation = j.at("spread_deflation").get<double>();
    c.error_ar1_coeff = j.at("error_ar1_coeff").get<double>();
    c.error_sd = j.at("error_sd").get<double>();
    c.error_growth = j.at("error_growth").get<double>();
    c.cross_run_share = j.at("cross_run_share").get<double>();
    c.obs_noise_sd = j.at("obs_noise_sd").get<double>();
    c.missing_obs_fraction = j.at("missing_obs_fraction").get<double>();
    return c;
  });
}

Json to_json(const ingest::DatasetManifest& m) {
  Json stations = Json::array();
  for (const auto& s : m.stations) {
    stations.push_back(Json{{"id", s.id},
                            {"site_type", std::string(to_string(s.site_type))},
                            {"latitude", s.latitude},
                            {"longitude", s.longitude},
                            {"elevation", s.elevation}});
  }
  Json cycles = Json::array();
  for (const auto& c : m.cycles) cycles.push_back(cycle_label(c));
  Json j{{"stations", stations},
         {"cycles", cycles},
         {"training_range", to_json(m.training_range)},
         {"test_range", to_json(m.test_range)},
         {"provenance", m.provenance == ingest::Provenance::Synthetic ? "synthetic" : "external"}};
  if (m.planted_truth) {
    const auto& t = *m.planted_truth;
    Json sd = Json::object();
    for (auto type : {SiteType::Coastal, SiteType::Inland, SiteType::Mountain}) {
      Json per_lead = Json::array();
      for (int l = 1; l <= kMaxLead; ++l) per_lead.push_back(t.error_sd(l, type));
      sd[std::string(to_string(type))] = per_lead;
    }
    j["planted_truth"] = Json{{"config", to_json(t.config)},
                              {"lead_error_ar1", t.config.error_ar1_coeff},
                              {"member_mean_error_sd", sd}};
  } else {
    j["planted_truth"] = nullptr;
  }
  return j;
}

ingest::DatasetManifest manifest_from_json(const Json& j) {
  return with_context("manifest", [&] {
    ingest::DatasetManifest m;
    for (const auto& s : j.at("stations")) {
      m.stations.push_back(Station{s.at("id").get<std::string>(),
                                   parse_site_type(s.at("site_type").get<std::string>()),
                                   s.value("latitude", 0.0), s.value("longitude", 0.0), s.value("elevation", 0.0)});
    }
    for (const auto& c : j.at("cycles")) m.cycles.push_back(parse_cycle_label(c.get<std::string>()));
    std::sort(m.cycles.begin(), m.cycles.end());
    m.training_range = range_from_json(j.at("training_range"));
    m.test_range = range_from_json(j.at("test_range"));
    const auto provenance = j.at("provenance").get<std::string>();
    if (provenance == "synthetic") {
      m.provenance = ingest::Provenance::Synthetic;
    } else if (provenance == "external") {
      m.provenance = ingest::Provenance::External;
    } else {
      throw DataError("unknown provenance '" + provenance + "'");
    }
    if (j.contains("planted_truth") && !j.at("planted_truth").is_null()) {
      m.planted_truth = ingest::PlantedTruth{synthetic_config_from_json(j.at("planted_truth").at("config"))};
    }
    return m;
  });
}

Json to_json(const emos::EmosParams& p) {
  return Json{{"station", p.cell.station},
              {"init_hour", p.cell.init_hour},
              {"lead", p.cell.lead},
              {"as_of", optional_date(p.as_of)},
              {"a", p.a},
              {"b", p.b},
              {"c", p.c},
              {"d", p.d},
              {"n_train", p.n_train},
              {"window_begin", optional_date(p.window_begin)},
              {"window_end", optional_date(p.window_end)},
              {"status", std::string(emos::to_string(p.status))},
              {"iterations", p.iterations},
              {"converged", p.converged}};
}

emos::EmosParams emos_params_from_json(const Json& j) {
  return with_context("EMOS parameters", [&] {
    emos::EmosParams p;
    p.cell = {j.at("station").get<std::string>(), j.at("init_hour").get<int>(), j.at("lead").get<int>()};
    p.as_of = get_optional_date(j, "as_of");
    p.a = j.at("a").get<double>();
    p.b = j.at("b").get<double>();
    p.c = j.at("c").get<double>();
    p.d = j.at("d").get<double>();
    p.n_train = j.at("n_train").get<int>();
    p.window_begin = get_optional_date(j, "window_begin");
    p.window_end = get_optional_date(j, "window_end");
    p.status = emos::parse_fit_status(j.at("status").get<std::string>());
    p.iterations = j.value("iterations", 0);
    p.converged = j.value("converged", true);
    return p;
  });
}

void write_emos_model(const std::filesystem::path& path, const emos::EmosModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "[";
  bool first = true;
  for (const auto& [cell, days] : model.cells()) {
    for (const auto& [date, params] : days) {
      out << (first ? "\n" : ",\n") << to_json(params).dump();
      first = false;
    }
  }
  out << "\n]\n";
  if (!out) throw DataError("write failed for " + path.string());
}

emos::EmosModel read_emos_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(path.string(), "train-emos");
  emos::EmosModel model;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.back() == ',') line.pop_back();
    if (line.empty() || line == "[" || line == "]") continue;
    try {
      model.add(emos_params_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(row) + ": " + e.what());
    }
  }
  return model;
}

Json to_json(const raft::RaftLink& l) {
  return Json{{"predictor_lead", l.predictor_lead},
              {"source", l.source() == raft::PredictorSource::CurrentRun ? "current_run" : "previous_day_run"},
              {"alpha", number(l.alpha)},
              {"beta", number(l.beta)},
              {"p_value", number(l.p_value)},
              {"residual_sd", number(l.residual_sd)},
              {"n_train", l.n_train},
              {"usable", l.usable}};
}

raft::RaftLink raft_link_from_json(const Json& j) {
  raft::RaftLink l;
  l.predictor_lead = j.at("predictor_lead").get<int>();
  l.alpha = get_number(j, "alpha");
  l.beta = get_number(j, "beta");
  l.p_value = get_number(j, "p_value");
  l.residual_sd = get_number(j, "residual_sd");
  l.n_train = j.at("n_train").get<int>();
  l.usable = j.at("usable").get<bool>();
  return l;
}

Json to_json(const raft::AdjustmentPlan& p) {
  Json links = Json::array();
  for (const auto& [_, link] : p.links) links.push_back(to_json(link));
  return Json{{"target_lead", p.target_lead},
              {"period", p.period},
              {"rule", std::string(raft::to_string(p.rule))},
              {"first_execution_hour", p.first_execution()},
              {"last_execution_hour", p.last_execution()},
              {"links", links}};
}

raft::AdjustmentPlan adjustment_plan_from_json(const Json& j) {
  raft::AdjustmentPlan p;
  p.target_lead = j.at("target_lead").get<int>();
  p.period = j.at("period").get<int>();
  p.rule = raft::parse_period_rule(j.at("rule").get<std::string>());
  for (const auto& lj : j.at("links")) {
    auto link = raft_link_from_json(lj);
    link.target_lead = p.target_lead;
    if (!p.covers(link.predictor_lead)) {
      throw DataError("link from lead " + std::to_string(link.predictor_lead) + " outside the plan of lead " +
                      std::to_string(p.target_lead));
    }
    p.links.emplace(link.predictor_lead, link);
  }
  return p;
}

Json to_json(const raft::RaftModel& model) {
  Json cells = Json::array();
  for (const auto& [key, plans] : model.cells()) {
    Json pj = Json::array();
    for (const auto& plan : plans) pj.push_back(to_json(plan));
    cells.push_back(Json{{"station", key.station}, {"init_hour", key.init_hour}, {"plans", pj}});
  }
  return Json{{"cells", cells}};
}

raft::RaftModel raft_model_from_json(const Json& j) {
  return with_context("RAFT model", [&] {
    raft::RaftModel model;
    for (const auto& cj : j.at("cells")) {
      const raft::CellKey key{cj.at("station").get<std::string>(), cj.at("init_hour").get<int>()};
      const auto& pj = cj.at("plans");
      if (pj.size() != static_cast<std::size_t>(kMaxLead)) throw DataError("a cell needs 36 plans");
      raft::CellPlans plans;
      for (std::size_t i = 0; i < plans.size(); ++i) {
        plans[i] = adjustment_plan_from_json(pj[i]);
        if (plans[i].target_lead != static_cast<int>(i) + 1) throw DataError("plans out of lead order");
        plans[i].station = key.station;
        plans[i].init_hour = key.init_hour;
      }
      model.set(key, std::move(plans));
    }
    return model;
  });
}

Json to_json(std::span<const verify::VerificationReport> reports) {
  Json arr = Json::array();
  for (const auto& r : reports) {
    Json ci = nullptr;
    if (r.ci) ci = Json{{"low", number(r.ci->low)}, {"high", number(r.ci->high)}};
    arr.push_back(Json{{"panel", r.panel},
                       {"metric", r.metric.name()},
                       {"slice", r.slice.describe()},
                       {"n", r.n},
                       {"value", number(r.value)},
                       {"ci", ci}});
  }
  return arr;
}

}  // namespace traject
