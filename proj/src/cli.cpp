#include "traject/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "traject/cycle.hpp"
#include "traject/emos.hpp"
#include "traject/error.hpp"
#include "traject/figures.hpp"
#include "traject/ingest.hpp"
#include "traject/raft.hpp"
#include "traject/serialize.hpp"

namespace traject::cli {

namespace fs = std::filesystem;

namespace {

Json config_echo(const RunConfig& c) {
  Json j{{"subcommand", c.subcommand},
         {"data_dir", c.data_dir.generic_string()},
         {"model_dir", c.model_dir.generic_string()},
         {"report_dir", c.report_dir.generic_string()},
         {"seed", c.seed},
         {"init_hours", c.init_hours},
         {"policy", c.policy},
         {"until_lead", c.until_lead ? Json(*c.until_lead) : Json(nullptr)},
         {"figure", c.figure ? Json(*c.figure) : Json(nullptr)},
         {"slice", c.slice ? Json(*c.slice) : Json(nullptr)},
         {"workers", c.workers}};
  if (c.subcommand == "synth") {
    j["days"] = c.days;
    j["stations"] = c.stations;
    j["training_days"] = c.training_days;
    j["spinup_days"] = c.spinup_days;
  }
  return j;
}

void write_config_echo(const fs::path& dir, const RunConfig& c) {
  write_json_file(dir / (c.subcommand + ".config.json"), config_echo(c));
}

ingest::LoadedDataset load_data(const RunConfig& c) {
  const auto paths = ingest::DatasetPaths::in(c.data_dir);
  for (const auto& p : {paths.manifest, paths.forecasts, paths.observations}) {
    if (!fs::exists(p)) throw MissingArtifactError(p.string(), "synth");
  }
  return ingest::read_dataset(paths);
}

/// First and last init dates that need EMOS forecasts: the training range
/// plus the day before it (previous-day predictors), through the test range.
std::pair<Date, Date> emos_range(const ingest::DatasetManifest& m) {
  return {m.training_range.first - std::chrono::days{1}, m.test_range.last};
}

emos::EmosForecastSet load_emos_forecasts(const RunConfig& c, const Dataset& data) {
  const auto model = read_emos_model(c.model_dir / files::kEmosParams);
  return emos::predict_all(data, model);
}

raft::RaftModel load_raft(const RunConfig& c) {
  const auto path = c.model_dir / files::kRaftModel;
  if (!fs::exists(path)) throw MissingArtifactError(path.string(), "train-raft");
  return raft_model_from_json(read_json_file(path));
}

cycle::CyclePolicy policy_of(const RunConfig& c) {
  if (c.policy == "raft_until") {
    if (!c.until_lead) throw ConfigError("--policy raft_until needs --until-lead");
    return cycle::CyclePolicy::raft_until(*c.until_lead);
  }
  if (c.until_lead) throw ConfigError("--until-lead only applies to --policy raft_until");
  return cycle::CyclePolicy::parse(c.policy);
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const MissingArtifactError*>(&e)) return kExitMissingArtifact;
  if (dynamic_cast<const DataError*>(&e)) return kExitData;
  if (dynamic_cast<const Json::exception*>(&e)) return kExitData;
  return 1;
}

}  // namespace

void cmd_synth(const RunConfig& c, std::ostream& out) {
  ingest::SyntheticConfig config;
  config.seed = c.seed;
  config.n_days = c.days;
  config.n_stations = c.stations;
  config.training_days = c.training_days;
  config.spinup_days = c.spinup_days;
  config.validate();
  const auto synthetic = ingest::generate_synthetic(config);
  fs::create_directories(c.data_dir);
  ingest::write_dataset(synthetic.data, synthetic.manifest, ingest::DatasetPaths::in(c.data_dir));
  write_config_echo(c.data_dir, c);
  out << "wrote " << synthetic.data.forecast_count() << " forecasts for " << synthetic.data.stations().size()
      << " stations to " << c.data_dir.string() << '\n';
}

void cmd_train_emos(const RunConfig& c, std::ostream& out) {
  const auto loaded = load_data(c);
  const auto [first, last] = emos_range(loaded.manifest);
  const auto model = emos::fit_emos_model(loaded.data, first, last, c.workers, {}, c.init_hours);
  std::size_t fitted = 0;
  for (const auto& [_, days] : model.cells()) {
    for (const auto& [__, p] : days) fitted += p.status == emos::FitStatus::Fitted ? 1 : 0;
  }
  write_emos_model(c.model_dir / files::kEmosParams, model);
  write_config_echo(c.model_dir, c);
  out << "fitted " << fitted << " of " << model.size() << " EMOS parameter sets from " << format_date(first) << " to "
      << format_date(last) << '\n';
}

void cmd_train_raft(const RunConfig& c, std::ostream& out) {
  const auto loaded = load_data(c);
  const auto forecasts = load_emos_forecasts(c, loaded.data);
  const auto& range = loaded.manifest.training_range;
  const auto model = raft::train_raft(loaded.data, forecasts, range.first, range.last, c.workers, c.init_hours);
  write_json_file(c.model_dir / files::kRaftModel, to_json(model));
  write_config_echo(c.model_dir, c);
  std::size_t tiered = 0;
  std::size_t plans = 0;
  for (const auto& [_, cell] : model.cells()) {
    for (const auto& plan : cell) {
      ++plans;
      const bool tier = plan.rule == raft::PeriodRule::Tier90 || plan.rule == raft::PeriodRule::Tier95 ||
                        plan.rule == raft::PeriodRule::Tier99;
      tiered += tier ? 1 : 0;
    }
  }
  out << "trained " << plans << " RAFT plans (" << tiered << " from the tiered search) on " << format_date(range.first)
      << " to " << format_date(range.last) << '\n';
}

void cmd_replay(const RunConfig& c, std::ostream& out) {
  const auto policy = policy_of(c);
  const auto loaded = load_data(c);
  const auto forecasts = load_emos_forecasts(c, loaded.data);
  const auto model = policy.mode == cycle::PolicyMode::EmosOnly ? raft::RaftModel{} : load_raft(c);
  const auto& range = loaded.manifest.test_range;
  cycle::ReplayLog log;
  const auto ledger =
      cycle::replay(loaded.data, forecasts, model, policy, range.first, range.last, c.workers, &log, c.init_hours);
  fs::create_directories(c.report_dir);
  cycle::write_ledger_csv(c.report_dir / files::kLedger, ledger);
  {
    std::ofstream log_out(c.report_dir / files::kReplayLog, std::ios::binary);
    for (const auto& m : log.messages) log_out << m << '\n';
  }
  write_config_echo(c.report_dir, c);
  out << "replayed " << ledger.size() << " runs under " << policy.describe() << "; " << log.messages.size()
      << " log messages\n";
}

void cmd_verify(const RunConfig& c, std::ostream& out) {
  std::optional<figures::Figure> figure;
  if (c.figure) figure = figures::parse_figure(*c.figure);
  std::optional<verify::ScoreSlice> slice;
  if (c.slice) slice = verify::ScoreSlice::parse(*c.slice);
  const auto loaded = load_data(c);
  const auto ledger_path = c.report_dir / files::kLedger;
  if (!fs::exists(ledger_path)) throw MissingArtifactError(ledger_path.string(), "replay");
  auto ledger = cycle::read_ledger_csv(ledger_path);
  if (c.init_hours.size() < kInitHours.size()) {
    cycle::CycleLedger kept;
    for (const auto& r : ledger.records()) {
      if (std::ranges::find(c.init_hours, r.cycle.init_hour()) != c.init_hours.end()) kept.append(r);
    }
    ledger = std::move(kept);
  }
  figures::FigureInputs in;
  in.data = &loaded.data;
  in.ledger = &ledger;
  in.slice = slice;
  in.seed = c.seed;
  in.bootstrap.seed = c.seed;
  const auto result = figure ? figures::make_figure(*figure, in) : figures::summary(in);
  const auto dir = figure ? c.report_dir / std::string(figures::to_string(*figure)) : c.report_dir;
  figures::write_figure(dir, result);
  write_config_echo(dir, c);
  out << "wrote " << result.reports.size() << " reports to " << dir.string() << '\n';
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    require_init_hours(c.init_hours);
    if (c.workers < 1) throw ConfigError("--workers must be at least 1");
    if (c.subcommand == "synth") {
      cmd_synth(c, out);
    } else if (c.subcommand == "train-emos") {
      cmd_train_emos(c, out);
    } else if (c.subcommand == "train-raft") {
      cmd_train_raft(c, out);
    } else if (c.subcommand == "replay") {
      cmd_replay(c, out);
    } else if (c.subcommand == "verify") {
      cmd_verify(c, out);
    } else {
      throw ConfigError("unknown subcommand '" + c.subcommand + "'");
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-processing and rapid adjustment of hourly ensemble forecast trajectories"};
  app.require_subcommand(1);
  RunConfig config;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--data-dir", config.data_dir, "dataset directory")->capture_default_str();
    sub->add_option("--model-dir", config.model_dir, "model directory")->capture_default_str();
    sub->add_option("--report-dir", config.report_dir, "ledger and report directory")->capture_default_str();
    sub->add_option("--seed", config.seed, "random seed")->capture_default_str();
    sub->add_option("--init-hours", config.init_hours, "comma-separated init hours")->delimiter(',');
    sub->add_option("--workers", config.workers, "worker threads")->capture_default_str();
  };
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  common(synth);
  synth->add_option("--days", config.days, "days of forecasts")->capture_default_str();
  synth->add_option("--stations", config.stations, "number of stations")->capture_default_str();
  synth->add_option("--training-days", config.training_days, "length of the training range")->capture_default_str();
  synth->add_option("--spinup-days", config.spinup_days, "days before the training range")->capture_default_str();
  common(app.add_subcommand("train-emos", "fit rolling EMOS parameters"));
  common(app.add_subcommand("train-raft", "fit RAFT links and adjustment periods"));
  auto* replay = app.add_subcommand("replay", "replay the forecast cycle over the test range");
  common(replay);
  replay->add_option("--policy", config.policy, "emos_only, raft_full or raft_until")->capture_default_str();
  replay->add_option("--until-lead", config.until_lead, "last hour of RAFT adjustment for raft_until");
  auto* verify = app.add_subcommand("verify", "score the replayed forecasts");
  common(verify);
  verify->add_option("--figure", config.figure, "table1 or fig7..fig12");
  verify->add_option("--slice", config.slice, "filter such as site_type=coastal;lead=1-12");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  config.subcommand = app.get_subcommands().front()->get_name();
  return run(config, out, err);
}

}  // namespace traject::cli
