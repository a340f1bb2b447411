#include "traject/figures.hpp"

#include <fstream>
#include <random>

#include "csv.hpp"
#include "traject/error.hpp"

namespace traject::figures {

using verify::Metric;
using verify::MetricKind;
using verify::ScoreSlice;
using verify::System;
using verify::VerificationCase;
using verify::VerificationReport;

namespace {

constexpr std::array<std::pair<int, int>, 3> kLeadBands{{{1, 12}, {13, 24}, {25, 36}}};

template <class T>
void fill(std::optional<T>& target, const std::optional<T>& fallback) {
  if (!target) target = fallback;
}

/// Figure slice with any unset field taken from the user's slice.
ScoreSlice merged(ScoreSlice figure, const std::optional<ScoreSlice>& user) {
  if (!user) return figure;
  fill(figure.station, user->station);
  fill(figure.site_type, user->site_type);
  fill(figure.init_hour, user->init_hour);
  if (!figure.lead_min && !figure.lead_max) {
    figure.lead_min = user->lead_min;
    figure.lead_max = user->lead_max;
  }
  fill(figure.season, user->season);
  fill(figure.hour_of_day, user->hour_of_day);
  return figure;
}

std::vector<VerificationCase> cases(const FigureInputs& in, const cycle::Snapshot& snapshot) {
  if (in.data == nullptr || in.ledger == nullptr) throw ConfigError("figure inputs need a dataset and a ledger");
  auto all = cycle::cases_from_ledger(*in.ledger, *in.data, snapshot);
  if (!in.slice) return all;
  std::vector<VerificationCase> out;
  for (auto& c : all) {
    if (in.slice->accepts(c)) out.push_back(std::move(c));
  }
  return out;
}

bool any_case(std::span<const VerificationCase> cs, const ScoreSlice& slice) {
  for (const auto& c : cs) {
    if (slice.accepts(c)) return true;
  }
  return false;
}

/// Aggregates when the slice has cases; empty slices are left out of figures.
void add_report(FigureResult& out, std::span<const VerificationCase> cs, const ScoreSlice& slice, Metric metric,
                const std::string& panel = {}, const std::optional<verify::BootstrapOptions>& boot = std::nullopt) {
  if (!any_case(cs, slice)) return;
  auto r = verify::aggregate(cs, slice, metric, boot);
  r.panel = panel;
  out.reports.push_back(std::move(r));
}

std::optional<double> value_of(const FigureResult& out, const std::string& panel, const std::string& metric,
                               const std::string& slice) {
  for (const auto& r : out.reports) {
    if (r.panel == panel && r.metric.name() == metric && r.slice.describe() == slice) return r.value;
  }
  return std::nullopt;
}

std::string num(std::optional<double> v) { return v ? csv::format_number(*v) : std::string{}; }

std::string first_station(const FigureInputs& in) {
  if (in.slice && in.slice->station) return *in.slice->station;
  if (in.ledger->records().empty()) throw DataError("the ledger is empty");
  return in.ledger->records().front().station;
}

/// Shared layout of the two lead-time RMSE figures.
FigureResult rmse_by_lead(const FigureInputs& in, ScoreSlice base, const cycle::Snapshot& partial) {
  FigureResult out;
  const auto snap_a = cases(in, partial);
  const auto snap_b = cases(in, cycle::Snapshot::final_forecasts());
  Table table{"rmse_by_lead", {"lead", "n", "rmse_emos", "rmse_raft_a", "rmse_raft_b"}, {}};
  for (int l = 1; l <= kMaxLead; ++l) {
    auto slice = base;
    slice.lead_min = slice.lead_max = l;
    slice = merged(slice, in.slice);
    add_report(out, snap_b, slice, {MetricKind::Rmse, System::Emos});
    add_report(out, snap_a, slice, {MetricKind::Rmse, System::Raft}, "a");
    add_report(out, snap_b, slice, {MetricKind::Rmse, System::Raft}, "b");
    const auto key = slice.describe();
    const auto emos = value_of(out, "", "rmse_emos", key);
    if (!emos) continue;
    std::size_t n = 0;
    for (const auto& c : snap_b) n += slice.accepts(c) ? 1 : 0;
    table.rows.push_back({std::to_string(l), std::to_string(n), num(emos), num(value_of(out, "a", "rmse_raft", key)),
                          num(value_of(out, "b", "rmse_raft", key))});
  }
  out.tables.push_back(std::move(table));
  return out;
}

}  // namespace

std::string_view to_string(Figure f) {
  switch (f) {
    case Figure::Table1: return "table1";
    case Figure::Fig7: return "fig7";
    case Figure::Fig8: return "fig8";
    case Figure::Fig9: return "fig9";
    case Figure::Fig10: return "fig10";
    case Figure::Fig11: return "fig11";
    case Figure::Fig12: return "fig12";
  }
  return "?";
}

Figure parse_figure(std::string_view text) {
  for (auto f : {Figure::Table1, Figure::Fig7, Figure::Fig8, Figure::Fig9, Figure::Fig10, Figure::Fig11,
                 Figure::Fig12}) {
    if (to_string(f) == text) return f;
  }
  throw ConfigError("unknown figure '" + std::string(text) + "' (expected table1 or fig7..fig12)");
}

FigureResult table1(const FigureInputs& in) {
  FigureResult out;
  const auto cs = cases(in, cycle::Snapshot::final_forecasts());
  auto boot = in.bootstrap;
  boot.level = 0.95;
  const std::array<Metric, 4> metrics{{{MetricKind::Crps, System::Raw},
                                       {MetricKind::Crps, System::Emos},
                                       {MetricKind::Rmse, System::Raw},
                                       {MetricKind::Rmse, System::Emos}}};
  Table table{"table1", {"lead_band", "n", "crps_raw", "crps_emos", "rmse_raw", "rmse_emos"}, {}};
  for (auto [lo, hi] : kLeadBands) {
    const auto slice = merged(ScoreSlice::lead_band(lo, hi), in.slice);
    std::vector<std::string> row{std::to_string(lo) + "-" + std::to_string(hi), ""};
    for (const auto& m : metrics) {
      add_report(out, cs, slice, m, {}, boot);
      row.push_back(num(value_of(out, "", m.name(), slice.describe())));
    }
    if (!out.reports.empty()) row[1] = std::to_string(out.reports.back().n);
    table.rows.push_back(std::move(row));
  }
  out.tables.push_back(std::move(table));
  return out;
}

FigureResult fig7(const FigureInputs& in) {
  ScoreSlice base;
  base.station = first_station(in);
  base.init_hour = 3;
  return rmse_by_lead(in, base, cycle::Snapshot::at_hour(15));
}

FigureResult fig9(const FigureInputs& in) {
  ScoreSlice base;
  base.init_hour = 21;
  return rmse_by_lead(in, base, cycle::Snapshot::at_hour(1));
}

FigureResult fig8(const FigureInputs& in) {
  FigureResult out;
  const auto cs = cases(in, cycle::Snapshot::final_forecasts());
  const auto comparison = cycle::run_comparison(cs, in.bootstrap);
  for (const auto& s : comparison.scores) {
    ScoreSlice slice;
    slice.init_hour = s.init_hour;
    slice.lead_min = slice.lead_max = s.lead;
    slice.hour_of_day = s.hour_of_day;
    out.reports.push_back({{MetricKind::Rmse, System::Raft}, merged(slice, in.slice), s.n, s.rmse.mean, s.rmse, {}});
  }

  Table ranking{"ranking", {"hour_of_day", "newest_run", "best_run", "ranked_runs"}, {}};
  const auto newest = comparison.selection(cycle::RunSelection::NewestRun);
  const auto best = comparison.selection(cycle::RunSelection::BestByTimeOfDay);
  for (std::size_t tod = 0; tod < 24; ++tod) {
    std::string ranked;
    for (int init : comparison.ranking[tod]) ranked += (ranked.empty() ? "" : " ") + std::to_string(init);
    ranking.rows.push_back({std::to_string(tod), std::to_string(newest[tod]), std::to_string(best[tod]), ranked});
  }
  out.tables.push_back(std::move(ranking));

  Table transitions{"transitions",
                    {"new_init", "previous_init", "hour_of_day", "hours_after_init", "n", "rmse_new_minus_previous",
                     "ci_low", "ci_high"},
                    {}};
  for (int init : kInitHours) {
    const int previous = (init + 18) % 24;
    for (int k = 1; k <= 6; ++k) {
      const int tod = (init + k) % 24;
      try {
        const auto d = cycle::compare_runs(cs, tod, init, previous, in.bootstrap);
        transitions.rows.push_back({std::to_string(init), std::to_string(previous), std::to_string(tod),
                                    std::to_string(k), std::to_string(d.n), num(d.difference.mean),
                                    num(d.difference.low), num(d.difference.high)});
      } catch (const DataError&) {
        // no matched cases at this hour
      }
    }
  }
  for (int k = 1; k <= 6; ++k) {
    try {
      const auto d = cycle::transition_difference(cs, k, in.bootstrap);
      transitions.rows.push_back({"all", "previous", "", std::to_string(k), std::to_string(d.n),
                                  num(d.difference.mean), num(d.difference.low), num(d.difference.high)});
    } catch (const DataError&) {
      // no matched cases at this offset
    }
  }
  out.tables.push_back(std::move(transitions));
  return out;
}

FigureResult fig10(const FigureInputs& in) {
  FigureResult out;
  const auto cs = cases(in, cycle::Snapshot::final_forecasts());
  Table table{"stations", {"station", "site_type", "n", "rmse_emos", "rmse_raft", "crps_emos", "crps_raft"}, {}};
  for (const auto& st : in.data->stations()) {
    ScoreSlice slice;
    slice.station = st.id;
    slice.site_type = st.site_type;
    slice = merged(slice, in.slice);
    if (!any_case(cs, slice)) continue;
    for (auto kind : {MetricKind::Rmse, MetricKind::Crps}) {
      for (auto sys : {System::Emos, System::Raft}) add_report(out, cs, slice, {kind, sys});
    }
    const auto key = slice.describe();
    table.rows.push_back({st.id, std::string(to_string(st.site_type)), std::to_string(out.reports.back().n),
                          num(value_of(out, "", "rmse_emos", key)), num(value_of(out, "", "rmse_raft", key)),
                          num(value_of(out, "", "crps_emos", key)), num(value_of(out, "", "crps_raft", key))});
  }
  out.tables.push_back(std::move(table));
  return out;
}

FigureResult fig11(const FigureInputs& in) {
  FigureResult out;
  const auto cs = cases(in, cycle::Snapshot::final_forecasts());
  std::mt19937_64 rng(in.seed);
  Table table{"calibration", {"label", "kind", "n", "chi_square_p", "dispersion"}, {}};
  std::vector<std::optional<SiteType>> groups{SiteType::Coastal, SiteType::Inland, SiteType::Mountain, std::nullopt};
  for (const auto& group : groups) {
    ScoreSlice slice;
    slice.site_type = group;
    slice = merged(slice, in.slice);
    std::vector<int> ranks;
    std::vector<double> pit_emos;
    std::vector<double> pit_raft;
    for (const auto& c : cs) {
      if (!slice.accepts(c)) continue;
      if (c.members) ranks.push_back(verify::rank(*c.members, c.y, rng));
      pit_emos.push_back(verify::pit(c.emos, c.y));
      pit_raft.push_back(verify::pit({c.raft_mu, c.emos.sigma2}, c.y));
    }
    if (pit_emos.empty()) continue;
    const std::string tag = group ? std::string(to_string(*group)) : "all";
    auto add = [&](const std::string& label, verify::Histogram h) {
      table.rows.push_back({label, h.kind == verify::HistogramKind::Rank ? "rank" : "pit", std::to_string(h.total()),
                            num(verify::chi_square_uniform_pvalue(h)), num(verify::histogram_dispersion(h))});
      out.histograms.push_back({label, std::move(h)});
    };
    if (!ranks.empty()) add("raw_" + tag, verify::rank_histogram(ranks));
    add("emos_" + tag, verify::pit_histogram(pit_emos));
    add("raft_" + tag, verify::pit_histogram(pit_raft));
    for (auto sys : {System::Raw, System::Emos, System::Raft}) {
      if (sys == System::Raw && ranks.size() != pit_emos.size()) continue;
      add_report(out, cs, slice, {MetricKind::Coverage, sys});
    }
  }
  out.tables.push_back(std::move(table));
  return out;
}

FigureResult fig12(const FigureInputs& in) {
  FigureResult out;
  const auto cs = cases(in, cycle::Snapshot::final_forecasts());
  Table table{"skill", {"season", "hour_of_day", "n", "rmse_emos", "rmse_raft", "skill"}, {}};
  for (auto season : {verify::Season::DJF, verify::Season::MAM, verify::Season::JJA, verify::Season::SON}) {
    for (int tod = 0; tod < 24; ++tod) {
      ScoreSlice slice;
      slice.season = season;
      slice.hour_of_day = tod;
      slice = merged(slice, in.slice);
      if (!any_case(cs, slice)) continue;
      add_report(out, cs, slice, {MetricKind::Rmse, System::Emos});
      add_report(out, cs, slice, {MetricKind::Rmse, System::Raft});
      const auto key = slice.describe();
      const auto emos = value_of(out, "", "rmse_emos", key);
      const auto raft = value_of(out, "", "rmse_raft", key);
      std::optional<double> skill;
      if (emos && raft && *emos > 0.0) skill = verify::skill_score(*raft, *emos);
      table.rows.push_back({std::string(verify::to_string(season)), std::to_string(tod),
                            std::to_string(out.reports.back().n), num(emos), num(raft), num(skill)});
    }
  }
  out.tables.push_back(std::move(table));
  return out;
}

FigureResult make_figure(Figure f, const FigureInputs& in) {
  switch (f) {
    case Figure::Table1: return table1(in);
    case Figure::Fig7: return fig7(in);
    case Figure::Fig8: return fig8(in);
    case Figure::Fig9: return fig9(in);
    case Figure::Fig10: return fig10(in);
    case Figure::Fig11: return fig11(in);
    case Figure::Fig12: return fig12(in);
  }
  throw ConfigError("unknown figure");
}

FigureResult summary(const FigureInputs& in) {
  FigureResult out;
  const auto cs = cases(in, cycle::Snapshot::final_forecasts());
  std::vector<ScoreSlice> slices{merged({}, in.slice)};
  for (auto [lo, hi] : kLeadBands) slices.push_back(merged(ScoreSlice::lead_band(lo, hi), in.slice));
  for (const auto& slice : slices) {
    for (auto kind : {MetricKind::Rmse, MetricKind::Crps, MetricKind::Coverage}) {
      for (auto sys : {System::Raw, System::Emos, System::Raft}) add_report(out, cs, slice, {kind, sys});
    }
  }
  if (out.reports.empty()) {
    throw DataError("no verification cases in slice '" + (in.slice ? in.slice->describe() : "all") + "'");
  }
  return out;
}

void write_figure(const std::filesystem::path& dir, const FigureResult& result) {
  std::filesystem::create_directories(dir);
  verify::write_reports(dir / "report.json", dir / "report.csv", result.reports);
  if (!result.histograms.empty()) verify::write_histogram_csv(dir / "histograms.csv", result.histograms);
  for (const auto& t : result.tables) {
    const auto path = dir / (t.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
      out << '\n';
    };
    line(t.header);
    for (const auto& row : t.rows) line(row);
    if (!out) throw DataError("write failed for " + path.string());
  }
}

}  // namespace traject::figures
