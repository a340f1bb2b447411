#pragma once

// Plot-ready report layouts for each evaluation figure and table.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "traject/core.hpp"
#include "traject/cycle.hpp"
#include "traject/verify.hpp"

namespace traject::figures {

enum class Figure : std::uint8_t { Table1, Fig7, Fig8, Fig9, Fig10, Fig11, Fig12 };

std::string_view to_string(Figure f);
Figure parse_figure(std::string_view text);

struct Table {
  std::string name;  ///< file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct FigureResult {
  std::vector<verify::VerificationReport> reports;
  std::vector<verify::LabeledHistogram> histograms;
  std::vector<Table> tables;
};

struct FigureInputs {
  const Dataset* data{};
  const cycle::CycleLedger* ledger{};
  /// Extra filter applied before the figure's own slicing.
  std::optional<verify::ScoreSlice> slice;
  verify::BootstrapOptions bootstrap{};
  std::uint64_t seed{1};
};

/// Raw and EMOS CRPS and RMSE over the lead bands 1-12, 13-24, 25-36 with
/// 95% bootstrap intervals.
FigureResult table1(const FigureInputs& in);
/// RMSE of EMOS and RAFT by lead for one station and the 03 run; panel "a"
/// stops adjusting at hour 15, panel "b" adjusts to the end.
FigureResult fig7(const FigureInputs& in);
/// RAFT RMSE per run and hour of day with 90% intervals, plus paired
/// differences between each new run and its predecessor.
FigureResult fig8(const FigureInputs& in);
/// As fig7 for the 21 run over all stations; panel "a" is the state at hour 1.
FigureResult fig9(const FigureInputs& in);
/// Per-station EMOS and RAFT RMSE and CRPS, tagged with site type.
FigureResult fig10(const FigureInputs& in);
/// Raw rank histograms and EMOS/RAFT PIT histograms per site type, with
/// uniformity tests and 11/13 coverage.
FigureResult fig11(const FigureInputs& in);
/// RAFT RMSE skill over EMOS by season and hour of day.
FigureResult fig12(const FigureInputs& in);

FigureResult make_figure(Figure f, const FigureInputs& in);

/// Every metric for every system over the lead bands and the whole set.
FigureResult summary(const FigureInputs& in);

/// report.json, report.csv, histograms.csv and one CSV per table in `dir`.
void write_figure(const std::filesystem::path& dir, const FigureResult& result);

}  // namespace traject::figures
