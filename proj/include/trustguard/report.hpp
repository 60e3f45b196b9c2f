#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trustguard/harness.hpp"

namespace trustguard {

struct ReportRow {
  std::string task;
  std::string model;
  const MetricReport* report = nullptr;
};

// Markdown table, task x model x metric, mean±std with three decimals.
void write_metric_table(std::ostream& out, std::span<const ReportRow> rows);

// One CSV line per (seed, subtask) run.
void write_run_records(std::ostream& out, const MetricReport& report);

// value,mcc,mcc_std,auc,auc_std,ba,f1
void write_sweep_records(std::ostream& out, std::span<const SweepPoint> points);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_plot_svg(std::ostream& out, const std::string& title, const std::string& x_label,
                         const std::string& y_label, std::span<const PlotSeries> series);

// Overlaid normalised histograms over [lo, hi].
void write_histogram_svg(std::ostream& out, const std::string& title,
                         std::span<const std::pair<std::string, std::vector<double>>> groups, std::size_t bins,
                         double lo, double hi);

}  // namespace trustguard
