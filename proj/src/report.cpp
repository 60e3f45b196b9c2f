#include "trustguard/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "trustguard/error.hpp"

namespace trustguard {

namespace {

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pm(double mean, double sd) { return fixed(mean) + "±" + fixed(sd); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * (kH - kTop - kBottom); }
};

void axes(std::ostream& out, const Frame& f, const std::string& title, const std::string& xl, const std::string& yl) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  const double bx = kLeft, by = kH - kBottom, ex = kW - kRight, ey = kTop;
  out << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << ex << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << bx << "\" y2=\"" << ey << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    out << "<text x=\"" << f.px(xv) << "\" y=\"" << by + 16 << "\" text-anchor=\"middle\">" << fixed(xv, 2)
        << "</text>\n";
    out << "<text x=\"" << bx - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << fixed(yv, 3)
        << "</text>\n";
  }
  out << "<text x=\"" << (bx + ex) / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">" << escape(xl)
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << (by + ey) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (by + ey) / 2 << ")\">" << escape(yl) << "</text>\n";
}

void legend(std::ostream& out, std::size_t i, const std::string& name) {
  const double y = kTop + 10 + 18 * static_cast<double>(i);
  out << "<rect x=\"" << kW - kRight + 12 << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\""
      << kPalette[i % 6] << "\"/>\n";
  out << "<text x=\"" << kW - kRight + 30 << "\" y=\"" << y + 2 << "\">" << escape(name) << "</text>\n";
}

}  // namespace

void write_metric_table(std::ostream& out, std::span<const ReportRow> rows) {
  out << "| Task | Model | MCC | AUC | BA | F1-macro |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    const auto& m = r.report->mean;
    const auto& s = r.report->stddev;
    out << "| " << r.task << " | " << r.model << " | " << pm(m.mcc, s.mcc) << " | " << pm(m.auc, s.auc) << " | "
        << pm(m.ba, s.ba) << " | " << pm(m.f1, s.f1) << " |\n";
  }
}

void write_run_records(std::ostream& out, const MetricReport& report) {
  out << "seed,train_upto,skipped,mcc,auc,ba,f1,test_edges,epochs,split_hash,malicious_coefficient,"
         "benign_coefficient\n";
  out.precision(10);
  for (const auto& r : report.runs) {
    out << r.seed << ',' << r.train_upto << ',' << (r.skipped ? 1 : 0) << ',' << r.values.mcc << ','
        << r.values.auc << ',' << r.values.ba << ',' << r.values.f1 << ',' << r.test_edges << ',' << r.epochs
        << ',' << r.split_hash << ',';
    if (r.coefficients) out << r.coefficients->malicious_mean << ',' << r.coefficients->benign_mean;
    else out << ',';
    out << '\n';
  }
}

void write_sweep_records(std::ostream& out, std::span<const SweepPoint> points) {
  out << "value,mcc,mcc_std,auc,auc_std,ba,f1\n";
  out.precision(10);
  for (const auto& p : points) {
    const auto& m = p.report.mean;
    out << p.value << ',' << m.mcc << ',' << p.report.stddev.mcc << ',' << m.auc << ',' << p.report.stddev.auc
        << ',' << m.ba << ',' << m.f1 << '\n';
  }
}

void write_line_plot_svg(std::ostream& out, const std::string& title, const std::string& x_label,
                         const std::string& y_label, std::span<const PlotSeries> series) {
  Frame f{INFINITY, -INFINITY, INFINITY, -INFINITY};
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) fail(ErrorKind::Dimension, "plot series '" + s.name + "' has unequal x and y");
    for (double x : s.x) f.x0 = std::min(f.x0, x), f.x1 = std::max(f.x1, x);
    for (double y : s.y) f.y0 = std::min(f.y0, y), f.y1 = std::max(f.y1, y);
  }
  if (!std::isfinite(f.x0)) f = {0, 1, 0, 1};
  const double pad = (f.y1 - f.y0) * 0.05;
  f.y0 -= pad;
  f.y1 += pad;
  axes(out, f, title, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 6] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) out << f.px(s.x[k]) << ',' << f.py(s.y[k]) << ' ';
    out << "\"/>\n";
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      out << "<circle cx=\"" << f.px(s.x[k]) << "\" cy=\"" << f.py(s.y[k]) << "\" r=\"3\" fill=\"" << kPalette[i % 6]
          << "\"/>\n";
    }
    legend(out, i, s.name);
  }
  out << "</svg>\n";
}

void write_histogram_svg(std::ostream& out, const std::string& title,
                         std::span<const std::pair<std::string, std::vector<double>>> groups, std::size_t bins,
                         double lo, double hi) {
  if (bins == 0 || !(hi > lo)) fail(ErrorKind::Config, "histogram needs bins > 0 and hi > lo");
  std::vector<std::vector<double>> share(groups.size(), std::vector<double>(bins, 0.0));
  double top = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (double v : groups[g].second) {
      const auto b = static_cast<std::size_t>(std::clamp((v - lo) / (hi - lo), 0.0, 1.0) * static_cast<double>(bins));
      share[g][std::min(b, bins - 1)] += 1.0;
    }
    for (double& s : share[g]) {
      s /= std::max<double>(1.0, static_cast<double>(groups[g].second.size()));
      top = std::max(top, s);
    }
  }
  Frame f{lo, hi, 0.0, top > 0 ? top : 1.0};
  axes(out, f, title, "coefficient", "share of edges");
  const double width = (f.px(hi) - f.px(lo)) / static_cast<double>(bins);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double x = f.px(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
      const double y = f.py(share[g][b]);
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << width << "\" height=\"" << f.py(0) - y
          << "\" fill=\"" << kPalette[g % 6] << "\" fill-opacity=\"0.45\"/>\n";
    }
    legend(out, g, groups[g].first);
  }
  out << "</svg>\n";
}

}  // namespace trustguard
