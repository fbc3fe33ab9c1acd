#ifndef MSAMPLE_HARNESS_OUTPUT_HPP
#define MSAMPLE_HARNESS_OUTPUT_HPP

// File emission: trace CSVs, small CSV helpers and SVG charts. Every writer
// produces bytes that depend only on its inputs.

#include <msample/coverage.hpp>
#include <msample/dataset_io.hpp>
#include <msample/optimize.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace msample::harness {

using msample::detail::format_double;

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

// ---------------------------------------------------------------------------
// Trace CSV

inline constexpr const char* kTraceHeader =
    "iteration,evaluations_used,best_fitness,mean_pool_score,monitor_accuracy,reinit_flag";

inline std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string s = std::string(kTraceHeader) + "\n";
  for (const auto& r : trace) {
    s += std::to_string(r.iteration) + "," + std::to_string(r.evaluations) + "," + format_double(r.best_fitness) +
         "," + optional_number(r.mean_pool_score) + "," + optional_number(r.monitor_accuracy) + "," +
         (r.reinit ? "1" : "0") + "\n";
  }
  return s;
}

inline std::vector<TraceRow> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw Error("trace CSV header mismatch");
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw Error("trace CSV line " + std::to_string(line_no) + ": expected 6 fields");
    try {
      TraceRow r;
      r.iteration = std::stoull(f[0]);
      r.evaluations = std::stoull(f[1]);
      r.best_fitness = std::stod(f[2]);
      if (!f[3].empty()) r.mean_pool_score = std::stod(f[3]);
      if (!f[4].empty()) r.monitor_accuracy = std::stod(f[4]);
      r.reinit = f[5] == "1";
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw Error("trace CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

inline nlohmann::json trace_to_json(const std::vector<TraceRow>& trace) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : trace) {
    nlohmann::json row = {{"iteration", r.iteration},
                          {"evaluations", r.evaluations},
                          {"best_fitness", r.best_fitness},
                          {"reinit", r.reinit}};
    if (r.mean_pool_score) row["mean_pool_score"] = *r.mean_pool_score;
    if (r.monitor_accuracy) row["monitor_accuracy"] = *r.monitor_accuracy;
    a.push_back(row);
  }
  return a;
}

inline std::vector<TraceRow> trace_from_json(const nlohmann::json& a) {
  std::vector<TraceRow> out;
  for (const auto& row : a) {
    TraceRow r;
    r.iteration = row.at("iteration").get<std::size_t>();
    r.evaluations = row.at("evaluations").get<std::size_t>();
    r.best_fitness = row.at("best_fitness").get<double>();
    r.reinit = row.at("reinit").get<bool>();
    if (row.contains("mean_pool_score")) r.mean_pool_score = row.at("mean_pool_score").get<double>();
    if (row.contains("monitor_accuracy")) r.monitor_accuracy = row.at("monitor_accuracy").get<double>();
    out.push_back(r);
  }
  return out;
}

inline std::string coverage_csv(const CoverageReport& r) {
  std::string s = "iteration,newly_matched,target_size,msc_target,msc_full,cumulative_percent\n";
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& st = r.steps[i];
    s += std::to_string(i + 1) + "," + std::to_string(st.matched.size()) + "," + std::to_string(st.target_size) +
         "," + format_double(st.msc_target) + "," + format_double(st.msc_full) + "," +
         format_double(st.cumulative_percent) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// SVG charts

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (evaluations, best fitness)
};

namespace detail {

inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

}  // namespace detail

/// Best fitness against evaluations, one polyline per series. The y axis is
/// log10 when every value is positive.
inline std::string convergence_svg(const std::vector<Series>& series, const std::string& title = "convergence") {
  require(!series.empty(), "convergence plot needs at least one series");
  for (const auto& s : series) require(!s.points.empty(), "series '" + s.label + "' has an empty trace");
  bool log_y = true;
  double x_max = 0, y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      require(std::isfinite(x) && std::isfinite(y), "series '" + s.label + "' has a non-finite point");
      if (y <= 0) log_y = false;
    }
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, ty(y));
      y_max = std::max(y_max, ty(y));
    }
  if (x_max <= 0) x_max = 1;
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double W = 720, H = 440, L = 70, R = 180, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double x) { return L + pw * x / x_max; };
  auto py = [&](double y) { return T + ph * (1.0 - (ty(y) - y_min) / (y_max - y_min)); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" viewBox=\"0 0 720 440\">\n";
  s += "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
  s += "<text x=\"" + detail::fixed(L) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" +
       detail::xml_escape(title) + "</text>\n";
  s += "<rect x=\"" + detail::fixed(L) + "\" y=\"" + detail::fixed(T) + "\" width=\"" + detail::fixed(pw) +
       "\" height=\"" + detail::fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x_max * k / 4.0;
    const double yv = y_min + (y_max - y_min) * k / 4.0;
    const double gx = L + pw * k / 4.0, gy = T + ph * (1.0 - k / 4.0);
    char lx[32], ly[32];
    std::snprintf(lx, sizeof lx, "%.0f", xv);
    std::snprintf(ly, sizeof ly, log_y ? "1e%.1f" : "%.3g", yv);
    s += "<text x=\"" + detail::fixed(gx) + "\" y=\"" + detail::fixed(T + ph + 18) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + lx + "</text>\n";
    s += "<text x=\"" + detail::fixed(L - 6) + "\" y=\"" + detail::fixed(gy + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + ly + "</text>\n";
  }
  s += "<text x=\"" + detail::fixed(L + pw / 2) + "\" y=\"" + detail::fixed(H - 10) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">evaluations</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    s += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(i)) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      const auto& [x, y] = series[i].points[k];
      if (k) s += ' ';
      s += detail::fixed(px(x)) + "," + detail::fixed(py(y));
    }
    s += "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(i);
    s += "<line x1=\"" + detail::fixed(W - R + 10) + "\" y1=\"" + detail::fixed(ly - 4) + "\" x2=\"" +
         detail::fixed(W - R + 30) + "\" y2=\"" + detail::fixed(ly - 4) + "\" stroke=\"" + detail::palette(i) +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + detail::fixed(W - R + 36) + "\" y=\"" + detail::fixed(ly) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::xml_escape(series[i].label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

inline Series trace_series(const std::string& label, const std::vector<TraceRow>& trace) {
  Series s{label, {}};
  for (const auto& r : trace) s.points.emplace_back(static_cast<double>(r.evaluations), r.best_fitness);
  return s;
}

/// Bars of the newly covered percentage per master plus the cumulative line.
inline std::string coverage_svg(const CoverageReport& r) {
  require(!r.steps.empty(), "coverage plot needs at least one master");
  const double W = 720, H = 400, L = 60, Rm = 20, T = 40, B = 50;
  const double pw = W - L - Rm, ph = H - T - B;
  const double n = static_cast<double>(r.steps.size());
  const double bw = pw / n;
  auto py = [&](double pct) { return T + ph * (1.0 - pct / 100.0); };
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"400\" viewBox=\"0 0 720 400\">\n";
  s += "<rect width=\"720\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"60\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">" + detail::xml_escape(r.mode) +
       " coverage: " + detail::fixed(r.cumulative_percent) + "%</text>\n";
  s += "<rect x=\"60.00\" y=\"40.00\" width=\"" + detail::fixed(pw) + "\" height=\"" + detail::fixed(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double pct = 25.0 * k;
    s += "<text x=\"54.00\" y=\"" + detail::fixed(py(pct) + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + std::to_string(25 * k) + "%</text>\n";
  }
  std::string line;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& st = r.steps[i];
    const double x = L + bw * static_cast<double>(i);
    s += "<rect x=\"" + detail::fixed(x + bw * 0.15) + "\" y=\"" + detail::fixed(py(st.msc_full)) + "\" width=\"" +
         detail::fixed(bw * 0.7) + "\" height=\"" + detail::fixed(ph * st.msc_full / 100.0) +
         "\" fill=\"#1f77b4\"/>\n";
    s += "<text x=\"" + detail::fixed(x + bw / 2) + "\" y=\"" + detail::fixed(T + ph + 18) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + std::to_string(i + 1) +
         "</text>\n";
    if (i) line += ' ';
    line += detail::fixed(x + bw / 2) + "," + detail::fixed(py(st.cumulative_percent));
  }
  s += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"" + line + "\"/>\n";
  s += "<text x=\"" + detail::fixed(L + pw / 2) + "\" y=\"" + detail::fixed(H - 10) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">master</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace msample::harness

#endif  // MSAMPLE_HARNESS_OUTPUT_HPP
