#include "tempo/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "tempo/error.hpp"

namespace tempo::analysis {

namespace {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

DerivativeGrid objective_derivative_grid(const objective::DriftObjective& drift,
                                         double lifetime_frac, double p_min, double p_max,
                                         double a_min, double a_max, int res_p, int res_a) {
  if (res_p < 2 || res_a < 2) throw UsageError("objective_derivative_grid: resolution must be >= 2");
  if (p_min < objective::kRatioMin || p_max > objective::kRatioMax || p_min >= p_max)
    throw UsageError("objective_derivative_grid: p range outside the ratio clamp interval");
  DerivativeGrid grid;
  grid.p_axis = linspace(p_min, p_max, res_p);
  grid.a_axis = linspace(a_min, a_max, res_a);
  grid.lifetime_frac = lifetime_frac;
  grid.values.resize(static_cast<std::size_t>(res_p) * res_a);
  for (int i = 0; i < res_p; ++i) {
    for (int j = 0; j < res_a; ++j) {
      const double a = grid.a_axis[j];
      // derivative of the per-transition objective p*A - D
      grid.values[static_cast<std::size_t>(i) * res_a + j] =
          a - drift.dp(grid.p_axis[i], a, lifetime_frac);
    }
  }
  return grid;
}

double quantize9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::strtod(buf, nullptr);
}

void MetricTrace::append(long long n, double entropy, double update_norm, double return_norm) {
  rows.push_back(TraceRow{n, quantize9(entropy), quantize9(update_norm), quantize9(return_norm)});
}

LifetimeMetrics lifetime_metrics(const std::vector<MetricTrace>& traces) {
  LifetimeMetrics out;
  std::map<long long, std::vector<const MetricTrace*>> by_horizon;
  for (const auto& t : traces) {
    if (t.rows.empty() || t.rows.back().n != t.horizon) {
      out.warnings.push_back("excluding incomplete trace (seed " + std::to_string(t.seed) +
                             ", N " + std::to_string(t.horizon) + ")");
      continue;
    }
    by_horizon[t.horizon].push_back(&t);
  }

  constexpr int kGrid = 256;
  for (const auto& [horizon, group] : by_horizon) {
    HorizonSummary s;
    s.horizon = horizon;
    s.trace_count = static_cast<int>(group.size());

    // piecewise-linear resample of each entropy series onto a shared n/N grid,
    // flat-extended before the first recorded row
    std::vector<double> mean_curve(kGrid, 0.0);
    double norm_sum = 0.0, final_sum = 0.0;
    long long norm_count = 0;
    for (const MetricTrace* t : group) {
      for (int k = 0; k < kGrid; ++k) {
        const double frac = static_cast<double>(k) / (kGrid - 1);
        const double n_target = frac * static_cast<double>(horizon);
        double value;
        if (n_target <= static_cast<double>(t->rows.front().n)) {
          value = t->rows.front().entropy;
        } else {
          value = t->rows.back().entropy;
          for (std::size_t r = 1; r < t->rows.size(); ++r) {
            if (static_cast<double>(t->rows[r].n) >= n_target) {
              const double n0 = static_cast<double>(t->rows[r - 1].n);
              const double n1 = static_cast<double>(t->rows[r].n);
              const double w = n1 > n0 ? (n_target - n0) / (n1 - n0) : 1.0;
              value = t->rows[r - 1].entropy + w * (t->rows[r].entropy - t->rows[r - 1].entropy);
              break;
            }
          }
        }
        mean_curve[k] += value;
      }
      for (const auto& row : t->rows) {
        s.mean_update_norm += row.update_norm;
        ++norm_count;
      }
      final_sum += t->rows.back().return_norm;
      norm_sum += 1.0;
    }
    for (double& v : mean_curve) v /= static_cast<double>(group.size());
    s.mean_update_norm = norm_count > 0 ? s.mean_update_norm / norm_count : 0.0;
    s.final_return = norm_sum > 0 ? final_sum / norm_sum : 0.0;

    const double initial = mean_curve.front();
    const double half = 0.5 * initial;
    s.entropy_half_life = 1.0;
    for (int k = 1; k < kGrid; ++k) {
      if (mean_curve[k] < half) {
        const double f0 = static_cast<double>(k - 1) / (kGrid - 1);
        const double f1 = static_cast<double>(k) / (kGrid - 1);
        const double e0 = mean_curve[k - 1], e1 = mean_curve[k];
        const double w = e0 > e1 ? (e0 - half) / (e0 - e1) : 1.0;
        s.entropy_half_life = f0 + w * (f1 - f0);
        break;
      }
    }
    out.per_horizon.push_back(s);
  }

  out.half_life_nondecreasing = out.per_horizon.size() >= 1;
  for (std::size_t i = 1; i < out.per_horizon.size(); ++i) {
    if (out.per_horizon[i].entropy_half_life >= out.per_horizon[i - 1].entropy_half_life)
      ++out.half_life_nondecreasing_pairs;
    else
      out.half_life_nondecreasing = false;
  }
  return out;
}

void write_trace_csv(std::ostream& os, std::span<const MetricTrace> traces) {
  os << "experiment_id,seed,N,n,entropy,update_norm,eval_return_normalized\n";
  for (const auto& t : traces) {
    for (const auto& row : t.rows) {
      os << t.experiment_id << ',' << t.seed << ',' << t.horizon << ',' << row.n << ','
         << fmt9(row.entropy) << ',' << fmt9(row.update_norm) << ',' << fmt9(row.return_norm)
         << '\n';
    }
  }
}

std::vector<MetricTrace> parse_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("parse_trace_csv: missing header");
  if (line != "experiment_id,seed,N,n,entropy,update_norm,eval_return_normalized")
    throw IoError("parse_trace_csv: unexpected header: " + line);
  std::vector<MetricTrace> traces;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<std::string, 7> fields;
    std::size_t start = 0;
    for (int f = 0; f < 7; ++f) {
      const std::size_t comma = line.find(',', start);
      if (f < 6 && comma == std::string::npos)
        throw IoError("parse_trace_csv: malformed row: " + line);
      fields[f] = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      start = comma + 1;
    }
    const std::uint64_t seed = std::strtoull(fields[1].c_str(), nullptr, 10);
    const long long horizon = std::strtoll(fields[2].c_str(), nullptr, 10);
    if (traces.empty() || traces.back().experiment_id != fields[0] ||
        traces.back().seed != seed || traces.back().horizon != horizon) {
      MetricTrace t;
      t.experiment_id = fields[0];
      t.seed = seed;
      t.horizon = horizon;
      traces.push_back(std::move(t));
    }
    TraceRow row;
    row.n = std::strtoll(fields[3].c_str(), nullptr, 10);
    row.entropy = std::strtod(fields[4].c_str(), nullptr);
    row.update_norm = std::strtod(fields[5].c_str(), nullptr);
    row.return_norm = std::strtod(fields[6].c_str(), nullptr);
    traces.back().rows.push_back(row);
  }
  return traces;
}

void write_grid_csv(std::ostream& os, const DerivativeGrid& grid) {
  os << "# lifetime_frac " << fmt9(grid.lifetime_frac) << "\n";
  os << "p,A,value\n";
  for (std::size_t i = 0; i < grid.p_axis.size(); ++i)
    for (std::size_t j = 0; j < grid.a_axis.size(); ++j)
      os << fmt9(grid.p_axis[i]) << ',' << fmt9(grid.a_axis[j]) << ','
         << fmt9(grid.values[i * grid.a_axis.size() + j]) << '\n';
}

PaletteColor diverging_color(double v, double vmax) {
  PaletteColor c;
  if (vmax <= 0.0) return c;
  const double t = std::clamp(v / vmax, -1.0, 1.0);
  if (t >= 0.0) {
    const int x = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    c = {255, x, x};
  } else {
    const int x = static_cast<int>(std::lround(255.0 * (1.0 + t)));
    c = {x, x, 255};
  }
  return c;
}

std::string render_grid_svg(const DerivativeGrid& grid) {
  constexpr int kCell = 8;
  const int np = static_cast<int>(grid.p_axis.size());
  const int na = static_cast<int>(grid.a_axis.size());
  double vmax = 0.0;
  for (double v : grid.values) vmax = std::max(vmax, std::abs(v));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << np * kCell << "\" height=\""
     << na * kCell << "\">\n";
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < na; ++j) {
      const PaletteColor c = diverging_color(grid.at(i, j), vmax);
      char fill[8];
      std::snprintf(fill, sizeof(fill), "#%02x%02x%02x", c.r, c.g, c.b);
      // p increases rightward, A increases upward
      os << "<rect x=\"" << i * kCell << "\" y=\"" << (na - 1 - j) * kCell << "\" width=\""
         << kCell << "\" height=\"" << kCell << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

std::string frac_tag(double frac) {
  std::string s = fmt9(frac);
  for (char& ch : s)
    if (ch == '.' || ch == '-') ch = '_';
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << content;
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace

void export_artifacts(std::span<const DerivativeGrid> grids, std::span<const MetricTrace> traces,
                      const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());
  {
    std::ostringstream os;
    write_trace_csv(os, traces);
    write_file(out_dir / "traces.csv", os.str());
  }
  for (const auto& grid : grids) {
    const std::string tag = frac_tag(grid.lifetime_frac);
    std::ostringstream os;
    write_grid_csv(os, grid);
    write_file(out_dir / ("grid_frac" + tag + ".csv"), os.str());
    write_file(out_dir / ("grid_frac" + tag + ".svg"), render_grid_svg(grid));
  }
}

}  // namespace tempo::analysis
