#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tempo/drift.hpp"

namespace tempo::analysis {

// d(p*A - D)/dp sampled over a (p, A) grid at one lifetime fraction.
struct DerivativeGrid {
  std::vector<double> p_axis;
  std::vector<double> a_axis;
  double lifetime_frac = 0.0;
  std::vector<double> values;  // row-major, p index outer

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * a_axis.size() + j]; }
};

DerivativeGrid objective_derivative_grid(const objective::DriftObjective& drift,
                                         double lifetime_frac, double p_min = 0.5,
                                         double p_max = 1.5, double a_min = -1.0,
                                         double a_max = 1.0, int res_p = 64, int res_a = 64);

// round to the 9 significant decimal digits the trace CSV carries
double quantize9(double v);

struct TraceRow {
  long long n = 0;
  double entropy = 0.0;
  double update_norm = 0.0;
  double return_norm = 0.0;

  bool operator==(const TraceRow&) const = default;
};

// Per-lifetime metric series. Values are quantized on append so a CSV
// round trip reproduces the trace exactly.
struct MetricTrace {
  std::string experiment_id;
  std::uint64_t seed = 0;
  long long horizon = 1;
  std::vector<TraceRow> rows;

  void append(long long n, double entropy, double update_norm, double return_norm);
  bool operator==(const MetricTrace&) const = default;
};

struct HorizonSummary {
  long long horizon = 0;
  double entropy_half_life = 1.0;  // first n/N where entropy < half its initial value; 1.0 if never
  double mean_update_norm = 0.0;
  double final_return = 0.0;
  int trace_count = 0;
};

struct LifetimeMetrics {
  std::vector<HorizonSummary> per_horizon;  // sorted by horizon
  int half_life_nondecreasing_pairs = 0;
  bool half_life_nondecreasing = false;
  std::vector<std::string> warnings;  // incomplete traces are excluded and reported here
};

LifetimeMetrics lifetime_metrics(const std::vector<MetricTrace>& traces);

// Columns: experiment_id,seed,N,n,entropy,update_norm,eval_return_normalized.
// UTF-8, line-feed terminators, reals with 9 significant digits.
void write_trace_csv(std::ostream& os, std::span<const MetricTrace> traces);
std::vector<MetricTrace> parse_trace_csv(std::istream& is);

void write_grid_csv(std::ostream& os, const DerivativeGrid& grid);

struct PaletteColor {
  int r = 255, g = 255, b = 255;
};

// symmetric diverging palette: positive red, negative blue, zero white
PaletteColor diverging_color(double v, double vmax);

std::string render_grid_svg(const DerivativeGrid& grid);

// Writes traces.csv plus one CSV and one SVG per grid; byte-deterministic.
void export_artifacts(std::span<const DerivativeGrid> grids, std::span<const MetricTrace> traces,
                      const std::filesystem::path& out_dir);

}  // namespace tempo::analysis
