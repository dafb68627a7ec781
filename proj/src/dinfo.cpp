#include "cmiknn/dinfo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cmiknn/util.hpp"

namespace cmiknn {
namespace {

bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !cell.empty();
}

std::vector<double> standardized(const std::vector<double>& series) {
  const auto n = static_cast<double>(series.size());
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  double sq = 0.0;
  for (double v : series) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / n);
  std::vector<double> out(series.size());
  // constant series: centering alone, to avoid dividing by zero
  const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
  for (std::size_t i = 0; i < series.size(); ++i)
    out[i] = (series[i] - mean) * scale;
  return out;
}

}  // namespace

const std::vector<double>& TimeSeriesTable::column(
    const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return columns[i];
  throw std::invalid_argument("TimeSeriesTable: no column named '" + name + "'");
}

bool TimeSeriesTable::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

TimeSeriesTable ingest_csv(const std::string& path,
                           const std::vector<std::string>& schema,
                           DropPolicy policy, IngestReport* report) {
  if (schema.empty())
    throw std::invalid_argument("ingest_csv: schema must name at least one column");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("ingest_csv: " + path + " is empty");
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i)
    for (std::size_t j = i + 1; j < header.size(); ++j)
      if (header[i] == header[j])
        throw std::runtime_error("ingest_csv: duplicate header column '" +
                                 header[i] + "'");

  std::vector<std::size_t> positions;
  for (const auto& name : schema) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error("ingest_csv: missing column '" + name + "'");
    positions.push_back(static_cast<std::size_t>(it - header.begin()));
  }

  TimeSeriesTable table;
  table.names = schema;
  table.columns.assign(schema.size(), {});

  IngestReport rep;
  std::size_t line_no = 1;
  std::vector<double> row(schema.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    ++rep.rows_read;
    bool ok = true;
    for (std::size_t c = 0; c < positions.size() && ok; ++c) {
      if (positions[c] >= cells.size() || !parse_double(cells[positions[c]], row[c]))
        ok = false;
    }
    if (!ok) {
      if (policy == DropPolicy::error)
        throw std::runtime_error("ingest_csv: bad row at line " +
                                 std::to_string(line_no) + " of " + path);
      ++rep.rows_dropped;
      continue;
    }
    for (std::size_t c = 0; c < row.size(); ++c)
      table.columns[c].push_back(row[c]);
  }
  if (table.length() == 0)
    throw std::runtime_error("ingest_csv: no usable rows in " + path);
  if (report) *report = rep;
  return table;
}

Dataset lag_embed(const TimeSeriesTable& table, const std::string& source,
                  const std::string& target,
                  const std::vector<std::string>& conditioned, int l,
                  bool standardize) {
  if (l < 1) throw std::invalid_argument("lag_embed: l must be >= 1");
  const std::size_t ts = table.length();
  if (static_cast<std::size_t>(l) > ts)
    throw std::invalid_argument("lag_embed: l exceeds the series length");

  std::vector<double> src = table.column(source);
  std::vector<double> tgt = table.column(target);
  std::vector<std::vector<double>> cond;
  for (const auto& name : conditioned) cond.push_back(table.column(name));
  if (standardize) {
    src = standardized(src);
    tgt = standardized(tgt);
    for (auto& c : cond) c = standardized(c);
  }

  const auto nc = static_cast<int>(cond.size());
  RoleDims dims{l, 1, nc * l + (l - 1)};
  const std::size_t count = ts - static_cast<std::size_t>(l) + 1;
  Dataset out(dims, count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t t = w + static_cast<std::size_t>(l) - 1;
    auto xs = out.x(w);
    for (int i = 0; i < l; ++i) xs[i] = src[t - static_cast<std::size_t>(l) + 1 + i];
    out.y(w)[0] = tgt[t];
    auto zs = out.z(w);
    std::size_t zi = 0;
    for (const auto& c : cond)
      for (int i = 0; i < l; ++i)
        zs[zi++] = c[t - static_cast<std::size_t>(l) + 1 + i];
    for (int i = 0; i + 1 < l; ++i)
      zs[zi++] = tgt[t - static_cast<std::size_t>(l) + 1 + i];
  }

  std::string prov = "lag_embed(source=" + source + ",target=" + target + ",cond=[";
  for (std::size_t i = 0; i < conditioned.size(); ++i)
    prov += (i ? "," : "") + conditioned[i];
  prov += "],l=" + std::to_string(l) +
          ",standardized=" + (standardize ? "yes" : "no") + ")";
  out.provenance = prov;
  return out;
}

double estimate_di(const TimeSeriesTable& table, const std::string& source,
                   const std::string& target,
                   const std::vector<std::string>& conditioned,
                   const DIParams& params, const NetConfig& net,
                   std::uint64_t seed, EstimateReport* full_report) {
  const Dataset ds = lag_embed(table, source, target, conditioned, params.l,
                               params.standardize);
  const EstimateReport report =
      run_algorithm1(ds, params.algorithm, net, seed);
  if (full_report) *full_report = report;
  switch (params.estimator) {
    case EstimatorKind::dv: return report.dv.mean;
    case EstimatorKind::nwj: return report.nwj.mean;
    case EstimatorKind::ldr: return report.ldr.mean;
  }
  return report.dv.mean;
}

DIGraph build_digraph(const TimeSeriesTable& table,
                      const std::array<std::string, 3>& node_names,
                      const DIParams& params, const NetConfig& net,
                      std::uint64_t seed) {
  for (const auto& name : node_names)
    if (!table.has_column(name))
      throw std::invalid_argument("build_digraph: no column named '" + name + "'");

  DIGraph graph;
  graph.nodes = node_names;
  Rng master(seed);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      const int c = 3 - a - b;
      const std::uint64_t link_seed =
          master.fork(static_cast<std::uint64_t>(3 * a + b)).next_u64();
      graph.weights[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          estimate_di(table, node_names[static_cast<std::size_t>(a)],
                      node_names[static_cast<std::size_t>(b)],
                      {node_names[static_cast<std::size_t>(c)]}, params, net,
                      link_seed);
    }
  }
  return graph;
}

}  // namespace cmiknn
