#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cmiknn/dataset.hpp"
#include "cmiknn/estimator.hpp"

namespace cmiknn {

/// Named equal-length real-valued series sampled on a fixed grid.
struct TimeSeriesTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // columns[i] belongs to names[i]
  std::string period;  // e.g. "5min"; informational only
  std::string units;

  std::size_t length() const { return columns.empty() ? 0 : columns[0].size(); }
  const std::vector<double>& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

enum class DropPolicy { drop_row, error };

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

/// Reads the named columns from a headered CSV. Rows where any named cell is
/// missing or unparsable are dropped (counted) or fatal, per policy.
TimeSeriesTable ingest_csv(const std::string& path,
                           const std::vector<std::string>& schema,
                           DropPolicy policy, IngestReport* report = nullptr);

/// Reduces a directed-information target to one conditional-independence
/// dataset via sliding lag windows of order l: per window ending at t,
/// X-role = source values t-l+1..t (oldest first), Y-role = target value at t,
/// Z-role = each conditioned series' values t-l+1..t followed by the target's
/// own history t-l+1..t-1. Emits length - l + 1 samples. When standardize is
/// set (default), every series is shifted/scaled to zero mean and unit
/// variance first.
Dataset lag_embed(const TimeSeriesTable& table, const std::string& source,
                  const std::string& target,
                  const std::vector<std::string>& conditioned, int l,
                  bool standardize = true);

struct DIParams {
  int l = 3;
  bool standardize = true;
  EstimatorKind estimator = EstimatorKind::dv;
  Algorithm1Params algorithm;
};

/// Directed information from source to target, causally conditioned on the
/// remaining series: lag-embeds and estimates the resulting conditional
/// mutual information. Returns the chosen estimator's trial average; the full
/// report is available through the optional out-parameter.
double estimate_di(const TimeSeriesTable& table, const std::string& source,
                   const std::string& target,
                   const std::vector<std::string>& conditioned,
                   const DIParams& params, const NetConfig& net,
                   std::uint64_t seed, EstimateReport* full_report = nullptr);

/// Directed-information graph over exactly three processes; weights[a][b] is
/// the estimated flow a -> b conditioned on the third process. Diagonal zero.
struct DIGraph {
  std::array<std::string, 3> nodes;
  std::array<std::array<double, 3>, 3> weights{};
};

DIGraph build_digraph(const TimeSeriesTable& table,
                      const std::array<std::string, 3>& node_names,
                      const DIParams& params, const NetConfig& net,
                      std::uint64_t seed);

}  // namespace cmiknn
