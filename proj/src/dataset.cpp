#include "cmiknn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cmiknn/util.hpp"

namespace cmiknn {

Dataset::Dataset(RoleDims dims, std::size_t n) : dims_(dims), n_(n) {
  if (dims.x < 0 || dims.y < 0 || dims.z < 0) {
    throw std::invalid_argument("Dataset: negative role dimension");
  }
  xs_.resize(n * static_cast<std::size_t>(dims.x));
  ys_.resize(n * static_cast<std::size_t>(dims.y));
  zs_.resize(n * static_cast<std::size_t>(dims.z));
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double train_fraction, Rng& rng) {
  const std::size_t n = dataset.size();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: train_fraction must be in (0,1)");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(n)));
  const std::size_t n_test = n - n_train;
  if (n_train == 0 || n_test == 0) {
    throw std::invalid_argument("split_dataset: split would leave an empty part");
  }

  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  shuffle_indices(perm, rng);

  Dataset train(dataset.dims(), n_train);
  Dataset test(dataset.dims(), n_test);
  auto copy_sample = [&](Dataset& dst, std::size_t di, std::size_t si) {
    std::ranges::copy(dataset.x(si), dst.x(di).begin());
    std::ranges::copy(dataset.y(si), dst.y(di).begin());
    std::ranges::copy(dataset.z(si), dst.z(di).begin());
  };
  for (std::size_t i = 0; i < n_train; ++i) copy_sample(train, i, perm[i]);
  for (std::size_t i = 0; i < n_test; ++i) copy_sample(test, i, perm[n_train + i]);
  train.seed = dataset.seed;
  test.seed = dataset.seed;
  train.provenance = dataset.provenance + "/train";
  test.provenance = dataset.provenance + "/test";
  return {std::move(train), std::move(test)};
}

Dataset recompose(const Dataset& source, const std::vector<RoleSlice>& x_sel,
                  const std::vector<RoleSlice>& y_sel,
                  const std::vector<RoleSlice>& z_sel) {
  auto width = [&](const std::vector<RoleSlice>& sel) {
    int total = 0;
    for (const auto& s : sel) {
      if (s.begin < 0 || s.len < 0 ||
          s.begin + s.len > source.dims().of(s.source)) {
        throw std::invalid_argument("recompose: slice out of range");
      }
      total += s.len;
    }
    return total;
  };
  const RoleDims dims{width(x_sel), width(y_sel), width(z_sel)};
  Dataset out(dims, source.size());
  auto fill = [&](Role target, const std::vector<RoleSlice>& sel) {
    for (std::size_t i = 0; i < source.size(); ++i) {
      auto dst = out.role(target, i);
      std::size_t at = 0;
      for (const auto& s : sel) {
        const auto src = source.role(s.source, i);
        std::copy_n(src.begin() + s.begin, s.len, dst.begin() + at);
        at += static_cast<std::size_t>(s.len);
      }
    }
  };
  fill(Role::X, x_sel);
  fill(Role::Y, y_sel);
  fill(Role::Z, z_sel);
  out.seed = source.seed;
  out.provenance = source.provenance + "/recomposed";
  return out;
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  const auto dims = dataset.dims();
  bool first = true;
  auto emit_header = [&](char role, int dim) {
    for (int c = 0; c < dim; ++c) {
      if (!first) out << ',';
      out << role << '_' << c;
      first = false;
    }
  };
  emit_header('x', dims.x);
  emit_header('y', dims.y);
  emit_header('z', dims.z);
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    bool lead = true;
    auto emit = [&](std::span<const double> v) {
      for (double value : v) {
        if (!lead) out << ',';
        out << format_double(value);
        lead = false;
      }
    };
    emit(dataset.x(i));
    emit(dataset.y(i));
    emit(dataset.z(i));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_dataset_csv: write failed: " + path);
}

namespace {

double parse_double(const std::string& field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw std::runtime_error("read_dataset_csv: bad numeric field '" + field +
                             "' on line " + std::to_string(line_no));
  }
  return value;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_dataset_csv: empty file " + path);
  }
  const auto header = split_csv_line(line);
  RoleDims dims;
  // Header must be x_0..x_{dx-1},y_0..,z_0.. in order.
  std::size_t at = 0;
  auto count_role = [&](char role) {
    int dim = 0;
    while (at < header.size()) {
      const std::string expect = std::string(1, role) + "_" + std::to_string(dim);
      if (header[at] != expect) break;
      ++dim;
      ++at;
    }
    return dim;
  };
  dims.x = count_role('x');
  dims.y = count_role('y');
  dims.z = count_role('z');
  if (at != header.size() || dims.total() == 0) {
    throw std::runtime_error("read_dataset_csv: header is not x_*,y_*,z_* in " + path);
  }

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  const auto total = static_cast<std::size_t>(dims.total());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != total) {
      throw std::runtime_error("read_dataset_csv: expected " + std::to_string(total) +
                               " fields, got " + std::to_string(fields.size()) +
                               " on line " + std::to_string(line_no));
    }
    for (const auto& f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  if (rows == 0) throw std::runtime_error("read_dataset_csv: no samples in " + path);

  Dataset out(dims, rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = values.data() + i * total;
    std::copy_n(row, dims.x, out.x(i).begin());
    std::copy_n(row + dims.x, dims.y, out.y(i).begin());
    std::copy_n(row + dims.x + dims.y, dims.z, out.z(i).begin());
  }
  out.provenance = "csv:" + path;
  return out;
}

}  // namespace cmiknn
