#include "ldm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ldm/random.hpp"

namespace ldm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_number(const std::string& cell, std::size_t line_no, std::size_t col) {
  const std::string t = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw std::runtime_error("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                             ": non-numeric cell '" + t + "'");
  }
  return v;
}

}  // namespace

SplitDataset read_dataset_csv(std::istream& in, const std::string& label_column, double split_fraction,
                              std::uint64_t seed) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw std::runtime_error("dataset file is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = i;
  }
  if (label_idx == header.size()) {
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
    if (ec == std::errc() && ptr == label_column.data() + label_column.size() && idx < header.size()) {
      label_idx = idx;
    } else {
      throw std::runtime_error("missing label column '" + label_column + "'");
    }
  }
  if (header.size() < 2) throw std::runtime_error("dataset needs at least one feature column");

  const std::size_t dim = header.size() - 1;
  std::vector<double> values;
  std::vector<long long> raw_labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_number(cells[c], line_no, c);
      if (c == label_idx) {
        if (v != std::floor(v)) {
          throw std::runtime_error("line " + std::to_string(line_no) + ": label '" + trim(cells[c]) +
                                   "' is not an integer");
        }
        raw_labels.push_back(static_cast<long long>(v));
      } else {
        values.push_back(v);
      }
    }
  }
  const std::size_t n = raw_labels.size();
  if (n < 2) throw std::runtime_error("dataset needs at least two rows");

  SplitDataset out;
  std::map<long long, int> mapping;
  for (long long l : raw_labels) mapping.emplace(l, 0);
  int next = 0;
  for (auto& [raw, mapped] : mapping) {
    mapped = next++;
    out.original_labels.push_back(raw);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng.engine());
  auto n_train = static_cast<std::size_t>(std::llround(split_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  const PointSet all(dim, std::move(values));
  auto fill = [&](Dataset& d, std::size_t lo, std::size_t hi) {
    d.x = PointSet(dim);
    d.num_classes = next;
    for (std::size_t i = lo; i < hi; ++i) {
      d.x.push_back(all[order[i]]);
      d.y.push_back(mapping.at(raw_labels[order[i]]));
    }
  };
  fill(out.train, 0, n_train);
  fill(out.test, n_train, n);
  return out;
}

SplitDataset load_dataset_csv(const std::filesystem::path& path, const std::string& label_column,
                              double split_fraction, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return read_dataset_csv(in, label_column, split_fraction, seed);
}

PointSet read_points_csv(std::istream& in, const std::string& drop_column) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw std::runtime_error("points file is empty");
  auto header = split_csv_line(line);
  std::size_t drop = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!drop_column.empty() && trim(header[i]) == drop_column) drop = i;
  }
  const std::size_t dim = header.size() - (drop < header.size() ? 1 : 0);
  if (dim == 0) throw std::runtime_error("points file has no feature columns");
  PointSet out(dim);
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                               " cells, found " + std::to_string(cells.size()));
    }
    row.clear();
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c != drop) row.push_back(parse_number(cells[c], line_no, c));
    }
    out.push_back(row);
  }
  if (out.empty()) throw std::runtime_error("points file has no rows");
  return out;
}

PointSet load_points_csv(const std::filesystem::path& path, const std::string& drop_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_points_csv(in, drop_column);
}

GeneratorKind parse_generator_kind(std::string_view name) {
  if (name == "disk2d" || name == "Disk2D" || name == "disk") return GeneratorKind::Disk2D;
  if (name == "blobs" || name == "Blobs") return GeneratorKind::Blobs;
  throw std::invalid_argument("unknown generator '" + std::string(name) + "'");
}

std::string_view to_string(GeneratorKind kind) {
  return kind == GeneratorKind::Disk2D ? "disk2d" : "blobs";
}

void GeneratorParams::validate() const {
  if (n == 0) throw std::invalid_argument("generator: n must be positive");
  if (kind == GeneratorKind::Disk2D) {
    if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
      throw std::invalid_argument("generator: label noise must lie in [0, 1]");
    }
    return;
  }
  if (classes < 2) throw std::invalid_argument("generator: classes must be >= 2");
  if (dim == 0) throw std::invalid_argument("generator: dim must be positive");
  if (!(cluster_std > 0.0)) throw std::invalid_argument("generator: cluster std must be positive");
  if (!centers.empty() && centers.size() != static_cast<std::size_t>(classes) * dim) {
    throw std::invalid_argument("generator: centers must have classes x dim entries");
  }
  if (centers.empty() && dim < 2) throw std::invalid_argument("generator: default centers need dim >= 2");
}

std::vector<double> blob_centers(const GeneratorParams& p) {
  if (!p.centers.empty()) return p.centers;
  std::vector<double> c(static_cast<std::size_t>(p.classes) * p.dim, 0.0);
  for (int k = 0; k < p.classes; ++k) {
    const double t = 2.0 * std::numbers::pi * k / p.classes;
    c[static_cast<std::size_t>(k) * p.dim] = p.spread * std::cos(t);
    c[static_cast<std::size_t>(k) * p.dim + 1] = p.spread * std::sin(t);
  }
  return c;
}

Dataset generate(const GeneratorParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  Dataset d;
  if (params.kind == GeneratorKind::Disk2D) {
    d.num_classes = 2;
    d.x = PointSet(2);
    const double ux = std::cos(params.separator_angle), uy = std::sin(params.separator_angle);
    for (std::size_t i = 0; i < params.n; ++i) {
      const double r = std::sqrt(rng.uniform());
      const double t = 2.0 * std::numbers::pi * rng.uniform();
      const double p[2] = {r * std::cos(t), r * std::sin(t)};
      int y = p[0] * ux + p[1] * uy > 0.0 ? 1 : 0;
      if (params.label_noise > 0.0 && rng.uniform() < params.label_noise) y = 1 - y;
      d.x.push_back(p);
      d.y.push_back(y);
    }
    return d;
  }
  d.num_classes = params.classes;
  d.x = PointSet(params.dim);
  const auto centers = blob_centers(params);
  std::vector<double> p(params.dim);
  for (std::size_t i = 0; i < params.n; ++i) {
    const auto k = static_cast<int>(rng.index(static_cast<std::size_t>(params.classes)));
    for (std::size_t j = 0; j < params.dim; ++j) {
      p[j] = centers[static_cast<std::size_t>(k) * params.dim + j] + params.cluster_std * rng.normal();
    }
    d.x.push_back(p);
    d.y.push_back(k);
  }
  return d;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.x.dim(); ++j) out << 'x' << j << ',';
  out << "label\n" << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x[i]) out << v << ',';
    out << data.y[i] << '\n';
  }
}

}  // namespace ldm
