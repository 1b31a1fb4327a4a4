#include "lsdc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lsdc/error.hpp"

namespace lsdc {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool is_missing(std::string_view cell) {
  if (cell.empty()) return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "na" || lower == "nan" || lower == "null";
}

std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

void SourceSpec::validate() const {
  if (sample_count < 1) throw ConfigError("source.samples must be at least 1");
  switch (kind) {
    case SourceKind::gaussian_chain:
      if (source_count < 1) throw ConfigError("source.count must be at least 1");
      if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("source.rho must lie in [0, 1)");
      break;
    case SourceKind::gaussian_field:
      if (positions.empty()) throw ConfigError("source.positions must list at least one sensor");
      if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("source.rho must lie in [0, 1)");
      if (!(d0 > 0.0)) throw ConfigError("source.d0 must be positive");
      break;
    case SourceKind::csv:
      if (path.empty()) throw ConfigError("source.path is required for csv sources");
      break;
  }
}

Eigen::MatrixXd chain_covariance(int source_count, double rho) {
  if (source_count < 1 || !(rho >= 0.0 && rho < 1.0)) throw UsageError("chain needs N >= 1 and 0 <= rho < 1");
  Eigen::MatrixXd s(source_count, source_count);
  for (int i = 0; i < source_count; ++i) {
    for (int j = 0; j < source_count; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  }
  return s;
}

Eigen::MatrixXd field_covariance(std::span<const Eigen::Vector2d> positions, double rho, double d0) {
  if (!(rho >= 0.0 && rho < 1.0) || !(d0 > 0.0)) throw UsageError("field needs 0 <= rho < 1 and d0 > 0");
  const auto n = static_cast<Index>(positions.size());
  Eigen::MatrixXd s(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) s(i, j) = std::pow(rho, (positions[i] - positions[j]).norm() / d0);
  }
  return s;
}

TrainingSet sample_gaussian(const Eigen::MatrixXd& covariance, Index count, std::uint64_t seed) {
  if (count < 1) throw UsageError("sample count must be at least 1");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 1e-10) {
    throw DataError("covariance is not positive definite (coincident or collinear sources?)");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    const Eigen::MatrixXd jittered =
        covariance + 1e-9 * Eigen::MatrixXd::Identity(covariance.rows(), covariance.cols());
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) throw DataError("covariance factorization failed after jitter");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(covariance.rows(), count);
  for (Index t = 0; t < count; ++t) {
    for (Index i = 0; i < z.rows(); ++i) z(i, t) = normal(rng);
  }
  return TrainingSet((l * z).transpose());
}

TrainingSet gen_gaussian_chain(int source_count, double rho, Index count, std::uint64_t seed) {
  return sample_gaussian(chain_covariance(source_count, rho), count, seed);
}

TrainingSet gen_gaussian_field(std::span<const Eigen::Vector2d> positions, double rho, double d0, Index count,
                               std::uint64_t seed) {
  return sample_gaussian(field_covariance(positions, rho, d0), count, seed);
}

CsvData parse_csv(const std::string& text, bool normalize, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw UsageError("train fraction must lie in (0, 1]");
  CsvData out;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (first) {
      first = false;
      width = cells.size();
      const bool header = std::any_of(cells.begin(), cells.end(), [](std::string_view c) {
        return !is_missing(c) && !parse_number(c).has_value();
      });
      if (header) {
        for (auto c : cells) out.columns.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " cells, found " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row;
    bool missing = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (is_missing(cells[c])) {
        missing = true;
        continue;
      }
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                         ": not a number: '" + std::string(cells[c]) + "'");
      }
      row.push_back(*v);
    }
    if (missing) {
      ++out.dropped_rows;
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw DataError("CSV has fewer than 2 complete rows");

  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  out.mean = Eigen::VectorXd::Zero(m.cols());
  out.scale = Eigen::VectorXd::Ones(m.cols());
  if (normalize) {
    const auto train_rows = std::max<Index>(1, static_cast<Index>(std::floor(train_fraction * m.rows())));
    const auto head = m.topRows(train_rows);
    out.mean = head.colwise().mean().transpose();
    for (Index c = 0; c < m.cols(); ++c) {
      const double sd = std::sqrt((head.col(c).array() - out.mean[c]).square().mean());
      if (!(sd > 0.0)) {
        const std::string name = out.columns.empty() ? std::to_string(c + 1) : out.columns[c];
        throw DataError("column " + name + " has zero variance; cannot normalize");
      }
      out.scale[c] = sd;
    }
    m = (m.rowwise() - out.mean.transpose()).array().rowwise() / out.scale.transpose().array();
  }
  out.data = TrainingSet(std::move(m));
  return out;
}

CsvData load_csv(const std::string& path, bool normalize, double train_fraction) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), normalize, train_fraction);
}

DataSplit split(const TrainingSet& data, double fraction, std::optional<std::uint64_t> shuffle_seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("split fraction must lie in (0, 1)");
  const Index n = data.sample_count();
  const auto n_train = static_cast<Index>(std::floor(fraction * static_cast<double>(n)));
  if (n_train < 1 || n_train >= n) throw DataError("split leaves an empty part");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    // Fisher-Yates with an explicit draw keeps the permutation portable.
    for (Index i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<Index> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
  }
  Eigen::MatrixXd train(n_train, data.source_count());
  Eigen::MatrixXd test(n - n_train, data.source_count());
  for (Index r = 0; r < n; ++r) {
    if (r < n_train) {
      train.row(r) = data.samples().row(order[r]);
    } else {
      test.row(r - n_train) = data.samples().row(order[r]);
    }
  }
  return {TrainingSet(std::move(train)), TrainingSet(std::move(test))};
}

TrainingSet make_source(const SourceSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case SourceKind::gaussian_chain:
      return gen_gaussian_chain(spec.source_count, spec.rho, spec.sample_count, spec.rng_seed);
    case SourceKind::gaussian_field:
      return gen_gaussian_field(spec.positions, spec.rho, spec.d0, spec.sample_count, spec.rng_seed);
    case SourceKind::csv:
      return load_csv(spec.path, spec.normalize).data;
  }
  throw UsageError("unknown source kind");
}

void write_csv(const std::string& path, const TrainingSet& data) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  for (int i = 0; i < data.source_count(); ++i) f << (i ? "," : "") << 'x' << i;
  f << '\n';
  char buf[32];
  for (Index t = 0; t < data.sample_count(); ++t) {
    for (int i = 0; i < data.source_count(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", data.samples()(t, i));
      f << (i ? "," : "") << buf;
    }
    f << '\n';
  }
  if (!f) throw DataError("write failed for " + path);
}

}  // namespace lsdc
