#include "fheprotect/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "fheprotect/error.hpp"

namespace fheprotect {

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::Gender: return "gender";
    case Attribute::Age: return "age";
    case Attribute::Ethnicity: return "ethnicity";
  }
  return "?";
}

int num_classes(Attribute a) { return a == Attribute::Gender ? 2 : 4; }

int Attributes::get(Attribute a) const {
  switch (a) {
    case Attribute::Gender: return gender;
    case Attribute::Age: return age_band;
    case Attribute::Ethnicity: return ethnicity;
  }
  return 0;
}

void SyntheticSpec::validate() const {
  if (num_ids < 2) raise(ErrorKind::InvalidArgument, "num_ids must be >= 2");
  if (samples_per_id < 1) raise(ErrorKind::InvalidArgument, "samples_per_id must be >= 1");
  if (dim < 1) raise(ErrorKind::InvalidArgument, "dim must be >= 1");
  if (!(class_separation > 0.0)) raise(ErrorKind::InvalidArgument, "class_separation must be > 0");
  if (!(attribute_correlation >= 0.0 && attribute_correlation <= 1.0)) {
    raise(ErrorKind::InvalidArgument, "attribute_correlation must be in [0, 1]");
  }
}

void l2_normalize(std::span<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 == 0.0) raise(ErrorKind::ZeroVector, "cannot normalize a zero vector");
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
}

std::vector<Embedding> gen_synthetic_dataset(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dim = spec.dim;
  constexpr double kAttributeStrength = 2.5;
  const double within_sd = 1.0 / spec.class_separation;

  // Label combinations cycle through all 2*4*4 cells in a shuffled order.
  constexpr int kCells = 2 * 4 * 4;
  std::vector<int> cells(static_cast<std::size_t>(spec.num_ids));
  for (int i = 0; i < spec.num_ids; ++i) cells[static_cast<std::size_t>(i)] = i % kCells;
  std::shuffle(cells.begin(), cells.end(), rng);

  // Class prototypes per attribute.
  std::array<std::vector<std::vector<double>>, 3> prototypes;
  for (Attribute a : kAllAttributes) {
    auto& protos = prototypes[static_cast<std::size_t>(a)];
    protos.assign(static_cast<std::size_t>(num_classes(a)), std::vector<double>(dim));
    for (auto& p : protos) {
      for (double& x : p) x = normal(rng);
    }
  }

  // Attribute-carrying coordinates are spread evenly over the vector so that
  // every prefix keeps its share; owner attribute is assigned round-robin.
  std::vector<int> owner(dim, -1);
  const auto n_attr = static_cast<std::size_t>(std::llround(spec.attribute_correlation * dim));
  for (std::size_t t = 0; t < n_attr; ++t) owner[t * dim / n_attr] = static_cast<int>(t % 3);

  std::vector<Embedding> out;
  out.reserve(static_cast<std::size_t>(spec.num_ids) * static_cast<std::size_t>(spec.samples_per_id));
  std::vector<double> center(dim);
  for (int id = 0; id < spec.num_ids; ++id) {
    const int cell = cells[static_cast<std::size_t>(id)];
    Attributes attrs{cell % 2, (cell / 2) % 4, (cell / 8) % 4};
    for (std::size_t j = 0; j < dim; ++j) {
      center[j] = normal(rng);
      if (owner[j] >= 0) {
        const auto a = static_cast<Attribute>(owner[j]);
        center[j] += kAttributeStrength *
                     prototypes[static_cast<std::size_t>(owner[j])]
                               [static_cast<std::size_t>(attrs.get(a))][j];
      }
    }
    for (int s = 0; s < spec.samples_per_id; ++s) {
      Embedding e;
      e.subject_id = id;
      e.attributes = attrs;
      e.values.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) e.values[j] = center[j] + within_sd * normal(rng);
      l2_normalize(e.values);
      out.push_back(std::move(e));
    }
  }
  return out;
}

Embedding compress_prefix(const Embedding& e, std::size_t d) {
  if (d < 1 || d > e.values.size()) {
    raise(ErrorKind::InvalidArgument, "compression dimension " + std::to_string(d) +
                                          " outside [1, " + std::to_string(e.values.size()) + "]");
  }
  Embedding out;
  out.subject_id = e.subject_id;
  out.attributes = e.attributes;
  out.values.assign(e.values.begin(), e.values.begin() + static_cast<std::ptrdiff_t>(d));
  double n2 = 0.0;
  for (double x : out.values) n2 += x * x;
  if (n2 == 0.0) raise(ErrorKind::ZeroPrefix, "the first " + std::to_string(d) + " coordinates are zero");
  l2_normalize(out.values);
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const Embedding> data) {
  std::ofstream os(path);
  if (!os) raise(ErrorKind::Io, "cannot write " + path.string());
  const std::size_t dim = data.empty() ? 0 : data.front().values.size();
  os << "id,gender,age_band,ethnicity";
  for (std::size_t j = 0; j < dim; ++j) os << ",v" << j;
  os << '\n' << std::setprecision(17);
  for (const auto& e : data) {
    if (e.values.size() != dim) raise(ErrorKind::DimensionMismatch, "ragged dataset");
    os << e.subject_id << ',' << e.attributes.gender << ',' << e.attributes.age_band << ','
       << e.attributes.ethnicity;
    for (double v : e.values) os << ',' << v;
    os << '\n';
  }
}

std::vector<Embedding> read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) raise(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("id,gender,age_band,ethnicity", 0) != 0) {
    raise(ErrorKind::CorruptData, path.string() + ": missing dataset header");
  }
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') - 3);
  std::vector<Embedding> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != dim + 4) {
      raise(ErrorKind::CorruptData, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(dim + 4) + " columns");
    }
    try {
      Embedding e;
      e.subject_id = std::stoi(cells[0]);
      e.attributes = {std::stoi(cells[1]), std::stoi(cells[2]), std::stoi(cells[3])};
      e.values.reserve(dim);
      for (std::size_t j = 0; j < dim; ++j) e.values.push_back(std::stod(cells[4 + j]));
      out.push_back(std::move(e));
    } catch (const std::logic_error&) {
      raise(ErrorKind::CorruptData, path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

}  // namespace fheprotect
