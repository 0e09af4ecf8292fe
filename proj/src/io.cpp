#include "comrope/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace comrope::io {

using nlohmann::json;
using linalg::Matrix;

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (res.ec != std::errc{}) throw FormatError("failed to format double");
  return std::string(buf.data(), res.ptr);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Angle sets

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.order(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.order(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw FormatError("matrix must be a non-empty array of rows");
  const std::size_t n = rows.size();
  std::vector<double> data;
  data.reserve(n * n);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != n) throw FormatError("matrix rows must form a square array");
    for (const auto& v : row) {
      if (!v.is_number()) throw FormatError("matrix entries must be numbers");
      data.push_back(v.get<double>());
    }
  }
  return Matrix::from_data(n, std::move(data));
}

}  // namespace

json set_to_json(const AngleMatrixSet& set) {
  const ModelDims& dims = set.dims();
  json doc;
  doc["variant"] = std::string(to_string(set.variant()));
  doc["dims"] = {{"d", dims.d}, {"h", dims.heads}, {"b", dims.block}, {"N", dims.axes}, {"L", dims.layers}};
  if (set.seed()) doc["seed"] = *set.seed();
  if (set.variant() == Variant::Vanilla) doc["theta_base"] = set.theta_base();

  json params;
  params["matrices"] = json::array();
  for (const auto& m : set.params().matrices) params["matrices"].push_back(matrix_to_json(m));
  params["thetas"] = set.params().thetas;
  doc["params"] = std::move(params);

  json blocks = json::array();
  for (std::size_t a = 0; a < dims.axes; ++a) {
    json per_axis = json::array();
    for (std::size_t h = 0; h < dims.heads; ++h) {
      json per_head = json::array();
      for (std::size_t j = 0; j < dims.blocks_per_head(); ++j) {
        per_head.push_back(matrix_to_json(set.block(a, h, j).matrix()));
      }
      per_axis.push_back(std::move(per_head));
    }
    blocks.push_back(std::move(per_axis));
  }
  doc["blocks"] = std::move(blocks);
  return doc;
}

AngleMatrixSet set_from_json(const json& doc) {
  try {
    const auto variant = parse_variant(doc.at("variant").get<std::string>());
    if (!variant) throw FormatError("unknown variant " + doc.at("variant").dump());
    const auto& jd = doc.at("dims");
    ModelDims dims{jd.at("d").get<std::size_t>(), jd.at("h").get<std::size_t>(), jd.at("b").get<std::size_t>(),
                   jd.at("N").get<std::size_t>(), jd.at("L").get<std::size_t>()};
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed")) seed = doc.at("seed").get<std::uint64_t>();

    auto set = [&] {
      if (*variant == Variant::Vanilla) return build_vanilla(dims, doc.at("theta_base").get<double>());
      ParamSet p;
      for (const auto& m : doc.at("params").at("matrices")) p.matrices.push_back(matrix_from_json(m));
      p.thetas = doc.at("params").at("thetas").get<std::vector<double>>();
      return AngleMatrixSet::from_params(*variant, dims, std::move(p), seed);
    }();

    const auto& blocks = doc.at("blocks");
    if (blocks.size() != dims.axes) throw FormatError("block array has the wrong number of axes");
    for (std::size_t a = 0; a < dims.axes; ++a) {
      if (blocks[a].size() != dims.heads) throw FormatError("block array has the wrong number of heads");
      for (std::size_t h = 0; h < dims.heads; ++h) {
        if (blocks[a][h].size() != dims.blocks_per_head()) throw FormatError("block array has the wrong block count");
        for (std::size_t j = 0; j < dims.blocks_per_head(); ++j) {
          if (!(matrix_from_json(blocks[a][h][j]) == set.block(a, h, j).matrix())) {
            throw FormatError("stored block does not match the block rebuilt from parameters");
          }
        }
      }
    }
    return set;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed angle-set document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// CRPE batches

namespace {

constexpr std::array<char, 4> kMagic{'C', 'R', 'P', 'E'};

template <class T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>(bits & 0xffu);
    bits >>= 8;
  }
  os.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw FormatError("truncated CRPE stream");
  U bits = 0;
  for (std::size_t i = sizeof(U); i-- > 0;) bits = (bits << 8) | bytes[i];
  return std::bit_cast<T>(bits);
}

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xffffffffu) throw FormatError("dimension does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_batch(std::ostream& os, const attention::AttentionBatch& batch) {
  batch.validate();
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kBatchVersion);
  put_le<std::uint32_t>(os, checked_u32(batch.n));
  put_le<std::uint32_t>(os, checked_u32(batch.heads));
  put_le<std::uint32_t>(os, checked_u32(batch.head_dim));
  for (double v : batch.q) put_le<double>(os, v);
  for (double v : batch.k) put_le<double>(os, v);
  if (!os) throw FormatError("failed writing CRPE stream");
}

attention::AttentionBatch read_batch(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw FormatError("missing CRPE magic");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kBatchVersion) throw FormatError("unsupported CRPE version " + std::to_string(version));
  const auto n = get_le<std::uint32_t>(is);
  const auto h = get_le<std::uint32_t>(is);
  const auto dh = get_le<std::uint32_t>(is);
  attention::AttentionBatch batch(n, h, dh);
  for (double& v : batch.q) v = get_le<double>(is);
  for (double& v : batch.k) v = get_le<double>(is);
  try {
    batch.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Coordinates

void write_coords_csv(std::ostream& os, std::span<const Coordinate> coords) {
  const std::size_t axes = coords.empty() ? 0 : coords.front().size();
  for (std::size_t a = 0; a < axes; ++a) os << (a ? "," : "") << 'x' << (a + 1);
  os << '\n';
  for (const auto& c : coords) {
    if (c.size() != axes) throw FormatError("coordinates have inconsistent axis counts");
    for (std::size_t a = 0; a < axes; ++a) os << (a ? "," : "") << format_double(c[a]);
    os << '\n';
  }
}

std::vector<Coordinate> read_coords_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("coordinate CSV is missing its header");
  std::size_t axes = line.empty() ? 0 : 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  std::vector<Coordinate> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw FormatError("bad coordinate value '" + cell + "'");
      }
      values.push_back(v);
    }
    if (values.size() != axes) throw FormatError("coordinate row has the wrong number of columns");
    out.emplace_back(std::move(values));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

json report_to_json(const verify::VerificationReport& report) {
  json doc{{"suite", report.suite},     {"seed", report.seed},
           {"trials", report.trials},   {"tol", report.tolerance},
           {"max_residual", report.max_residual}, {"passed", report.passed}};
  if (report.witness) {
    doc["witness"] = {{"x", report.witness->x}, {"head", report.witness->head}};
    if (!report.witness->y.empty()) doc["witness"]["y"] = report.witness->y;
  }
  return doc;
}

void write_reports_csv(std::ostream& os, std::span<const verify::VerificationReport> reports) {
  os << "suite,seed,trials,tol,max_residual,passed\n";
  for (const auto& r : reports) {
    os << r.suite << ',' << r.seed << ',' << r.trials << ',' << format_double(r.tolerance) << ','
       << format_double(r.max_residual) << ',' << (r.passed ? "true" : "false") << '\n';
  }
}

}  // namespace comrope::io
