#include "hbmu/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "hbmu/errors.hpp"

namespace hbmu {

namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s, const std::string& context) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError(context + ": cannot parse '" + std::string(s) + "' as a number");
  return x;
}

namespace {

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw InputError(path + " must be an object");
  const auto it = j.find(key);
  if (it == j.end()) throw InputError("missing required field " + path + "." + key);
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw InputError(path + " must be a number");
  return j.get<double>();
}

long integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw InputError(path + " must be an integer");
  return j.get<long>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw InputError(path + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> one_based_indices(const Json& j, const std::string& path) {
  if (!j.is_array()) throw InputError(path + " must be an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const long v = integer(j[i], path + "[" + std::to_string(i) + "]");
    if (v < 1) throw InputError(path + "[" + std::to_string(i) + "] must be >= 1");
    out.push_back(static_cast<int>(v - 1));
  }
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw InputError("cannot open " + path.string() + " (not a regular file)");
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

Table read_table(const fs::path& path) {
  std::ifstream in = open_in(path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + " is empty");
  t.header = split(line);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " columns, found " +
                       std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(parse_double(cells[c], path.string() + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void check_label(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos)
    throw InputError("label '" + s + "' contains a comma or newline");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
  out << '\n';
}

bool starts_with(const std::string& s, std::string_view p) { return s.rfind(p, 0) == 0; }

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j, const std::string& path) {
  const long rows = integer(field(j, "rows", path), path + ".rows");
  const long cols = integer(field(j, "cols", path), path + ".cols");
  if (rows < 0 || cols < 0) throw InputError(path + " has negative dimensions");
  const auto data = numbers(field(j, "data", path), path + ".data");
  if (static_cast<long>(data.size()) != rows * cols)
    throw InputError(path + ".data has " + std::to_string(data.size()) + " entries, expected " +
                     std::to_string(rows * cols));
  Matrix m(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j, const std::string& path) {
  const auto d = numbers(j, path);
  return Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
}

Json model_to_json(const StructuralModel& model) {
  Json subs = Json::array();
  for (const auto& k : model.substructures()) subs.push_back(matrix_to_json(k));
  return Json{{"n_dof", model.n_dof()},
              {"mass", matrix_to_json(model.mass())},
              {"k0", matrix_to_json(model.k0())},
              {"substructures", subs},
              {"labels", model.labels()}};
}

StructuralModel model_from_json(const Json& j) {
  const std::string p = "$";
  const long nd = integer(field(j, "n_dof", p), "$.n_dof");
  Matrix mass = matrix_from_json(field(j, "mass", p), "$.mass");
  Matrix k0 = matrix_from_json(field(j, "k0", p), "$.k0");
  if (mass.rows() != nd) throw InputError("$.mass dimension does not match $.n_dof");
  const Json& sj = field(j, "substructures", p);
  if (!sj.is_array()) throw InputError("$.substructures must be an array");
  std::vector<Matrix> subs;
  for (std::size_t i = 0; i < sj.size(); ++i)
    subs.push_back(matrix_from_json(sj[i], "$.substructures[" + std::to_string(i) + "]"));
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) throw InputError("$.labels must be an array of strings");
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) throw InputError("$.labels must be an array of strings");
      labels.push_back(l.get<std::string>());
    }
  }
  return StructuralModel(std::move(mass), std::move(k0), std::move(subs), std::move(labels));
}

Json dataset_to_json(const ModalDataset& data) {
  std::vector<int> dofs;
  for (int d : data.observed_dofs()) dofs.push_back(d + 1);
  return Json{{"n_modes", data.n_modes()},
              {"n_segments", data.n_segments()},
              {"observed_dofs", dofs},
              {"freq_sq", vector_to_json(data.freq_sq())},
              {"mode_shapes", vector_to_json(data.mode_shapes())}};
}

ModalDataset dataset_from_json(const Json& j) {
  const std::string p = "$";
  const long nm = integer(field(j, "n_modes", p), "$.n_modes");
  const long ns = integer(field(j, "n_segments", p), "$.n_segments");
  return ModalDataset(static_cast<int>(nm), static_cast<int>(ns),
                      vector_from_json(field(j, "freq_sq", p), "$.freq_sq"),
                      vector_from_json(field(j, "mode_shapes", p), "$.mode_shapes"),
                      one_based_indices(field(j, "observed_dofs", p), "$.observed_dofs"));
}

Json truth_to_json(const GroundTruth& truth) {
  return Json{{"theta_true", vector_to_json(truth.theta_true)},
              {"omega_sq", vector_to_json(truth.exact_modes.omega_sq)},
              {"phi", matrix_to_json(truth.exact_modes.phi)}};
}

GroundTruth truth_from_json(const Json& j) {
  GroundTruth t;
  t.theta_true = vector_from_json(field(j, "theta_true", "$"), "$.theta_true");
  t.exact_modes.omega_sq = vector_from_json(field(j, "omega_sq", "$"), "$.omega_sq");
  t.exact_modes.phi = matrix_from_json(field(j, "phi", "$"), "$.phi");
  return t;
}

BenchmarkSpec benchmark_spec_from_json(const Json& j) {
  const std::string p = "$";
  if (!j.is_object()) throw InputError("$ must be an object");
  BenchmarkSpec s;
  const std::string sub = j.value("substructuring", std::string("per_story"));
  if (sub == "per_story")
    s.substructuring = Substructuring::per_story;
  else if (sub == "per_face")
    s.substructuring = Substructuring::per_face;
  else if (sub == "custom")
    s.substructuring = Substructuring::custom;
  else
    throw InputError("$.substructuring must be per_story, per_face or custom");

  if (s.substructuring == Substructuring::custom) {
    const StructuralModel m = model_from_json(field(j, "model", p));
    s.custom_mass = m.mass();
    s.custom_k0 = m.k0();
    s.custom_substructures = m.substructures();
    s.custom_labels = m.labels();
    s.n_stories = 0;
  } else {
    s.n_stories = static_cast<int>(integer(field(j, "n_stories", p), "$.n_stories"));
    if (j.contains("story_mass")) s.story_mass = numbers(j["story_mass"], "$.story_mass");
    if (j.contains("story_stiffness"))
      s.story_stiffness = numbers(j["story_stiffness"], "$.story_stiffness");
    if (j.contains("half_width_x")) s.half_width_x = number(j["half_width_x"], "$.half_width_x");
    if (j.contains("half_width_y")) s.half_width_y = number(j["half_width_y"], "$.half_width_y");
  }
  s.n_modes = static_cast<int>(integer(field(j, "n_modes", p), "$.n_modes"));
  if (j.contains("n_segments"))
    s.n_segments = static_cast<int>(integer(j["n_segments"], "$.n_segments"));
  if (j.contains("observed_dofs"))
    s.observed_dofs = one_based_indices(j["observed_dofs"], "$.observed_dofs");
  if (j.contains("noise")) {
    const Json& n = j["noise"];
    if (!n.is_object()) throw InputError("$.noise must be an object");
    if (n.contains("freq_cov")) s.noise.freq_cov = number(n["freq_cov"], "$.noise.freq_cov");
    if (n.contains("shape_cov")) s.noise.shape_cov = number(n["shape_cov"], "$.noise.shape_cov");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw InputError("$.seed must be a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("damage")) {
    const Json& d = j["damage"];
    if (!d.is_array()) throw InputError("$.damage must be an array");
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::string dp = "$.damage[" + std::to_string(i) + "]";
      const long idx = integer(field(d[i], "index", dp), dp + ".index");
      if (idx < 1) throw InputError(dp + ".index must be >= 1");
      s.damage.emplace_back(static_cast<int>(idx - 1),
                            number(field(d[i], "fraction", dp), dp + ".fraction"));
    }
  }
  return s;
}

Json benchmark_spec_to_json(const BenchmarkSpec& s) {
  Json j;
  switch (s.substructuring) {
    case Substructuring::per_story: j["substructuring"] = "per_story"; break;
    case Substructuring::per_face: j["substructuring"] = "per_face"; break;
    case Substructuring::custom: j["substructuring"] = "custom"; break;
  }
  if (s.substructuring == Substructuring::custom) {
    j["model"] = model_to_json(StructuralModel(s.custom_mass, s.custom_k0,
                                               s.custom_substructures, s.custom_labels));
  } else {
    j["n_stories"] = s.n_stories;
    j["story_mass"] = s.story_mass;
    j["story_stiffness"] = s.story_stiffness;
    j["half_width_x"] = s.half_width_x;
    j["half_width_y"] = s.half_width_y;
  }
  std::vector<int> dofs;
  for (int d : s.observed_dofs) dofs.push_back(d + 1);
  j["observed_dofs"] = dofs;
  j["n_segments"] = s.n_segments;
  j["n_modes"] = s.n_modes;
  j["noise"] = {{"freq_cov", s.noise.freq_cov}, {"shape_cov", s.noise.shape_cov}};
  j["seed"] = s.seed;
  Json dmg = Json::array();
  for (const auto& [i, f] : s.damage) dmg.push_back({{"index", i + 1}, {"fraction", f}});
  j["damage"] = dmg;
  return j;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Json chain_meta_to_json(const Chain& c) {
  return Json{{"algorithm", to_string(c.meta.algorithm)},
              {"seed", c.meta.seed},
              {"stream", c.meta.stream},
              {"sparse_mode", c.meta.sparse_mode},
              {"elapsed_seconds", c.meta.elapsed_seconds},
              {"fixed_point_warnings", c.meta.fixed_point_warnings},
              {"max_fixed_point_iterations", c.meta.max_fixed_point_iterations},
              {"n_samples", c.size()},
              {"n_dof", c.n_dof},
              {"n_modes", c.n_modes},
              {"theta_labels", c.theta_labels},
              {"hyper_names", c.hyper_names},
              {"has_phi", c.has_phi()}};
}

void write_chain(const Chain& c, const fs::path& csv, const Json& extra) {
  for (const auto& l : c.theta_labels) check_label(l);
  std::vector<std::string> header{"iter"};
  for (const auto& l : c.theta_labels) header.push_back("theta:" + l);
  for (Eigen::Index i = 0; i < c.omega_sq.cols(); ++i)
    header.push_back("omega_sq:" + std::to_string(i + 1));
  const bool has_beta = c.beta.size() > 0;
  if (has_beta) header.push_back("beta");
  for (const auto& h : c.hyper_names) header.push_back("hyper:" + h);
  for (Eigen::Index k = 0; k < c.phi.cols(); ++k) header.push_back("phi:" + std::to_string(k + 1));

  auto out = open_out(csv);
  write_row(out, header);
  std::vector<std::string> row;
  for (long n = 0; n < c.size(); ++n) {
    row.clear();
    row.push_back(std::to_string(n));
    for (Eigen::Index j = 0; j < c.theta.cols(); ++j) row.push_back(format_double(c.theta(n, j)));
    for (Eigen::Index j = 0; j < c.omega_sq.cols(); ++j)
      row.push_back(format_double(c.omega_sq(n, j)));
    if (has_beta) row.push_back(format_double(c.beta[n]));
    for (Eigen::Index j = 0; j < c.hyper.cols(); ++j) row.push_back(format_double(c.hyper(n, j)));
    for (Eigen::Index j = 0; j < c.phi.cols(); ++j) row.push_back(format_double(c.phi(n, j)));
    write_row(out, row);
  }
  Json meta = chain_meta_to_json(c);
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) meta[k] = v;
  write_json_file(sidecar_path(csv), meta);
}

Chain read_chain(const fs::path& csv) {
  const Table t = read_table(csv);
  Chain c;
  std::vector<int> theta_cols, omega_cols, hyper_cols, phi_cols;
  int beta_col = -1;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const std::string& h = t.header[i];
    const int ci = static_cast<int>(i);
    if (i == 0) {
      if (h != "iter") throw InputError(csv.string() + ": first column must be 'iter'");
    } else if (starts_with(h, "theta:")) {
      theta_cols.push_back(ci);
      c.theta_labels.push_back(h.substr(6));
    } else if (starts_with(h, "omega_sq:")) {
      omega_cols.push_back(ci);
    } else if (h == "beta") {
      beta_col = ci;
    } else if (starts_with(h, "hyper:")) {
      hyper_cols.push_back(ci);
      c.hyper_names.push_back(h.substr(6));
    } else if (starts_with(h, "phi:")) {
      phi_cols.push_back(ci);
    } else {
      throw InputError(csv.string() + ": unknown column '" + h + "'");
    }
  }
  if (theta_cols.empty()) throw InputError(csv.string() + ": no theta columns");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  auto fill = [&](Matrix& m, const std::vector<int>& cols) {
    m.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (Eigen::Index r = 0; r < n; ++r)
      for (std::size_t k = 0; k < cols.size(); ++k)
        m(r, static_cast<Eigen::Index>(k)) = t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(cols[k])];
  };
  fill(c.theta, theta_cols);
  fill(c.omega_sq, omega_cols);
  fill(c.hyper, hyper_cols);
  fill(c.phi, phi_cols);
  if (phi_cols.empty()) c.phi.resize(0, 0);
  if (beta_col >= 0) {
    c.beta.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) c.beta[r] = t.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(beta_col)];
  }
  c.n_modes = static_cast<int>(omega_cols.size());
  c.meta.algorithm = beta_col >= 0 ? Algorithm::exact : Algorithm::marginal;
  if (c.n_modes > 0 && !phi_cols.empty()) c.n_dof = static_cast<int>(phi_cols.size()) / c.n_modes;

  const fs::path side = sidecar_path(csv);
  if (fs::exists(side)) {
    const Json j = read_json_file(side);
    if (j.contains("algorithm")) c.meta.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    c.meta.seed = j.value("seed", std::uint64_t{0});
    c.meta.stream = j.value("stream", std::uint64_t{0});
    c.meta.sparse_mode = j.value("sparse_mode", false);
    c.meta.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    c.meta.fixed_point_warnings = j.value("fixed_point_warnings", 0L);
    c.meta.max_fixed_point_iterations = j.value("max_fixed_point_iterations", 0);
    c.n_dof = j.value("n_dof", c.n_dof);
  }
  return c;
}

void write_pairs_csv(const PairedSamples& pairs, const fs::path& csv) {
  std::vector<std::string> header;
  for (const auto& l : pairs.labels) {
    check_label(l);
    header.push_back("u:" + l);
  }
  for (const auto& l : pairs.labels) header.push_back("d:" + l);
  if (static_cast<Eigen::Index>(pairs.labels.size()) != pairs.theta_u.cols())
    throw InputError("one label per parameter required");
  auto out = open_out(csv);
  write_row(out, header);
  std::vector<std::string> row;
  for (Eigen::Index r = 0; r < pairs.theta_u.rows(); ++r) {
    row.clear();
    for (Eigen::Index j = 0; j < pairs.theta_u.cols(); ++j) row.push_back(format_double(pairs.theta_u(r, j)));
    for (Eigen::Index j = 0; j < pairs.theta_d.cols(); ++j) row.push_back(format_double(pairs.theta_d(r, j)));
    write_row(out, row);
  }
}

PairedSamples read_pairs_csv(const fs::path& csv) {
  const Table t = read_table(csv);
  if (t.header.size() % 2 != 0) throw InputError(csv.string() + ": odd number of columns");
  const std::size_t nt = t.header.size() / 2;
  PairedSamples p;
  for (std::size_t j = 0; j < nt; ++j) {
    if (!starts_with(t.header[j], "u:") || t.header[nt + j] != "d:" + t.header[j].substr(2))
      throw InputError(csv.string() + ": columns must be u:<label>... then d:<label>...");
    p.labels.push_back(t.header[j].substr(2));
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  p.theta_u.resize(n, static_cast<Eigen::Index>(nt));
  p.theta_d.resize(n, static_cast<Eigen::Index>(nt));
  for (Eigen::Index r = 0; r < n; ++r)
    for (std::size_t j = 0; j < nt; ++j) {
      p.theta_u(r, static_cast<Eigen::Index>(j)) = t.rows[static_cast<std::size_t>(r)][j];
      p.theta_d(r, static_cast<Eigen::Index>(j)) = t.rows[static_cast<std::size_t>(r)][nt + j];
    }
  return p;
}

void write_curves_csv(const DamageCurves& curves, const fs::path& csv) {
  std::vector<std::string> header{"fraction"};
  for (const auto& l : curves.labels) {
    check_label(l);
    header.push_back(l);
  }
  auto out = open_out(csv);
  write_row(out, header);
  std::vector<std::string> row;
  for (Eigen::Index k = 0; k < curves.fractions.size(); ++k) {
    row.clear();
    row.push_back(format_double(curves.fractions[k]));
    for (Eigen::Index j = 0; j < curves.probabilities.rows(); ++j)
      row.push_back(format_double(curves.probabilities(j, k)));
    write_row(out, row);
  }
}

DamageCurves read_curves_csv(const fs::path& csv) {
  const Table t = read_table(csv);
  if (t.header.empty() || t.header[0] != "fraction")
    throw InputError(csv.string() + ": first column must be 'fraction'");
  DamageCurves c;
  c.labels.assign(t.header.begin() + 1, t.header.end());
  const auto g = static_cast<Eigen::Index>(t.rows.size());
  const auto nt = static_cast<Eigen::Index>(c.labels.size());
  c.fractions.resize(g);
  c.probabilities.resize(nt, g);
  for (Eigen::Index k = 0; k < g; ++k) {
    const auto& row = t.rows[static_cast<std::size_t>(k)];
    c.fractions[k] = row[0];
    for (Eigen::Index j = 0; j < nt; ++j) c.probabilities(j, k) = row[static_cast<std::size_t>(j + 1)];
  }
  return c;
}

Json curves_summary(const DamageCurves& curves) {
  const auto med = median_loss(curves);
  Json rows = Json::array();
  for (std::size_t j = 0; j < med.size(); ++j) {
    const std::string label = j < curves.labels.size() ? curves.labels[j] : std::to_string(j + 1);
    Json r{{"label", label}, {"median_loss", med[j].value}, {"bracketed", med[j].bracketed}};
    // Probability of more than 20% loss, read off the grid when it contains 0.2.
    for (Eigen::Index k = 0; k < curves.fractions.size(); ++k)
      if (std::abs(curves.fractions[k] - 0.2) < 1e-12)
        r["p_loss_0.2"] = curves.probabilities(static_cast<Eigen::Index>(j), k);
    rows.push_back(r);
  }
  return Json{{"substructures", rows}};
}

Json ergodicity_to_json(const ErgodicityReport& rep) {
  Json rows = Json::array();
  for (Eigen::Index j = 0; j < rep.rhat.size(); ++j) {
    Json means = Json::array(), se = Json::array();
    for (Eigen::Index c = 0; c < rep.chain_means.rows(); ++c) {
      means.push_back(rep.chain_means(c, j));
      se.push_back(rep.chain_se(c, j));
    }
    Json r{{"label", j < static_cast<Eigen::Index>(rep.labels.size()) ? rep.labels[static_cast<std::size_t>(j)] : std::to_string(j + 1)},
           {"chain_means", means},
           {"chain_se", se},
           {"max_mean_separation", rep.max_mean_separation[j]}};
    if (std::isnan(rep.rhat[j]))
      r["split_rhat"] = nullptr;
    else
      r["split_rhat"] = rep.rhat[j];
    rows.push_back(r);
  }
  return Json{{"burn_in", rep.burn_in}, {"degenerate", rep.degenerate}, {"parameters", rows}};
}

Json burn_in_to_json(const BurnInResult& r, const std::vector<std::string>& labels) {
  return Json{{"burn_in", r.index},
              {"stationary", r.stationary},
              {"window", r.window},
              {"labels", labels}};
}

void write_burn_in_trace(const BurnInResult& r, const std::vector<std::string>& labels,
                         const fs::path& csv) {
  std::vector<std::string> header{"start"};
  for (const auto& l : labels) header.push_back("z:" + l);
  auto out = open_out(csv);
  write_row(out, header);
  std::vector<std::string> row;
  for (std::size_t k = 0; k < r.starts.size(); ++k) {
    row.clear();
    row.push_back(std::to_string(r.starts[k]));
    for (Eigen::Index j = 0; j < r.z.cols(); ++j)
      row.push_back(format_double(r.z(static_cast<Eigen::Index>(k), j)));
    write_row(out, row);
  }
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

Json manifest_to_json(const RunManifest& m) {
  Json inputs = Json::array();
  for (const auto& [p, d] : m.inputs) inputs.push_back({{"path", p}, {"sha256", d}});
  return Json{{"command", m.command}, {"config", m.config},   {"inputs", inputs},
              {"seed", m.seed},       {"tool_version", m.tool_version},
              {"timings", m.timings}, {"outputs", m.outputs}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.command = field(j, "command", "$").get<std::string>();
  m.config = j.value("config", Json::object());
  for (const auto& i : j.value("inputs", Json::array()))
    m.inputs.emplace_back(i.at("path").get<std::string>(), i.at("sha256").get<std::string>());
  m.seed = j.value("seed", std::uint64_t{0});
  m.tool_version = j.value("tool_version", std::string());
  m.timings = j.value("timings", Json::object());
  m.outputs = j.value("outputs", std::vector<std::string>());
  return m;
}

}  // namespace hbmu
