#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "../fixtures.hpp"
#include "hbmu/errors.hpp"
#include "hbmu/gibbs.hpp"
#include "hbmu/io.hpp"

using namespace hbmu;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "hbmu_io_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("doubles survive text round trips") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.normal() * std::pow(10.0, 40.0 * rng.uniform() - 20.0);
    CHECK(parse_double(format_double(x), "t") == x);
  }
  CHECK(parse_double(format_double(std::numeric_limits<double>::denorm_min()), "t") ==
        std::numeric_limits<double>::denorm_min());
  CHECK(std::isnan(parse_double(format_double(std::nan("")), "t")));
  CHECK(error_of([] { parse_double("1.5x", "row 3"); }).find("row 3") != std::string::npos);
}

TEST_CASE("model, dataset and truth round trips") {
  const fixture::Scenario sc = fixture::scenario(fixture::damage_setup());
  const StructuralModel m2 = model_from_json(model_to_json(sc.model));
  CHECK(m2.mass() == sc.model.mass());
  CHECK(m2.k0() == sc.model.k0());
  REQUIRE(m2.n_theta() == sc.model.n_theta());
  for (int j = 0; j < m2.n_theta(); ++j) CHECK(m2.substructure(j) == sc.model.substructure(j));
  CHECK(m2.labels() == sc.model.labels());

  const fs::path dir = scratch("roundtrip");
  write_json_file(dir / "data.json", dataset_to_json(sc.undamaged));
  const ModalDataset d2 = dataset_from_json(read_json_file(dir / "data.json"));
  CHECK(d2.freq_sq() == sc.undamaged.freq_sq());
  CHECK(d2.mode_shapes() == sc.undamaged.mode_shapes());
  CHECK(d2.observed_dofs() == sc.undamaged.observed_dofs());
  CHECK(dataset_to_json(sc.undamaged)["observed_dofs"] == Json::array({1, 2}));

  const GroundTruth t2 = truth_from_json(truth_to_json(sc.truth_d));
  CHECK(t2.theta_true == sc.truth_d.theta_true);
  CHECK(t2.exact_modes.phi == sc.truth_d.exact_modes.phi);
}

TEST_CASE("benchmark spec files") {
  const Json j = Json::parse(R"({"n_stories": 4, "n_modes": 3, "observed_dofs": [1, 3],
      "n_segments": 5, "noise": {"freq_cov": 0.01, "shape_cov": 0.05}, "seed": 9,
      "damage": [{"index": 2, "fraction": 0.25}]})");
  const BenchmarkSpec s = benchmark_spec_from_json(j);
  CHECK(s.n_stories == 4);
  CHECK(s.observed_dofs == std::vector<int>{0, 2});
  REQUIRE(s.damage.size() == 1);
  CHECK(s.damage[0].first == 1);
  CHECK(s.damage[0].second == 0.25);
  CHECK(s.seed == 9);
  const BenchmarkSpec back = benchmark_spec_from_json(benchmark_spec_to_json(s));
  CHECK(back.observed_dofs == s.observed_dofs);
  CHECK(back.noise.shape_cov == s.noise.shape_cov);

  SUBCASE("errors name the offending field") {
    CHECK(error_of([] { benchmark_spec_from_json(Json::parse(R"({"n_stories": 2})")); })
              .find("n_modes") != std::string::npos);
    CHECK(error_of([] { benchmark_spec_from_json(Json::parse(R"({"n_stories": 2, "n_modes": 1, "observed_dofs": [0]})")); })
              .find("observed_dofs[0]") != std::string::npos);
    CHECK(error_of([] { dataset_from_json(Json::parse(R"({"n_modes": 1})")); }).find("$.n_segments") !=
          std::string::npos);
    CHECK(error_of([] {
            model_from_json(Json::parse(R"({"n_dof": 1, "mass": {"rows": 1, "cols": 1, "data": ["a"]}})"));
          }).find("$.mass") != std::string::npos);
  }
}

TEST_CASE("chain files") {
  const fixture::Scenario sc = fixture::scenario(fixture::damage_setup());
  const fs::path dir = scratch("chains");
  for (Algorithm a : {Algorithm::exact, Algorithm::marginal}) {
    for (bool phi : {true, false}) {
      CAPTURE(to_string(a));
      CAPTURE(phi);
      GibbsConfig c;
      c.algorithm = a;
      c.n_samples = 15;
      c.seed = 2;
      c.store_phi = phi;
      c.sparse_mode = true;
      c.theta_hat = Vector::Ones(4);
      Rng rng(2, 3);
      const Chain ch = run_chain(sc.undamaged, sc.model, c, rng);
      const fs::path p = dir / (to_string(a) + (phi ? "_phi" : "") + ".csv");
      write_chain(ch, p, Json{{"note", "x"}});
      const Chain back = read_chain(p);
      CHECK(back == ch);
      CHECK(back.meta.fixed_point_warnings == ch.meta.fixed_point_warnings);
      CHECK(read_json_file(fs::path(p).replace_extension(".json"))["note"] == "x");
      // Writing what was read reproduces the bytes.
      const fs::path q = dir / "again.csv";
      write_chain(back, q);
      CHECK(slurp(q) == slurp(p));
    }
  }
  SUBCASE("malformed chain files") {
    std::ofstream(dir / "bad.csv") << "iter,theta:a\n0,1\n1\n";
    CHECK(error_of([&] { read_chain(dir / "bad.csv"); }).find(":3") != std::string::npos);
    std::ofstream(dir / "bad2.csv") << "iter,what\n0,1\n";
    CHECK(error_of([&] { read_chain(dir / "bad2.csv"); }).find("what") != std::string::npos);
  }
}

TEST_CASE("pairs, curves and reports") {
  const fs::path dir = scratch("pairs");
  Rng rng(4);
  PairedSamples p;
  p.theta_u = Matrix(20, 2);
  p.theta_d = Matrix(20, 2);
  for (auto& v : p.theta_u.reshaped()) v = 1.0 + 0.1 * rng.normal();
  for (auto& v : p.theta_d.reshaped()) v = 0.9 + 0.1 * rng.normal();
  p.labels = {"a", "b"};
  write_pairs_csv(p, dir / "pairs.csv");
  const PairedSamples p2 = read_pairs_csv(dir / "pairs.csv");
  CHECK(p2.theta_u == p.theta_u);
  CHECK(p2.theta_d == p.theta_d);
  CHECK(p2.labels == p.labels);

  const DamageCurves c = damage_probability(p);
  write_curves_csv(c, dir / "curves.csv");
  const DamageCurves c2 = read_curves_csv(dir / "curves.csv");
  CHECK(c2.fractions == c.fractions);
  CHECK(c2.probabilities == c.probabilities);
  CHECK(c2.labels == c.labels);
  const Json s = curves_summary(c);
  CHECK(s.is_object());

  PairedSamples bad = p;
  bad.labels = {"a,b", "c"};
  CHECK_THROWS_AS(write_pairs_csv(bad, dir / "bad.csv"), InputError);
}

TEST_CASE("hashes and manifests") {
  const fs::path dir = scratch("manifest");
  std::ofstream(dir / "abc.txt") << "abc";
  CHECK(sha256_file(dir / "abc.txt") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  RunManifest m;
  m.command = "calibrate";
  m.config = Json{{"samples", 10}};
  m.inputs = {{"a.json", "00"}};
  m.seed = 42;
  m.tool_version = "t";
  m.timings = Json{{"total", 1.5}};
  m.outputs = {"chain.csv"};
  const RunManifest back = manifest_from_json(manifest_to_json(m));
  CHECK(back.command == m.command);
  CHECK(back.config == m.config);
  CHECK(back.inputs == m.inputs);
  CHECK(back.seed == 42);
  CHECK(back.outputs == m.outputs);
  CHECK(manifest_to_json(back) == manifest_to_json(m));
}
