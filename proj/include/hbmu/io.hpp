#pragma once

// File formats.
//   matrices     {"rows": r, "cols": c, "data": [row-major values]}
//   model        {n_dof, mass, k0, substructures: [matrix...], labels: [...]}
//   dataset      {n_modes, n_segments, observed_dofs (one-based), freq_sq: [...],
//                 mode_shapes: [...]} with the library's stacking order
//   chain        <name>.csv, one row per iteration, columns
//                iter, theta:<label>..., omega_sq:<i>..., [beta], hyper:<name>..., [phi:<k>...]
//                plus sidecar <name>.json with run metadata
// Doubles are written in shortest round-trip form, so reading back is exact.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hbmu/chain.hpp"
#include "hbmu/damage.hpp"
#include "hbmu/diagnostics.hpp"
#include "hbmu/model.hpp"
#include "hbmu/synthetic.hpp"

namespace hbmu {

using Json = nlohmann::json;

std::string format_double(double x);
// Throws InputError naming `context` on malformed input.
double parse_double(std::string_view s, const std::string& context);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& path);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& path);

Json model_to_json(const StructuralModel& model);
StructuralModel model_from_json(const Json& j);
Json dataset_to_json(const ModalDataset& data);
ModalDataset dataset_from_json(const Json& j);
Json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const Json& j);

// Benchmark spec fields: n_stories, n_modes (required); story_mass, story_stiffness
// (number or array), substructuring ("per_story" | "per_face" | "custom"),
// half_width_x, half_width_y, observed_dofs (one-based), n_segments,
// noise {freq_cov, shape_cov}, seed, damage [{index (one-based), fraction}],
// and for custom models a "model" object in the model schema.
BenchmarkSpec benchmark_spec_from_json(const Json& j);
Json benchmark_spec_to_json(const BenchmarkSpec& spec);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

Json chain_meta_to_json(const Chain& chain);
// Writes `csv` and its sidecar (same stem, .json). `extra` is merged into the sidecar.
void write_chain(const Chain& chain, const std::filesystem::path& csv, const Json& extra = {});
// The sidecar is optional; without it metadata keeps default values.
Chain read_chain(const std::filesystem::path& csv);

void write_pairs_csv(const PairedSamples& pairs, const std::filesystem::path& csv);
PairedSamples read_pairs_csv(const std::filesystem::path& csv);

void write_curves_csv(const DamageCurves& curves, const std::filesystem::path& csv);
DamageCurves read_curves_csv(const std::filesystem::path& csv);
Json curves_summary(const DamageCurves& curves);

Json ergodicity_to_json(const ErgodicityReport& report);
Json burn_in_to_json(const BurnInResult& result, const std::vector<std::string>& labels);
// Columns start, z:<label>...
void write_burn_in_trace(const BurnInResult& result, const std::vector<std::string>& labels,
                         const std::filesystem::path& csv);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  Json config;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::uint64_t seed = 0;
  std::string tool_version;
  Json timings;
  std::vector<std::string> outputs;
};

Json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const Json& j);

}  // namespace hbmu
