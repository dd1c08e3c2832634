#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deflab/gridoracle.hpp"
#include "deflab/minimax.hpp"

namespace deflab {

inline constexpr const char* kVersion = "0.3.0";

enum class BackendKind { ExactAffine, Sampled };

struct BackendConfig {
  BackendKind kind = BackendKind::Sampled;
  std::vector<int> resolution{201};
};

struct DeformationConfig {
  double c = 0.0;
  double eps = 0.5;
  RegionSpec d_spec = EmptyD{};
  BackendConfig backend;
  // Defaults to 2 eps / 1000.
  std::optional<double> step;
  int samples = 1000;
  int record_every = 1;
  int dump_trajectories = 0;
  double claim_tol = 1e-3;
};

struct MinimaxConfig {
  Point pin_zero;
  Point pin_e;
  PinMode pin_mode = PinMode::Interior;
  int m = 64;
  int ensemble_size = 8;
  int max_iters = 500;
  double tol = 1e-9;
  double jitter_scale = 0.1;
  double eps = 0.05;
  std::optional<double> radius;
};

struct OracleConfig {
  std::vector<int> resolution{257};
  // Neighbour count (2 in 1-D; 4 or 8 in 2-D; 6 or 26 in 3-D). Defaults per dimension.
  std::optional<int> connectivity;
  double grad_tol = 0.05;
};

struct PsConfig {
  double level = 0.0;
  double band_halfwidth = 0.1;
  int samples = 64;
  double grad_tol = 1e-3;
  int max_iters = 400;
  std::vector<int> resolution{201};
};

struct GeometryConfig {
  double r = 1.0;
  int sphere_samples = 2000;
};

struct ProofConfig {
  // Estimated with the optimizers when absent.
  std::optional<double> c1;
  std::optional<double> c2;
  double eps = 0.3;
  int flow_steps = 1000;
  std::vector<int> resolution{201};
  int ensemble_size = 16;
};

struct ExperimentConfig {
  FunctionalSpec functional = CatalogSpec{};
  DomainBox box;
  std::optional<DeformationConfig> deformation;
  std::optional<MinimaxConfig> minimax;
  std::optional<OracleConfig> oracle;
  std::optional<PsConfig> ps;
  std::optional<GeometryConfig> geometry;
  std::optional<ProofConfig> proof;
  std::uint64_t seed = 0;
  int workers = 0;
};

/// Throws Error(InvalidConfig) on malformed or out-of-range input.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Full echo with every default written out; parse_config(config_echo(c))
/// echoes back identically.
std::string config_echo(const ExperimentConfig& cfg);

inline constexpr const char* kSubcommands[] = {"deform", "minimax", "oracle", "pscheck", "proof-trace", "geometry"};
bool is_subcommand(std::string_view name);

/// Checks that the sections the subcommand needs are present and valid.
void validate_for(const ExperimentConfig& cfg, std::string_view subcommand);

struct RunResult {
  // Top-level keys: config, version, payload, wall_ms.
  std::string report;
  bool checks_passed = true;
};

/// Runs one subcommand and writes report.json plus CSV artifacts into out_dir.
RunResult run_experiment(const ExperimentConfig& cfg, std::string_view subcommand,
                         const std::filesystem::path& out_dir);

}  // namespace deflab
