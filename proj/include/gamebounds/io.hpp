#pragma once

#include <iosfwd>
#include <string>

#include "gamebounds/infer.hpp"

namespace gamebounds {

/// Parse failure with line/field context in what().
struct SpecParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Structured-text game description with sections [players], [actions],
/// [bins], [coeff], [bounds]; grammar documented in the README. Every
/// (player, outcome, bin) coefficient row must be present exactly once.
GameSpec parse_game_spec(std::istream& in, const std::string& source_name);
GameSpec load_game_spec(const std::string& path);

/// Dataset CSV: header market_id,x_bin,y_1,...,y_I[,omega]; bins and
/// actions written as their labels.
void write_dataset_csv(std::ostream& out, const GameSpec& spec,
                       const MarketDataset& data);
MarketDataset read_dataset_csv(std::istream& in, const GameSpec& spec);

struct ResultRow {
  std::string quantity;
  std::string coordinate;
  double lower = 0.0;
  double upper = 0.0;
  std::string status;
  std::uint64_t seed = 0;
};

/// Results CSV: quantity,coordinate,lower,upper,status,seed.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);

struct RunConfig {
  std::string spec_path;
  std::string data_path;             // exclusive with the simulation block
  bool simulate = false;
  std::vector<double> sim_theta;
  std::string sim_selection = "uniform";
  std::int64_t sim_n = 0;

  std::string family = "abj";        // abj | abj+lb | sharpK
  int K = 0;                         // 0 = |Y| for sharp
  double alpha = 0.05;
  int omega_nodes = 11;
  double sigma_omega = 0.0;
  int starts = 4;
  double smooth_alpha = 200.0;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_path;
};

/// Stable digest + settings record for reproducibility audits (JSON).
std::string run_manifest(const RunConfig& cfg, const std::string& results_blob);

InequalityFamily family_from_config(const GameSpec& spec, const RunConfig& cfg);
IdentifyOptions options_from_config(const RunConfig& cfg);

}  // namespace gamebounds
