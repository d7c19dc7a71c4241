#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gamebounds/bench.hpp"
#include "gamebounds/io.hpp"

namespace gb = gamebounds;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUsage = 64;

std::vector<double> parse_reals(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

gb::SelectionRule selection_from_name(const std::string& name) {
  if (name == "uniform") return gb::SelectionRule::uniform();
  if (name == "first") return gb::SelectionRule::first_listed();
  throw std::invalid_argument("unknown selection rule '" + name + "'");
}

/// CCP source: a dataset CSV, an inline phi vector (bins ';'-separated),
/// or a simulation block.
struct CcpSource {
  std::string data_path;
  std::string phi_inline;
  bool simulate = false;
};

gb::CCPTable resolve_ccp(const gb::GameSpec& spec, const CcpSource& src,
                         const gb::RunConfig& cfg) {
  const int provided = (!src.data_path.empty()) + (!src.phi_inline.empty()) +
                       (src.simulate ? 1 : 0);
  if (provided != 1)
    throw std::invalid_argument(
        "provide exactly one of --data, --phi, or --simulate");
  if (!src.data_path.empty()) {
    std::ifstream in(src.data_path);
    if (!in) throw std::runtime_error("cannot open " + src.data_path);
    const gb::MarketDataset data = gb::read_dataset_csv(in, spec);
    return gb::frequency_ccp(data, spec.n_outcomes(), spec.n_bins());
  }
  if (!src.phi_inline.empty()) {
    gb::CCPTable t = gb::CCPTable::uniform_like(spec);
    std::stringstream ss(src.phi_inline);
    std::string bin_part;
    int x = 0;
    while (std::getline(ss, bin_part, ';')) {
      const auto vals = parse_reals(bin_part);
      if (x >= spec.n_bins() ||
          static_cast<int>(vals.size()) != spec.n_outcomes())
        throw std::invalid_argument("--phi shape does not match the game");
      for (int y = 0; y < spec.n_outcomes(); ++y) t.at(y, x) = vals[y];
      ++x;
    }
    if (x != spec.n_bins())
      throw std::invalid_argument("--phi must cover every bin ( ';' separated)");
    t.validate(1e-6);
    return t;
  }
  gb::Theta th0{cfg.sim_theta};
  std::optional<gb::MixingGrid> grid;
  if (cfg.sigma_omega != 0.0)
    grid = gb::MixingGrid::logistic_quantiles(cfg.omega_nodes, cfg.sigma_omega);
  const auto data = gb::simulate_dataset(
      spec, th0, selection_from_name(cfg.sim_selection),
      std::vector<std::int64_t>(spec.n_bins(), cfg.sim_n),
      grid ? &*grid : nullptr, cfg.seed, cfg.threads);
  return gb::frequency_ccp(data, spec.n_outcomes(), spec.n_bins());
}

void emit_results(const gb::RunConfig& cfg,
                  const std::vector<gb::ResultRow>& rows) {
  std::ostringstream blob;
  gb::write_results_csv(blob, rows);
  if (cfg.out_path.empty()) {
    std::cout << blob.str();
    return;
  }
  std::ofstream out(cfg.out_path);
  if (!out) throw std::runtime_error("cannot write " + cfg.out_path);
  out << blob.str();
  std::ofstream man(cfg.out_path + ".manifest.json");
  man << gb::run_manifest(cfg, blob.str()) << "\n";
}

std::string coordinate_name(int k) { return "theta_" + std::to_string(k + 1); }

void add_family_flags(CLI::App* cmd, gb::RunConfig& cfg) {
  cmd->add_option("--family", cfg.family, "abj | abj+lb | sharpK");
  cmd->add_option("--K", cfg.K, "event-size cap for sharpK (0 = |Y|)");
  cmd->add_option("--omega-nodes", cfg.omega_nodes, "mixing grid size");
  cmd->add_option("--sigma-omega", cfg.sigma_omega, "mixing scale (0 = off)");
  cmd->add_option("--starts", cfg.starts, "multi-start count");
  cmd->add_option("--smooth-alpha", cfg.smooth_alpha, "smooth-max sharpness");
  cmd->add_option("--tol", cfg.tol, "feasibility tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-identified estimation of discrete complete-information games"};
  app.require_subcommand(1);

  gb::RunConfig cfg;
  CcpSource src;
  std::string theta_csv, direction_csv;
  int coord = 0;
  bool all_coords = false;
  std::string bins_csv = "1";
  gb::BenchConfig bench_cfg;

  auto add_common = [&](CLI::App* cmd, bool needs_ccp) {
    cmd->add_option("--spec", cfg.spec_path, "game spec file")->required();
    cmd->add_option("--seed", cfg.seed, "rng seed");
    cmd->add_option("--threads", cfg.threads, "worker threads");
    cmd->add_option("--out", cfg.out_path, "results CSV path (default stdout)");
    if (needs_ccp) {
      cmd->add_option("--data", src.data_path, "dataset CSV");
      cmd->add_option("--phi", src.phi_inline,
                      "inline CCP, outcomes ',' and bins ';' separated");
      cmd->add_flag("--simulate", src.simulate, "simulate data (see --theta0)");
      cmd->add_option("--theta0", theta_csv, "data-generating theta (simulate)");
      cmd->add_option("--n", cfg.sim_n, "markets per bin (simulate)");
      cmd->add_option("--selection", cfg.sim_selection, "uniform | first");
    }
  };

  auto* c_sim = app.add_subcommand("simulate", "draw a dataset and write CSV");
  add_common(c_sim, false);
  c_sim->add_option("--theta0", theta_csv, "data-generating theta")->required();
  c_sim->add_option("--n", cfg.sim_n, "markets per bin")->required();
  c_sim->add_option("--selection", cfg.sim_selection, "uniform | first");
  c_sim->add_option("--omega-nodes", cfg.omega_nodes, "mixing grid size");
  c_sim->add_option("--sigma-omega", cfg.sigma_omega, "mixing scale (0 = off)");

  auto* c_ccp = app.add_subcommand("ccp", "frequency CCP table from data");
  add_common(c_ccp, true);

  auto* c_member = app.add_subcommand("member", "test one theta for membership");
  add_common(c_member, true);
  c_member->add_option("--theta", theta_csv, "theta to test")->required();
  add_family_flags(c_member, cfg);

  auto* c_point = app.add_subcommand("point", "find a feasible parameter point");
  add_common(c_point, true);
  add_family_flags(c_point, cfg);

  auto* c_proj = app.add_subcommand("project", "projection intervals");
  add_common(c_proj, true);
  add_family_flags(c_proj, cfg);
  c_proj->add_option("--coord", coord, "1-based coordinate to project");
  c_proj->add_flag("--all-coords", all_coords, "project every coordinate");
  c_proj->add_option("--direction", direction_csv, "explicit direction vector");

  auto* c_conf = app.add_subcommand("confproject",
                                    "projection intervals of the confidence set");
  add_common(c_conf, true);
  add_family_flags(c_conf, cfg);
  c_conf->add_option("--alpha", cfg.alpha, "confidence level complement");
  c_conf->add_option("--coord", coord, "1-based coordinate to project");
  c_conf->add_flag("--all-coords", all_coords, "project every coordinate");

  auto* c_bench = app.add_subcommand("bench", "closed-form vs simulated-criterion cost");
  add_common(c_bench, false);
  c_bench->add_option("--theta0", theta_csv, "evaluation theta")->required();
  c_bench->add_option("--bins", bins_csv, "bin counts, comma separated");
  c_bench->add_option("--draws", bench_cfg.draws, "oracle draws per evaluation");
  c_bench->add_option("--grid-size", bench_cfg.theta_grid_size,
                      "#(Theta) for grid-search extrapolation");
  c_bench->add_option("--reps", bench_cfg.reps, "timing repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const gb::GameSpec spec = gb::load_game_spec(cfg.spec_path);
    if (!theta_csv.empty()) cfg.sim_theta = parse_reals(theta_csv);
    cfg.simulate = src.simulate;
    const gb::IdentifyOptions opts = gb::options_from_config(cfg);

    if (c_sim->parsed()) {
      gb::Theta th0{cfg.sim_theta};
      std::optional<gb::MixingGrid> grid;
      if (cfg.sigma_omega != 0.0)
        grid = gb::MixingGrid::logistic_quantiles(cfg.omega_nodes,
                                                  cfg.sigma_omega);
      const auto data = gb::simulate_dataset(
          spec, th0, selection_from_name(cfg.sim_selection),
          std::vector<std::int64_t>(spec.n_bins(), cfg.sim_n),
          grid ? &*grid : nullptr, cfg.seed, cfg.threads);
      std::ostringstream blob;
      gb::write_dataset_csv(blob, spec, data);
      if (cfg.out_path.empty()) {
        std::cout << blob.str();
      } else {
        std::ofstream out(cfg.out_path);
        if (!out) throw std::runtime_error("cannot write " + cfg.out_path);
        out << blob.str();
        std::ofstream man(cfg.out_path + ".manifest.json");
        man << gb::run_manifest(cfg, blob.str()) << "\n";
      }
      return kExitOk;
    }

    if (c_bench->parsed()) {
      bench_cfg.bin_counts.clear();
      for (double v : parse_reals(bins_csv))
        bench_cfg.bin_counts.push_back(static_cast<int>(v));
      bench_cfg.seed = cfg.seed;
      const auto rows = gb::bench_compare(spec, gb::Theta{cfg.sim_theta}, bench_cfg);
      std::cout << "bins,abj_seconds,sharp_seconds,ct_tau_seconds,ct_extrapolated_seconds\n";
      for (const auto& r : rows)
        std::cout << r.bins << ',' << r.abj_seconds << ',' << r.sharp_seconds
                  << ',' << r.ct_tau_seconds << ',' << r.ct_seconds << "\n";
      return kExitOk;
    }

    const gb::CCPTable ccp = resolve_ccp(spec, src, cfg);

    if (c_ccp->parsed()) {
      std::vector<gb::ResultRow> rows;
      for (int x = 0; x < spec.n_bins(); ++x)
        for (int y = 0; y < spec.n_outcomes(); ++y) {
          const gb::Outcome acts = spec.outcome_actions(y);
          std::string name = spec.bin_labels[x] + ":";
          for (int i = 0; i < spec.n_players; ++i)
            name += (i ? "|" : "") + spec.action_labels[i][acts[i]];
          rows.push_back({"ccp", name, ccp(y, x), ccp(y, x), "ok", cfg.seed});
        }
      emit_results(cfg, rows);
      return kExitOk;
    }

    const gb::InequalityFamily family = gb::family_from_config(spec, cfg);

    if (c_member->parsed()) {
      const gb::Theta th{cfg.sim_theta};
      const double q = gb::criterion_Q(spec, th, ccp, family, opts);
      const bool in = gb::membership(spec, th, ccp, family, opts);
      std::cout << "Q = " << q << (in ? "  (member)" : "  (rejected)") << "\n";
      return in ? kExitOk : kExitInfeasible;
    }

    if (c_point->parsed()) {
      const gb::SolveReport rep = gb::find_feasible_point(spec, ccp, family, opts);
      std::cout << "status = "
                << (rep.status == gb::SolveReport::Status::optimal ? "optimal"
                                                                   : "infeasible")
                << ", Q = " << rep.objective << ", theta =";
      for (double v : rep.theta.values) std::cout << ' ' << v;
      std::cout << "\n";
      return rep.status == gb::SolveReport::Status::optimal ? kExitOk
                                                            : kExitInfeasible;
    }

    const bool conf = c_conf->parsed();
    std::vector<std::vector<double>> directions;
    std::vector<std::string> names;
    if (all_coords) {
      for (int k = 0; k < spec.param_dim; ++k) {
        std::vector<double> p(spec.param_dim, 0.0);
        p[k] = 1.0;
        directions.push_back(p);
        names.push_back(coordinate_name(k));
      }
    } else if (!direction_csv.empty()) {
      directions.push_back(parse_reals(direction_csv));
      names.push_back("direction");
    } else {
      if (coord < 1 || coord > spec.param_dim)
        throw std::invalid_argument("--coord out of range (or use --all-coords)");
      std::vector<double> p(spec.param_dim, 0.0);
      p[coord - 1] = 1.0;
      directions.push_back(p);
      names.push_back(coordinate_name(coord - 1));
    }

    std::optional<gb::ConfidenceBand> band;
    if (conf) band = gb::fs_band(ccp, cfg.alpha);

    std::vector<gb::ResultRow> rows;
    bool any_infeasible = false;
    for (std::size_t j = 0; j < directions.size(); ++j) {
      const auto lo = conf
                          ? gb::confidence_project(spec, *band, family,
                                                   directions[j],
                                                   gb::Sense::lower, opts)
                          : gb::project(spec, ccp, family, directions[j],
                                        gb::Sense::lower, opts);
      const auto hi = conf
                          ? gb::confidence_project(spec, *band, family,
                                                   directions[j],
                                                   gb::Sense::upper, opts)
                          : gb::project(spec, ccp, family, directions[j],
                                        gb::Sense::upper, opts);
      const bool ok = lo.report.status == gb::SolveReport::Status::optimal &&
                      hi.report.status == gb::SolveReport::Status::optimal;
      any_infeasible = any_infeasible || !ok;
      rows.push_back({conf ? "confproject" : "project", names[j], lo.endpoint,
                      hi.endpoint, ok ? "optimal" : "infeasible", cfg.seed});
    }
    emit_results(cfg, rows);
    return any_infeasible ? kExitInfeasible : kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
