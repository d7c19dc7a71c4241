#include "gamebounds/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace gamebounds {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream iss(s);
  std::vector<std::string> out;
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void fail(const std::string& src, int line, const std::string& msg) {
  throw SpecParseError(src + ":" + std::to_string(line) + ": " + msg);
}

double parse_bound(const std::string& tok, const std::string& src, int line) {
  if (tok == "inf" || tok == "+inf") return kInf;
  if (tok == "-inf") return -kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(src, line, "expected a number, got '" + tok + "'");
  }
}

}  // namespace

GameSpec parse_game_spec(std::istream& in, const std::string& src) {
  GameSpec spec;
  std::string section;
  std::string raw;
  int line = 0;
  int players_declared = -1;
  struct CoeffRow {
    int player, outcome, bin, line;
    std::vector<double> c;
    double b;
  };
  std::vector<CoeffRow> coeff_rows;
  std::vector<std::pair<double, double>> bounds;
  int coeff_width = -1;
  int actions_seen = 0;

  std::map<std::string, int> bin_index;

  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = trim(s.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(src, line, "unterminated section header");
      section = s.substr(1, s.size() - 2);
      if (section != "players" && section != "actions" && section != "bins" &&
          section != "coeff" && section != "bounds")
        fail(src, line, "unknown section [" + section + "]");
      continue;
    }
    if (section == "players") {
      if (players_declared >= 0) fail(src, line, "duplicate player count");
      try {
        players_declared = std::stoi(s);
      } catch (const std::exception&) {
        fail(src, line, "player count must be an integer");
      }
      if (players_declared < 1) fail(src, line, "need at least one player");
      spec.n_players = players_declared;
    } else if (section == "actions") {
      if (players_declared < 0) fail(src, line, "[actions] before [players]");
      if (actions_seen >= players_declared)
        fail(src, line, "more action rows than players");
      auto labels = split_ws(s);
      if (labels.size() < 2)
        fail(src, line, "player " + std::to_string(actions_seen + 1) +
                            " needs at least two actions");
      spec.action_labels.push_back(labels);
      ++actions_seen;
    } else if (section == "bins") {
      for (const auto& b : split_ws(s)) {
        if (bin_index.count(b)) fail(src, line, "duplicate bin '" + b + "'");
        bin_index[b] = static_cast<int>(spec.bin_labels.size());
        spec.bin_labels.push_back(b);
      }
    } else if (section == "coeff") {
      if (actions_seen != players_declared || players_declared < 0)
        fail(src, line, "[coeff] before all action rows");
      if (spec.bin_labels.empty()) fail(src, line, "[coeff] before [bins]");
      auto toks = split_ws(s);
      if (toks.size() < 4)
        fail(src, line, "coeff row needs: player actions bin coeffs... offset");
      CoeffRow row;
      row.line = line;
      try {
        row.player = std::stoi(toks[0]) - 1;
      } catch (const std::exception&) {
        fail(src, line, "player index must be an integer");
      }
      if (row.player < 0 || row.player >= spec.n_players)
        fail(src, line, "player index out of range");
      const auto acts = split_on(toks[1], ',');
      if (static_cast<int>(acts.size()) != spec.n_players)
        fail(src, line, "outcome needs one action per player");
      Outcome y(spec.n_players);
      for (int i = 0; i < spec.n_players; ++i) {
        const auto& al = spec.action_labels[i];
        const auto it = std::find(al.begin(), al.end(), acts[i]);
        if (it == al.end())
          fail(src, line, "unknown action '" + acts[i] + "' for player " +
                              std::to_string(i + 1));
        y[i] = static_cast<int>(it - al.begin());
      }
      int ymixed = 0;  // mixed-radix id, matching GameSpec::outcome_id
      for (int i = spec.n_players - 1; i >= 0; --i)
        ymixed = ymixed * static_cast<int>(spec.action_labels[i].size()) + y[i];
      row.outcome = ymixed;
      const auto bit = bin_index.find(toks[2]);
      if (bit == bin_index.end()) fail(src, line, "unknown bin '" + toks[2] + "'");
      row.bin = bit->second;
      if (coeff_width < 0) coeff_width = static_cast<int>(toks.size());
      if (static_cast<int>(toks.size()) != coeff_width)
        fail(src, line, "coeff row width differs from earlier rows");
      for (std::size_t t = 3; t + 1 < toks.size(); ++t)
        row.c.push_back(parse_bound(toks[t], src, line));
      row.b = parse_bound(toks.back(), src, line);
      coeff_rows.push_back(std::move(row));
    } else if (section == "bounds") {
      auto toks = split_ws(s);
      if (toks.size() != 2) fail(src, line, "bounds row: lower upper");
      bounds.emplace_back(parse_bound(toks[0], src, line),
                          parse_bound(toks[1], src, line));
    } else {
      fail(src, line, "content outside any section");
    }
  }

  if (players_declared < 0) fail(src, line, "missing [players]");
  if (actions_seen != players_declared) fail(src, line, "missing action rows");
  if (spec.bin_labels.empty()) fail(src, line, "missing [bins]");
  if (coeff_rows.empty()) fail(src, line, "missing [coeff]");
  if (bounds.empty()) fail(src, line, "missing [bounds]");

  const int d = coeff_width - 4;
  if (d < 1) fail(src, line, "coeff rows carry no parameter coefficients");
  if (static_cast<int>(bounds.size()) != d)
    fail(src, line, "[bounds] rows (" + std::to_string(bounds.size()) +
                        ") do not match coefficient dimension (" +
                        std::to_string(d) + ")");
  spec.param_dim = d;
  for (const auto& [l, u] : bounds) {
    spec.param_lower.push_back(l);
    spec.param_upper.push_back(u);
  }

  int n_outcomes = 1;
  for (int i = 0; i < spec.n_players; ++i)
    n_outcomes *= static_cast<int>(spec.action_labels[i].size());
  const std::size_t cells =
      static_cast<std::size_t>(spec.n_players) * n_outcomes * spec.bin_labels.size();
  spec.coeff.assign(cells * d, 0.0);
  spec.offset.assign(cells, 0.0);
  std::vector<int> seen(cells, 0);
  for (const auto& row : coeff_rows) {
    const std::size_t cell =
        (static_cast<std::size_t>(row.player) * n_outcomes + row.outcome) *
            spec.bin_labels.size() +
        row.bin;
    if (seen[cell]++)
      fail(src, row.line, "duplicate coeff row for (player, outcome, bin)");
    for (int k = 0; k < d; ++k) spec.coeff[cell * d + k] = row.c[k];
    spec.offset[cell] = row.b;
  }
  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (!seen[cell]) {
      const int bin = static_cast<int>(cell % spec.bin_labels.size());
      const int rest = static_cast<int>(cell / spec.bin_labels.size());
      const int outcome = rest % n_outcomes;
      const int player = rest / n_outcomes;
      std::string acts;
      int rem = outcome;
      for (std::size_t i = 0; i < spec.action_labels.size(); ++i) {
        const int na = static_cast<int>(spec.action_labels[i].size());
        acts += (i ? "," : "") + spec.action_labels[i][rem % na];
        rem /= na;
      }
      fail(src, line,
           "missing coeff row for player " + std::to_string(player + 1) +
               ", outcome " + acts + ", bin '" + spec.bin_labels[bin] + "'");
    }
  }
  spec.finalize();
  return spec;
}

GameSpec load_game_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecParseError(path + ": cannot open game spec file");
  return parse_game_spec(in, path);
}

void write_dataset_csv(std::ostream& out, const GameSpec& spec,
                       const MarketDataset& data) {
  out << "market_id,x_bin";
  for (int i = 0; i < spec.n_players; ++i) out << ",y_" << (i + 1);
  if (data.has_omega) out << ",omega";
  out << "\n";
  out.precision(17);
  for (const auto& row : data.rows) {
    out << row.market_id << ',' << spec.bin_labels[row.x_bin];
    const Outcome y = spec.outcome_actions(row.outcome);
    for (int i = 0; i < spec.n_players; ++i)
      out << ',' << spec.action_labels[i][y[i]];
    if (data.has_omega) out << ',' << (row.omega ? *row.omega : 0.0);
    out << "\n";
  }
}

MarketDataset read_dataset_csv(std::istream& in, const GameSpec& spec) {
  MarketDataset data;
  std::string raw;
  if (!std::getline(in, raw))
    throw SpecParseError("dataset: missing header line");
  const auto header = split_on(trim(raw), ',');
  const std::size_t base_cols = 2 + static_cast<std::size_t>(spec.n_players);
  if (header.size() == base_cols + 1 && header.back() == "omega")
    data.has_omega = true;
  else if (header.size() != base_cols)
    throw SpecParseError("dataset: header does not match the game spec");

  int line = 1;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto toks = split_on(s, ',');
    if (toks.size() != header.size())
      throw SpecParseError("dataset:" + std::to_string(line) +
                           ": wrong column count");
    MarketRow row;
    row.market_id = std::stoll(toks[0]);
    const auto bit =
        std::find(spec.bin_labels.begin(), spec.bin_labels.end(), toks[1]);
    if (bit == spec.bin_labels.end())
      throw SpecParseError("dataset:" + std::to_string(line) + ": unknown bin '" +
                           toks[1] + "'");
    row.x_bin = static_cast<int>(bit - spec.bin_labels.begin());
    Outcome y(spec.n_players);
    for (int i = 0; i < spec.n_players; ++i) {
      const auto& al = spec.action_labels[i];
      const auto it = std::find(al.begin(), al.end(), toks[2 + i]);
      if (it == al.end())
        throw SpecParseError("dataset:" + std::to_string(line) +
                             ": unknown action '" + toks[2 + i] + "'");
      y[i] = static_cast<int>(it - al.begin());
    }
    row.outcome = spec.outcome_id(y);
    if (data.has_omega) row.omega = std::stod(toks.back());
    data.rows.push_back(row);
  }
  return data;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << "quantity,coordinate,lower,upper,status,seed\n";
  out.precision(12);
  for (const auto& r : rows)
    out << r.quantity << ',' << r.coordinate << ',' << r.lower << ',' << r.upper
        << ',' << r.status << ',' << r.seed << "\n";
}

std::string run_manifest(const RunConfig& cfg, const std::string& results_blob) {
  nlohmann::json j;
  j["spec"] = cfg.spec_path;
  j["data"] = cfg.data_path;
  j["simulate"] = cfg.simulate;
  j["sim_theta"] = cfg.sim_theta;
  j["sim_selection"] = cfg.sim_selection;
  j["sim_n"] = cfg.sim_n;
  j["family"] = cfg.family;
  j["K"] = cfg.K;
  j["alpha"] = cfg.alpha;
  j["omega_nodes"] = cfg.omega_nodes;
  j["sigma_omega"] = cfg.sigma_omega;
  j["starts"] = cfg.starts;
  j["smooth_alpha"] = cfg.smooth_alpha;
  j["tol"] = cfg.tol;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  // FNV-1a over the serialized settings + results, for byte-level audits
  std::uint64_t h = 1469598103934665603ULL;
  const std::string blob = j.dump() + results_blob;
  for (unsigned char c : blob) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  j["digest"] = hex.str();
  return j.dump(2);
}

InequalityFamily family_from_config(const GameSpec& spec, const RunConfig& cfg) {
  InequalityFamily fam;
  if (cfg.family == "abj")
    fam = InequalityFamily::abj(spec);
  else if (cfg.family == "abj+lb")
    fam = InequalityFamily::abj_lb(spec);
  else if (cfg.family == "sharpK" || cfg.family == "sharp")
    fam = InequalityFamily::sharpK(spec,
                                   cfg.K > 0 ? cfg.K : spec.n_outcomes());
  else
    throw std::invalid_argument("unknown family '" + cfg.family + "'");
  if (cfg.sigma_omega != 0.0)
    fam.grid = MixingGrid::logistic_quantiles(cfg.omega_nodes, cfg.sigma_omega);
  return fam;
}

IdentifyOptions options_from_config(const RunConfig& cfg) {
  IdentifyOptions opts;
  opts.starts = cfg.starts;
  opts.seed = cfg.seed;
  opts.smooth_alpha = cfg.smooth_alpha;
  opts.feas_tol = cfg.tol;
  return opts;
}

}  // namespace gamebounds
