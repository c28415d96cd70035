#include "mulch/serialize.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace mulch {
namespace {

using nlohmann::json;

[[nodiscard]] json parse_or_throw(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw std::invalid_argument(std::string(what) + ": malformed JSON");
  }
  return j;
}

// Field access errors from nlohmann surface as std::invalid_argument tagged
// with the loader's name.
template <typename Fn>
[[nodiscard]] auto convert_or_throw(const char* what, Fn&& fn) {
  try {
    return std::forward<Fn>(fn)();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

[[nodiscard]] json params_to_json(const BlockPairParams& p) {
  json alpha;
  for (std::size_t t = 0; t < kNumExcitationTypes; ++t) {
    alpha[excitation_name(static_cast<ExcitationType>(t))] = p.alpha[t];
  }
  return json{{"mu", p.mu}, {"alpha", std::move(alpha)}, {"c", p.c}};
}

[[nodiscard]] BlockPairParams params_from_json(const json& j) {
  BlockPairParams p;
  p.mu = j.at("mu").get<double>();
  const json& alpha = j.at("alpha");
  for (std::size_t t = 0; t < kNumExcitationTypes; ++t) {
    p.alpha[t] = alpha.at(excitation_name(static_cast<ExcitationType>(t))).get<double>();
  }
  p.c = j.at("c").get<std::vector<double>>();
  return p;
}

[[nodiscard]] json grid_to_json(const std::vector<BlockPairParams>& params) {
  json arr = json::array();
  for (const auto& p : params) arr.push_back(params_to_json(p));
  return arr;
}

[[nodiscard]] std::vector<BlockPairParams> grid_from_json(const json& arr) {
  std::vector<BlockPairParams> out;
  out.reserve(arr.size());
  for (const auto& p : arr) out.push_back(params_from_json(p));
  return out;
}

[[nodiscard]] json membership_to_json_obj(const Membership& z) {
  return json{{"labels", z.labels}, {"num_blocks", z.num_blocks}};
}

[[nodiscard]] Membership membership_from_json_obj(const json& j) {
  Membership z;
  z.labels = j.at("labels").get<std::vector<int>>();
  z.num_blocks = j.at("num_blocks").get<int>();
  return z;
}

[[nodiscard]] std::string dump(const json& j, int indent) {
  return j.dump(indent >= 0 ? indent : -1) + "\n";
}

}  // namespace

std::string model_to_json(const MulchModel& m, int indent) {
  json blocks = json::array();
  for (int a = 0; a < m.k; ++a) {
    json row = json::array();
    for (int b = 0; b < m.k; ++b) row.push_back(params_to_json(m.block_pair(a, b)));
    blocks.push_back(std::move(row));
  }
  const json j{{"K", m.k},
               {"betas", m.betas},
               {"blocks", std::move(blocks)},
               {"membership", m.membership.labels}};
  return dump(j, indent);
}

MulchModel model_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "model_from_json");
  MulchModel m = convert_or_throw("model_from_json", [&] {
    MulchModel out;
    out.k = j.at("K").get<int>();
    out.betas = j.at("betas").get<std::vector<double>>();
    const json& blocks = j.at("blocks");
    if (static_cast<int>(blocks.size()) != out.k) {
      throw std::invalid_argument("model_from_json: blocks must be a KxK grid");
    }
    for (const auto& row : blocks) {
      if (static_cast<int>(row.size()) != out.k) {
        throw std::invalid_argument("model_from_json: blocks must be a KxK grid");
      }
      for (const auto& p : row) out.params.push_back(params_from_json(p));
    }
    out.membership.labels = j.at("membership").get<std::vector<int>>();
    out.membership.num_blocks = out.k;
    return out;
  });
  validate(m);
  return m;
}

std::string membership_to_json(const Membership& z, int indent) {
  return dump(membership_to_json_obj(z), indent);
}

Membership membership_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "membership_from_json");
  Membership z = convert_or_throw("membership_from_json",
                                  [&] { return membership_from_json_obj(j); });
  validate(z);
  return z;
}

std::string sim_config_to_json(const SimConfig& cfg, int indent) {
  json j{{"pi", cfg.pi},
         {"betas", cfg.betas},
         {"duration", cfg.duration},
         {"n_nodes", cfg.n_nodes},
         {"seed", cfg.seed},
         {"allow_unstable", cfg.allow_unstable},
         {"max_events", cfg.max_events}};
  j["params"] = grid_to_json(cfg.params);
  j["membership_override"] =
      cfg.membership_override ? json(*cfg.membership_override) : json(nullptr);
  return dump(j, indent);
}

SimConfig sim_config_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "sim_config_from_json");
  SimConfig cfg = convert_or_throw("sim_config_from_json", [&] {
    SimConfig out;
    out.pi = j.at("pi").get<std::vector<double>>();
    out.betas = j.at("betas").get<std::vector<double>>();
    out.params = grid_from_json(j.at("params"));
    out.duration = j.at("duration").get<double>();
    out.n_nodes = j.at("n_nodes").get<int>();
    out.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("allow_unstable")) out.allow_unstable = j.at("allow_unstable").get<bool>();
    if (j.contains("max_events")) out.max_events = j.at("max_events").get<std::int64_t>();
    if (j.contains("membership_override") && !j.at("membership_override").is_null()) {
      out.membership_override = j.at("membership_override").get<std::vector<int>>();
    }
    return out;
  });
  const auto k = static_cast<std::size_t>(cfg.k());
  if (cfg.params.size() != k * k) {
    throw std::invalid_argument("sim_config_from_json: params must hold k*k block pairs");
  }
  return cfg;
}

std::string motif_matrix_to_json(const MotifMatrix& m, int indent) {
  json rows = json::array();
  for (int r = 0; r < 6; ++r) {
    json row = json::array();
    for (int c = 0; c < 6; ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return dump(json{{"delta", m.delta}, {"cells", std::move(rows)}}, indent);
}

MotifMatrix motif_matrix_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "motif_matrix_from_json");
  return convert_or_throw("motif_matrix_from_json", [&] {
    MotifMatrix m;
    m.delta = j.at("delta").get<double>();
    const json& rows = j.at("cells");
    if (rows.size() != 6) {
      throw std::invalid_argument("motif_matrix_from_json: cells must be 6x6");
    }
    for (int r = 0; r < 6; ++r) {
      const json& row = rows.at(r);
      if (row.size() != 6) {
        throw std::invalid_argument("motif_matrix_from_json: cells must be 6x6");
      }
      for (int c = 0; c < 6; ++c) {
        const auto v = row.at(c).get<std::int64_t>();
        if (v < 0) throw std::invalid_argument("motif_matrix_from_json: negative cell");
        m.at(r, c) = v;
      }
    }
    return m;
  });
}

std::string id_map_to_json(const std::vector<std::string>& node_ids, int indent) {
  json map = json::object();
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    map[node_ids[i]] = i;
  }
  return dump(map, indent);
}

std::vector<double> parse_beta_rates(const std::string& csv, const std::string& base_unit) {
  struct Unit {
    const char* suffix;
    double seconds;
  };
  static constexpr Unit kUnits[] = {
      {"s", 1.0},         {"m", 60.0},         {"h", 3600.0},       {"d", 86400.0},
      {"w", 7 * 86400.0}, {"mo", 30 * 86400.0}, {"y", 365 * 86400.0},
  };
  const auto unit_seconds = [&](const std::string& u) -> double {
    for (const auto& cand : kUnits) {
      if (u == cand.suffix) return cand.seconds;
    }
    throw std::invalid_argument("parse_beta_rates: unknown unit '" + u + "'");
  };
  const double base_seconds = unit_seconds(base_unit);

  std::vector<double> rates;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    const auto last = token.find_last_not_of(" \t");
    if (first == std::string::npos) {
      throw std::invalid_argument("parse_beta_rates: empty entry in '" + csv + "'");
    }
    token = token.substr(first, last - first + 1);
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || errno == ERANGE) {
      throw std::invalid_argument("parse_beta_rates: cannot parse '" + token + "'");
    }
    if (!(value > 0.0)) {
      throw std::invalid_argument("parse_beta_rates: value must be positive in '" + token + "'");
    }
    const std::string suffix(end);
    if (suffix.empty()) {
      rates.push_back(value);  // already a rate in the stream's unit
    } else {
      rates.push_back(base_seconds / (value * unit_seconds(suffix)));
    }
  }
  if (rates.empty()) {
    throw std::invalid_argument("parse_beta_rates: no values in '" + csv + "'");
  }
  return rates;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void save_model(const MulchModel& m, const std::string& path) {
  write_text_file(path, model_to_json(m));
}
MulchModel load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}
void save_membership(const Membership& z, const std::string& path) {
  write_text_file(path, membership_to_json(z));
}
Membership load_membership(const std::string& path) {
  return membership_from_json(read_text_file(path));
}
void save_sim_config(const SimConfig& cfg, const std::string& path) {
  write_text_file(path, sim_config_to_json(cfg));
}
SimConfig load_sim_config(const std::string& path) {
  return sim_config_from_json(read_text_file(path));
}
void save_motif_matrix(const MotifMatrix& m, const std::string& path) {
  write_text_file(path, motif_matrix_to_json(m));
}
MotifMatrix load_motif_matrix(const std::string& path) {
  return motif_matrix_from_json(read_text_file(path));
}

}  // namespace mulch
