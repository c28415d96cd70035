#pragma once

// JSON (de)serialization for the library's artifact types, plus the
// rate-or-duration parser used for kernel decay flags. String forms are
// deterministic: identical values produce identical bytes.

#include <string>
#include <vector>

#include "mulch/events.hpp"
#include "mulch/model.hpp"
#include "mulch/motifs.hpp"
#include "mulch/simulate.hpp"

namespace mulch {

[[nodiscard]] std::string model_to_json(const MulchModel& m, int indent = 2);
[[nodiscard]] MulchModel model_from_json(const std::string& text);
void save_model(const MulchModel& m, const std::string& path);
[[nodiscard]] MulchModel load_model(const std::string& path);

[[nodiscard]] std::string membership_to_json(const Membership& z, int indent = 2);
[[nodiscard]] Membership membership_from_json(const std::string& text);
void save_membership(const Membership& z, const std::string& path);
[[nodiscard]] Membership load_membership(const std::string& path);

[[nodiscard]] std::string sim_config_to_json(const SimConfig& cfg, int indent = 2);
[[nodiscard]] SimConfig sim_config_from_json(const std::string& text);
void save_sim_config(const SimConfig& cfg, const std::string& path);
[[nodiscard]] SimConfig load_sim_config(const std::string& path);

[[nodiscard]] std::string motif_matrix_to_json(const MotifMatrix& m, int indent = 2);
[[nodiscard]] MotifMatrix motif_matrix_from_json(const std::string& text);
void save_motif_matrix(const MotifMatrix& m, const std::string& path);
[[nodiscard]] MotifMatrix load_motif_matrix(const std::string& path);

// Sidecar object mapping each original node id to its dense index;
// node_ids[i] is the original id of dense node i.
[[nodiscard]] std::string id_map_to_json(const std::vector<std::string>& node_ids,
                                         int indent = 2);

// Comma-separated kernel decays. A bare number is a rate (1/time in the
// stream's unit); a number with a duration suffix (s, m, h, d, w, mo, y;
// mo = 30 days) is converted to the rate 1 / duration, interpreting the
// stream's unit as `base_unit`. E.g. "2w,1d,2h" with base_unit "d" gives
// rates {1/14, 1, 12}. Throws std::invalid_argument on malformed input,
// nonpositive values, or unknown units.
[[nodiscard]] std::vector<double> parse_beta_rates(const std::string& csv,
                                                   const std::string& base_unit);

void write_text_file(const std::string& path, const std::string& text);
[[nodiscard]] std::string read_text_file(const std::string& path);

}  // namespace mulch
