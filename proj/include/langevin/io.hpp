#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "langevin/conductance.hpp"
#include "langevin/diagnostics.hpp"
#include "langevin/samplers.hpp"
#include "langevin/targets.hpp"

namespace langevin::io {

/// Shortest round-trip decimal form of `x`.
std::string format_double(double x);
/// Strict decimal parse; rejects NaN, Inf and trailing garbage.
double parse_double(const std::string& text);

/// CSV with header `y,x1,...,xd` and one observation per row.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Headerless numeric CSV, one matrix row per line.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// `step,event,theta_1..theta_d`, event in {A, R, L}.
void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);
Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::filesystem::path& path);

using KeyValues = std::map<std::string, std::string>;

/// Flat `key=value` lines; blank lines and lines starting with '#' are skipped.
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& kv);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

/// `prefix_len,coord,rhat_point,rhat_upper` (coordinates 1-based).
void write_rhat_csv(std::ostream& out, const DiagnosticsReport& report);
/// `coord,ess` (coordinates 1-based).
void write_ess_csv(std::ostream& out, const DiagnosticsReport& report);
/// `s,v,phi,argmin_bitmask`; phi is empty where undefined.
void write_profile_csv(std::ostream& out, const std::vector<ProfilePoint>& profile);

}  // namespace langevin::io
