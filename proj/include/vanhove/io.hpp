#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanhove/dynamics.hpp"
#include "vanhove/timeop.hpp"

namespace vanhove {

enum class OutputFormat { csv, json, both };

OutputFormat parse_format(const std::string& text);
inline bool wants_csv(OutputFormat f) { return f != OutputFormat::json; }
inline bool wants_json(OutputFormat f) { return f != OutputFormat::csv; }

// Shortest text that still round-trips: printf("%.17g").
std::string format_double(double v);

// One row per node: q, p[, x], value.
void write_field_csv(const std::filesystem::path& path, const RealField& field);

// <stem>.json describes the grid and names <stem>.bin, which holds the values
// as little-endian float64 in row-major order.
void write_field_binary(const std::filesystem::path& json_path, const RealField& field,
                        const std::string& name);
RealField read_field_binary(const std::filesystem::path& json_path);

// rho and sigma as <dir>/<name>_rho.* and <dir>/<name>_sigma.*, plus
// <dir>/<name>.json with hbar, t and `meta`. Returns the files written.
std::vector<std::filesystem::path> save_state(const std::filesystem::path& dir, const std::string& name,
                                              const ClassicalWavefunction& state, OutputFormat format,
                                              const nlohmann::json& meta = nlohmann::json::object());

void write_timeseries_csv(const std::filesystem::path& path, const std::vector<TimeSample>& series,
                          const std::vector<std::string>& observables);
nlohmann::json timeseries_json(const std::vector<TimeSample>& series,
                               const std::vector<std::string>& observables);

void write_tau_flow_csv(const std::filesystem::path& path, const TauFlowResult& flow);

// Pretty-printed with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& value);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vanhove
