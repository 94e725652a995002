#include "vanhove/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vanhove {

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  if (text == "both") return OutputFormat::both;
  throw ParseError("unknown output format '" + text + "' (expected csv, json or both)");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

nlohmann::json axis_json(const Axis& a) { return {{"min", a.min}, {"max", a.max}, {"n", a.n}}; }

Axis axis_from(const nlohmann::json& j) { return {j.at("min").get<double>(), j.at("max").get<double>(), j.at("n").get<int>()}; }

}  // namespace

void write_field_csv(const std::filesystem::path& path, const RealField& field) {
  std::ofstream out = open_out(path);
  const PhaseSpaceGrid& grid = field.grid();
  out << (grid.has_x() ? "q,p,x,value\n" : "q,p,value\n");
  const auto [nq, np, nx] = grid.shape();
  std::size_t idx = 0;
  for (int i = 0; i < nq; ++i) {
    for (int j = 0; j < np; ++j) {
      for (int k = 0; k < nx; ++k, ++idx) {
        out << format_double(grid.q().coord(i)) << ',' << format_double(grid.p().coord(j)) << ',';
        if (grid.has_x()) out << format_double(grid.x().coord(k)) << ',';
        out << format_double(field[idx]) << '\n';
      }
    }
  }
}

void write_field_binary(const std::filesystem::path& json_path, const RealField& field,
                        const std::string& name) {
  std::filesystem::path bin = json_path;
  bin.replace_extension(".bin");
  const PhaseSpaceGrid& grid = field.grid();
  nlohmann::json header = {{"name", name},
                           {"dtype", "float64"},
                           {"byte_order", "little"},
                           {"layout", "row-major, q slowest"},
                           {"data", bin.filename().string()},
                           {"q", axis_json(grid.q())},
                           {"p", axis_json(grid.p())}};
  if (grid.has_x()) header["x"] = axis_json(grid.x());
  write_json(json_path, header);
  std::ofstream out = open_out(bin, std::ios::out | std::ios::binary);
  static_assert(std::endian::native == std::endian::little, "binary field output assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.size() * sizeof(double)));
}

RealField read_field_binary(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot read " + json_path.string());
  const nlohmann::json header = nlohmann::json::parse(in);
  const PhaseSpaceGrid grid = header.contains("x")
                                  ? PhaseSpaceGrid(axis_from(header["q"]), axis_from(header["p"]), axis_from(header["x"]))
                                  : PhaseSpaceGrid(axis_from(header["q"]), axis_from(header["p"]));
  std::ifstream bin(json_path.parent_path() / header.at("data").get<std::string>(), std::ios::binary);
  std::vector<double> values(grid.size());
  bin.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double))) {
    throw std::runtime_error("truncated field data for " + json_path.string());
  }
  return RealField(grid, std::move(values));
}

std::vector<std::filesystem::path> save_state(const std::filesystem::path& dir, const std::string& name,
                                              const ClassicalWavefunction& state, OutputFormat format,
                                              const nlohmann::json& meta) {
  std::vector<std::filesystem::path> written;
  nlohmann::json header = {{"hbar", state.hbar}, {"t", state.t}, {"rho", name + "_rho"}, {"sigma", name + "_sigma"}};
  if (!meta.empty()) header["meta"] = meta;
  write_json(dir / (name + ".json"), header);
  written.push_back(dir / (name + ".json"));
  for (const auto& [suffix, field] : {std::pair{"rho", &state.rho.field()}, std::pair{"sigma", &state.sigma.field()}}) {
    const std::string stem = name + "_" + suffix;
    if (wants_csv(format)) {
      write_field_csv(dir / (stem + ".csv"), *field);
      written.push_back(dir / (stem + ".csv"));
    }
    if (wants_json(format)) {
      write_field_binary(dir / (stem + ".json"), *field, stem);
      written.push_back(dir / (stem + ".json"));
      written.push_back(dir / (stem + ".bin"));
    }
  }
  return written;
}

void write_timeseries_csv(const std::filesystem::path& path, const std::vector<TimeSample>& series,
                          const std::vector<std::string>& observables) {
  std::ofstream out = open_out(path);
  out << "t,norm,energy,r1,r2";
  for (const std::string& name : observables) out << ",discrepancy_" << name;
  out << '\n';
  for (const TimeSample& s : series) {
    out << format_double(s.t) << ',' << format_double(s.norm) << ',' << format_double(s.energy) << ','
        << format_double(s.r1) << ',' << format_double(s.r2);
    for (double d : s.discrepancies) out << ',' << format_double(d);
    out << '\n';
  }
}

nlohmann::json timeseries_json(const std::vector<TimeSample>& series,
                               const std::vector<std::string>& observables) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TimeSample& s : series) {
    nlohmann::json row = {{"t", s.t}, {"norm", s.norm}, {"energy", s.energy}, {"r1", s.r1}, {"r2", s.r2}};
    for (std::size_t i = 0; i < observables.size() && i < s.discrepancies.size(); ++i) {
      row["discrepancy_" + observables[i]] = s.discrepancies[i];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_tau_flow_csv(const std::filesystem::path& path, const TauFlowResult& flow) {
  std::ofstream out = open_out(path);
  out << "lambda,q,p,H,reason\n";
  for (std::size_t i = 0; i < flow.lambda.size(); ++i) {
    const bool last = i + 1 == flow.lambda.size();
    out << format_double(flow.lambda[i]) << ',' << format_double(flow.q[i]) << ',' << format_double(flow.p[i])
        << ',' << format_double(flow.energy[i]) << ',' << (last ? to_string(flow.reason) : "") << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out = open_out(path);
  out << value.dump(2) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

}  // namespace vanhove
