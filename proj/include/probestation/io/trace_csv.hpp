#pragma once

// Versioned CSV trace format, in micrometres and micronewtons:
//
//   # stylus-trace v1
//   # meta: {"device":"REF-CANTILEVER",...}
//   z_cmd_um,z_dut_um,force_uN,force_std_uN,mode
//   0,0,0,,NoContact
//
// Every data row has five fields; the last two may be empty. Numbers use the shortest decimal form
// that round-trips, so write -> read -> write is byte-identical.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "probestation/analysis.hpp"
#include "probestation/contact.hpp"
#include "probestation/error.hpp"
#include "probestation/instrument.hpp"
#include "probestation/units.hpp"

namespace probestation::io {

inline constexpr std::string_view trace_magic = "# stylus-trace v1";
inline constexpr std::string_view trace_meta_prefix = "# meta: ";
inline constexpr std::string_view trace_columns = "z_cmd_um,z_dut_um,force_uN,force_std_uN,mode";

struct TraceRow {
  double z_cmd_um = 0.0;
  double z_dut_um = 0.0;
  double force_uN = 0.0;
  std::optional<double> force_std_uN;
  std::optional<ContactMode> mode;
};

struct TraceFile {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TraceRow> rows;
};

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string write_trace_string(const TraceFile& tf) {
  std::string out;
  out += trace_magic;
  out += '\n';
  out += trace_meta_prefix;
  out += tf.meta.dump();
  out += '\n';
  out += trace_columns;
  out += '\n';
  for (const auto& r : tf.rows) {
    out += format_number(r.z_cmd_um);
    out += ',';
    out += format_number(r.z_dut_um);
    out += ',';
    out += format_number(r.force_uN);
    out += ',';
    if (r.force_std_uN) out += format_number(*r.force_std_uN);
    out += ',';
    if (r.mode) out += to_string(*r.mode);
    out += '\n';
  }
  return out;
}

struct TraceReadResult {
  TraceFile file;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      f.push_back(line.substr(start));
      break;
    }
    f.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return f;
}

inline double parse_number(std::string_view s, std::size_t line_no, const char* column) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("trace row " + std::to_string(line_no) + ": invalid number '" + std::string(s) +
                      "' in column " + column);
  return v;
}

}  // namespace detail

inline TraceReadResult read_trace_string(std::string_view text) {
  TraceReadResult res;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      nl = text.size();
      res.warnings.push_back("missing final newline");
    }
    line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      throw ConfigError("trace row " + std::to_string(line_no) + ": CR line endings are not allowed");
    }
    return true;
  };

  std::string_view line;
  if (!next_line(line) || line != trace_magic)
    throw ConfigError("trace row 1: expected header '" + std::string(trace_magic) + "'");
  if (!next_line(line) || line.substr(0, trace_meta_prefix.size()) != trace_meta_prefix)
    throw ConfigError("trace row 2: expected '# meta: <json>'");
  try {
    res.file.meta = nlohmann::json::parse(line.substr(trace_meta_prefix.size()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("trace row 2: invalid meta JSON: ") + e.what());
  }
  if (!res.file.meta.is_object()) throw ConfigError("trace row 2: meta must be a JSON object");
  if (!next_line(line) || line != trace_columns)
    throw ConfigError("trace row 3: expected column header '" + std::string(trace_columns) + "'");

  while (next_line(line)) {
    if (line.empty()) throw ConfigError("trace row " + std::to_string(line_no) + ": empty line");
    const auto f = detail::split_fields(line);
    if (f.size() != 5)
      throw ConfigError("trace row " + std::to_string(line_no) + ": expected 5 fields, found " +
                        std::to_string(f.size()));
    TraceRow r;
    r.z_cmd_um = detail::parse_number(f[0], line_no, "z_cmd_um");
    r.z_dut_um = detail::parse_number(f[1], line_no, "z_dut_um");
    r.force_uN = detail::parse_number(f[2], line_no, "force_uN");
    if (!f[3].empty()) r.force_std_uN = detail::parse_number(f[3], line_no, "force_std_uN");
    if (!f[4].empty()) {
      r.mode = parse_contact_mode(f[4]);
      if (!r.mode)
        throw ConfigError("trace row " + std::to_string(line_no) + ": unknown mode '" + std::string(f[4]) + "'");
    }
    if (!res.file.rows.empty() && !(r.z_cmd_um > res.file.rows.back().z_cmd_um))
      throw ConfigError("trace row " + std::to_string(line_no) + ": z_cmd_um not strictly increasing");
    res.file.rows.push_back(r);
  }

  // optional columns must be all-or-nothing to make a usable trace
  std::size_t with_std = 0;
  std::size_t with_mode = 0;
  for (const auto& r : res.file.rows) {
    with_std += r.force_std_uN ? 1 : 0;
    with_mode += r.mode ? 1 : 0;
  }
  if (with_std != 0 && with_std != res.file.rows.size())
    res.warnings.push_back("force_std_uN present on only some rows; ignored");
  if (with_mode != 0 && with_mode != res.file.rows.size())
    res.warnings.push_back("mode present on only some rows; ignored");
  return res;
}

/// SI trace for analysis. z is the commanded position.
inline Trace to_trace(const TraceFile& tf, std::string source = "file") {
  Trace t;
  t.source = std::move(source);
  bool all_std = !tf.rows.empty();
  bool all_mode = !tf.rows.empty();
  for (const auto& r : tf.rows) {
    all_std = all_std && r.force_std_uN.has_value();
    all_mode = all_mode && r.mode.has_value();
  }
  std::vector<double> sd;
  std::vector<ContactMode> md;
  for (const auto& r : tf.rows) {
    t.z.push_back(units::um_to_m(r.z_cmd_um));
    t.F.push_back(units::uN_to_N(r.force_uN));
    if (all_std) sd.push_back(units::uN_to_N(*r.force_std_uN));
    if (all_mode) md.push_back(*r.mode);
  }
  if (all_std) t.std = std::move(sd);
  if (all_mode) t.modes = std::move(md);
  return t;
}

inline TraceFile to_trace_file(const SimTrace& sim, nlohmann::json meta) {
  TraceFile tf;
  tf.meta = std::move(meta);
  for (const auto& s : sim.states) {
    TraceRow r;
    r.z_cmd_um = units::m_to_um(s.z_act);
    r.z_dut_um = r.z_cmd_um;
    r.force_uN = units::N_to_uN(s.F_z);
    r.mode = s.mode;
    tf.rows.push_back(r);
  }
  return tf;
}

inline TraceFile to_trace_file(const MeasurementTrace& m, nlohmann::json meta) {
  TraceFile tf;
  tf.meta = std::move(meta);
  for (const auto& rec : m.records) {
    TraceRow r;
    r.z_cmd_um = units::m_to_um(rec.z_cmd);
    r.z_dut_um = units::m_to_um(rec.z_dut);
    r.force_uN = units::N_to_uN(rec.F_readout);
    r.force_std_uN = units::N_to_uN(rec.F_readout_std);
    tf.rows.push_back(r);
  }
  return tf;
}

inline nlohmann::json events_to_json(const SimTrace& sim, const nlohmann::json& meta) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : sim.events) {
    ev.push_back({{"kind", std::string(to_string(e.kind))},
                  {"z_act_um", units::m_to_um(e.z_act)},
                  {"force_uN", units::N_to_uN(e.F_z)}});
  }
  return {{"format", "stylus-events v1"}, {"meta", meta}, {"events", ev}};
}

/// Write via a temporary file in the same directory and rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace probestation::io
