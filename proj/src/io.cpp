#include "krgnn/io.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "krgnn/errors.hpp"
#include "krgnn/version.hpp"

namespace krgnn {

namespace {

using nlohmann::json;

// Checkpoint / manifest schema version, bumped on layout changes.
constexpr int kFileFormatVersion = 1;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, std::string("invalid JSON: ") + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path, 0, "cannot open file for writing");
  out << text;
  if (!out) throw ParseError(path, 0, "write failed");
}

json mat_to_json(const Mat& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j2 = 0; j2 < m.cols(); ++j2) data.push_back(m(i, j2));
  j["data"] = std::move(data);
  return j;
}

Mat mat_from_json(const json& j, const std::string& path) {
  if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    throw ParseError(path, 0, "matrix entry missing rows/cols/data");
  const auto rows = j["rows"].get<Eigen::Index>();
  const auto cols = j["cols"].get<Eigen::Index>();
  const auto data = j["data"].get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ParseError(path, 0, "matrix shape does not match payload length");
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++];
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
  std::ostringstream out;
  out << "parameter,estimate,std,theory_rho,theory_mi\n";
  for (const SweepPoint& pt : points) {
    out << pt.parameter << "," << format_double(pt.estimate) << ","
        << format_double(pt.std_error) << "," << format_double(pt.theory_rho) << ",";
    if (pt.theory_mi) out << format_double(*pt.theory_mi);
    out << "\n";
  }
  write_text(path, out.str());
}

void write_metrics_csv(const std::vector<MetricRecord>& records, const std::string& path) {
  std::ostringstream out;
  out << "epoch,split,metric,value\n";
  for (const MetricRecord& r : records)
    out << r.epoch << "," << r.split << "," << r.metric << ","
        << format_double(r.value) << "\n";
  write_text(path, out.str());
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::map<std::string, std::string> kv;
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string s = raw;
    if (auto pos = s.find('#'); pos != std::string::npos) s.erase(pos);
    const auto trim = [](std::string t) {
      const auto a = t.find_first_not_of(" \t\r\n");
      if (a == std::string::npos) return std::string();
      const auto b = t.find_last_not_of(" \t\r\n");
      return t.substr(a, b - a + 1);
    };
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ParseError(path, line_no, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(path, line_no, "empty key");
    if (value.empty()) throw ParseError(path, line_no, "empty value for key '" + key + "'");
    if (kv.count(key)) throw ParseError(path, line_no, "duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  json j;
  j["format_version"] = kFileFormatVersion;
  j["subcommand"] = m.subcommand;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["outputs"] = m.outputs;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["tool_version"] = m.tool_version.empty() ? kVersion : m.tool_version;
  write_text(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  const json j = parse_json(path);
  try {
    RunManifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw ParseError(path, 0, std::string("manifest field error: ") + e.what());
  }
}

void save_checkpoint(const EncoderState& enc, const std::string& path) {
  json j;
  j["format_version"] = kFileFormatVersion;
  j["activation"] = to_string(enc.activation);
  json layers = json::array();
  for (const LayerParams& layer : enc.layers) {
    json jl;
    jl["kind"] = to_string(layer.kind);
    jl["weight"] = mat_to_json(layer.weight);
    jl["bias"] = mat_to_json(layer.bias);
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);
  write_text(path, j.dump() + "\n");
}

EncoderState load_checkpoint(const std::string& path) {
  const json j = parse_json(path);
  try {
    if (j.at("format_version").get<int>() != kFileFormatVersion)
      throw ParseError(path, 0, "unsupported checkpoint format version");
    EncoderState enc;
    enc.activation = parse_activation(j.at("activation").get<std::string>());
    for (const json& jl : j.at("layers")) {
      LayerParams layer;
      const std::string kind = jl.at("kind").get<std::string>();
      if (kind == "gcn")
        layer.kind = LayerKind::kGcn;
      else if (kind == "sage")
        layer.kind = LayerKind::kSage;
      else if (kind == "dense")
        layer.kind = LayerKind::kDense;
      else
        throw ParseError(path, 0, "unknown layer kind '" + kind + "'");
      layer.weight = mat_from_json(jl.at("weight"), path);
      layer.bias = mat_from_json(jl.at("bias"), path);
      if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols())
        throw ParseError(path, 0, "bias shape does not match weight");
      enc.layers.push_back(std::move(layer));
    }
    return enc;
  } catch (const json::exception& e) {
    throw ParseError(path, 0, std::string("checkpoint field error: ") + e.what());
  }
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw InvalidArgument("cannot create directory '" + path + "': " + ec.message());
}

std::string iso_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace krgnn
