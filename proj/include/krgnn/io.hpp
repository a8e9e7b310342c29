#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "krgnn/nn.hpp"
#include "krgnn/synthetic.hpp"
#include "krgnn/train.hpp"
#include "krgnn/types.hpp"

namespace krgnn {

// Shortest decimal form that round-trips the exact double (via to_chars).
// Used for every numeric cell we write, so identical runs produce
// byte-identical files.
std::string format_double(double v);

// sweep CSV: header "parameter,estimate,std,theory_rho,theory_mi"; the
// theory_mi cell is empty when unset.
void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path);

// metrics CSV: header "epoch,split,metric,value".
void write_metrics_csv(const std::vector<MetricRecord>& records, const std::string& path);

// Plain `key = value` config file; '#' starts a comment, blank lines ignored.
// Returned in file order is not guaranteed — lookups go through the map.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Run manifest: everything needed to reproduce a run. `config` holds the
// fully resolved flag set as strings (post-override), `outputs` the files the
// run wrote, relative to its directory.
struct RunManifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::vector<std::string> outputs;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;
  std::string tool_version;
};

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

// Model checkpoint: layer kinds, shapes and row-major coefficients, plus the
// activation, as versioned JSON.
void save_checkpoint(const EncoderState& enc, const std::string& path);
EncoderState load_checkpoint(const std::string& path);

// Creates the directory (and parents) if missing; throws on failure.
void ensure_dir(const std::string& path);

std::string iso_utc_now();

}  // namespace krgnn
