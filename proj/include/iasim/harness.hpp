#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iasim/types.hpp"

namespace iasim {

/// Monte Carlo sweep configuration.
struct SimConfig {
  enum class Format { kCsv, kJson };

  int p = 2;
  std::vector<ExtensionMode> schemes;  // defaults to ACS when empty
  double snr_start_db = 0.0;
  double snr_stop_db = 100.0;
  double snr_step_db = 5.0;
  int drops = 50;
  uint64_t seed = 1;
  std::string output_path;
  Format output_format = Format::kCsv;
  // High-SNR window used for the default slope fit.
  double window_lo_db = 80.0;
  double window_hi_db = 100.0;

  std::vector<double> grid() const;
};

struct SweepPoint {
  double snr_db = 0.0;
  double sum_rate_mean = 0.0;
  double sum_rate_std = 0.0;
  std::array<double, 3> rate_user{};  // per-user means
};

struct SchemeResult {
  std::string scheme;  // "acs" | "time-only"
  std::vector<SweepPoint> points;
  double window_lo_db = 0.0;
  double window_hi_db = 0.0;
  double sum_rate_slope = 0.0;   // bits per doubling of linear SNR
  double per_user_dof = 0.0;     // slope / 3
};

struct SimResult {
  SimConfig config;
  std::vector<SchemeResult> schemes;
  int degenerate_redraws = 0;
};

/// Runs the sweep: per drop, channels, CB, precoders and filters are built
/// once and rates evaluated on the whole grid (filters are SNR independent).
/// Drops are independent tasks; statistics are merged in drop order so
/// parallel and serial runs produce identical output. threads = 0 picks the
/// hardware concurrency.
SimResult run_sweep(const SimConfig& cfg, int threads = 0);

/// Least-squares slope of mean sum rate versus log2(linear SNR) over the
/// window [lo_db, hi_db]. Rejects windows holding fewer than two points.
double dof_slope(const SchemeResult& result, double window_lo_db,
                 double window_hi_db);
double dof_slope(const SimResult& result, const std::string& scheme,
                 double window_lo_db, double window_hi_db);

/// Serialization. CSV columns:
/// scheme,p,snr_db,drops,sum_rate_mean_bpcu,sum_rate_std,rate_u1,rate_u2,rate_u3
void emit(const SimResult& result, SimConfig::Format format,
          const std::string& path);
nlohmann::json result_to_json(const SimResult& result);
SimResult result_from_json(const nlohmann::json& j);
std::string result_to_csv(const SimResult& result);

const char* format_name(SimConfig::Format format);

}  // namespace iasim
