#include "iasim/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "iasim/detection.hpp"
#include "iasim/pipeline.hpp"
#include "iasim/version.hpp"

namespace iasim {

std::vector<double> SimConfig::grid() const {
  std::vector<double> g;
  for (double s = snr_start_db; s <= snr_stop_db + 1e-9; s += snr_step_db) {
    g.push_back(s);
  }
  return g;
}

namespace {

void validate(const SimConfig& cfg) {
  if (cfg.p < 2) {
    throw StructuredError("bad_config", "p must be >= 2").with("p", cfg.p);
  }
  if (cfg.drops < 1) {
    throw StructuredError("bad_config", "drops must be >= 1")
        .with("drops", cfg.drops);
  }
  if (cfg.snr_step_db <= 0.0) {
    throw StructuredError("bad_config", "snr step must be positive")
        .with("step", cfg.snr_step_db);
  }
  if (cfg.snr_start_db > cfg.snr_stop_db) {
    throw StructuredError("bad_config", "snr start must not exceed stop");
  }
}

double log2_linear_snr(double snr_db) {
  return snr_db * std::log2(10.0) / 10.0;
}

struct DropRates {
  // rates[point][user]
  std::vector<std::array<double, 3>> rates;
  int redraws = 0;
};

DropRates evaluate_drop(int p, uint64_t seed, uint64_t drop, ExtensionMode mode,
                        const std::vector<double>& grid) {
  DropOutcome out = run_drop(p, seed, drop, mode);
  RateModel model = rate_model(out.eff, out.draw);
  DropRates dr;
  dr.redraws = out.redraws;
  dr.rates.reserve(grid.size());
  for (double snr : grid) {
    dr.rates.push_back({model.rate(1, snr), model.rate(2, snr),
                        model.rate(3, snr)});
  }
  return dr;
}

/// Runs fn(drop) for drop in [0, n) on the requested number of threads.
/// Results land in a pre-sized vector indexed by drop, so the merge order is
/// independent of scheduling.
template <class Fn>
void parallel_drops(int n, int threads, Fn&& fn) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
  }
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int d = 0; d < n; ++d) fn(d);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        int d = next.fetch_add(1);
        if (d >= n) return;
        try {
          fn(d);
        } catch (...) {
          errors[d] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int d = 0; d < n; ++d) {
    if (errors[d]) std::rethrow_exception(errors[d]);
  }
}

}  // namespace

SimResult run_sweep(const SimConfig& cfg, int threads) {
  validate(cfg);
  SimConfig config = cfg;
  if (config.schemes.empty()) {
    config.schemes.push_back(ExtensionMode::acs(config.p));
  }
  const std::vector<double> grid = config.grid();

  SimResult result;
  result.config = config;

  for (const ExtensionMode& mode : config.schemes) {
    std::vector<DropRates> per_drop(config.drops);
    parallel_drops(config.drops, threads, [&](int d) {
      per_drop[d] = evaluate_drop(config.p, config.seed, d, mode, grid);
    });

    int redraws = 0;
    for (const auto& dr : per_drop) redraws += dr.redraws;
    result.degenerate_redraws += redraws;
    if (redraws > 0 && static_cast<double>(redraws) / config.drops > 0.01) {
      throw StructuredError("too_many_degenerate",
                            "more than 1% of draws were degenerate")
          .with("redraws", redraws)
          .with("drops", config.drops)
          .with("scheme", mode.name());
    }

    SchemeResult sr;
    sr.scheme = mode.name();
    for (size_t g = 0; g < grid.size(); ++g) {
      SweepPoint pt;
      pt.snr_db = grid[g];
      double sum = 0.0;
      double sumsq = 0.0;
      for (int d = 0; d < config.drops; ++d) {
        const auto& r = per_drop[d].rates[g];
        double s = r[0] + r[1] + r[2];
        sum += s;
        sumsq += s * s;
        for (int u = 0; u < 3; ++u) pt.rate_user[u] += r[u];
      }
      pt.sum_rate_mean = sum / config.drops;
      for (int u = 0; u < 3; ++u) pt.rate_user[u] /= config.drops;
      if (config.drops > 1) {
        double var = (sumsq - sum * sum / config.drops) / (config.drops - 1);
        pt.sum_rate_std = std::sqrt(std::max(0.0, var));
      }
      sr.points.push_back(pt);
    }

    // Default slope window, clipped to the grid; falls back to the two
    // highest points when the window misses the grid.
    double lo = std::max(config.window_lo_db, config.snr_start_db);
    double hi = std::min(config.window_hi_db, config.snr_stop_db);
    int inside = 0;
    for (double s : grid) {
      if (s >= lo - 1e-9 && s <= hi + 1e-9) ++inside;
    }
    if (inside < 2 && grid.size() >= 2) {
      lo = grid[grid.size() - 2];
      hi = grid.back();
    }
    sr.window_lo_db = lo;
    sr.window_hi_db = hi;
    sr.sum_rate_slope = dof_slope(sr, lo, hi);
    sr.per_user_dof = sr.sum_rate_slope / 3.0;
    result.schemes.push_back(std::move(sr));
  }
  return result;
}

double dof_slope(const SchemeResult& result, double window_lo_db,
                 double window_hi_db) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& pt : result.points) {
    if (pt.snr_db >= window_lo_db - 1e-9 && pt.snr_db <= window_hi_db + 1e-9) {
      x.push_back(log2_linear_snr(pt.snr_db));
      y.push_back(pt.sum_rate_mean);
    }
  }
  if (x.size() < 2) {
    throw StructuredError("empty_window",
                          "slope window must contain at least two grid points")
        .with("lo_db", window_lo_db)
        .with("hi_db", window_hi_db);
  }
  double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double dof_slope(const SimResult& result, const std::string& scheme,
                 double window_lo_db, double window_hi_db) {
  for (const auto& sr : result.schemes) {
    if (sr.scheme == scheme) return dof_slope(sr, window_lo_db, window_hi_db);
  }
  throw StructuredError("unknown_scheme", "scheme not present in result")
      .with("scheme", scheme);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

std::string result_to_csv(const SimResult& result) {
  std::string out =
      "scheme,p,snr_db,drops,sum_rate_mean_bpcu,sum_rate_std,"
      "rate_u1,rate_u2,rate_u3\n";
  for (const auto& sr : result.schemes) {
    for (const auto& pt : sr.points) {
      out += sr.scheme;
      out += ',' + std::to_string(result.config.p);
      out += ',' + fmt(pt.snr_db);
      out += ',' + std::to_string(result.config.drops);
      out += ',' + fmt(pt.sum_rate_mean);
      out += ',' + fmt(pt.sum_rate_std);
      out += ',' + fmt(pt.rate_user[0]);
      out += ',' + fmt(pt.rate_user[1]);
      out += ',' + fmt(pt.rate_user[2]);
      out += '\n';
    }
  }
  return out;
}

const char* format_name(SimConfig::Format format) {
  return format == SimConfig::Format::kCsv ? "csv" : "json";
}

nlohmann::json result_to_json(const SimResult& result) {
  nlohmann::json j;
  std::vector<std::string> schemes;
  for (const auto& sr : result.schemes) schemes.push_back(sr.scheme);
  j["config"] = {{"p", result.config.p},
                 {"schemes", schemes},
                 {"snr_start_db", result.config.snr_start_db},
                 {"snr_stop_db", result.config.snr_stop_db},
                 {"snr_step_db", result.config.snr_step_db},
                 {"drops", result.config.drops},
                 {"seed", result.config.seed},
                 {"output_format", format_name(result.config.output_format)}};
  j["library_version"] = kVersion;
  j["degenerate_redraws"] = result.degenerate_redraws;
  j["schemes"] = nlohmann::json::array();
  for (const auto& sr : result.schemes) {
    nlohmann::json js;
    js["scheme"] = sr.scheme;
    js["window_lo_db"] = sr.window_lo_db;
    js["window_hi_db"] = sr.window_hi_db;
    js["sum_rate_slope"] = sr.sum_rate_slope;
    js["per_user_dof"] = sr.per_user_dof;
    js["points"] = nlohmann::json::array();
    for (const auto& pt : sr.points) {
      js["points"].push_back({{"snr_db", pt.snr_db},
                              {"sum_rate_mean_bpcu", pt.sum_rate_mean},
                              {"sum_rate_std", pt.sum_rate_std},
                              {"rate_u1", pt.rate_user[0]},
                              {"rate_u2", pt.rate_user[1]},
                              {"rate_u3", pt.rate_user[2]}});
    }
    j["schemes"].push_back(std::move(js));
  }
  return j;
}

SimResult result_from_json(const nlohmann::json& j) {
  SimResult result;
  const auto& c = j.at("config");
  result.config.p = c.at("p").get<int>();
  result.config.snr_start_db = c.at("snr_start_db").get<double>();
  result.config.snr_stop_db = c.at("snr_stop_db").get<double>();
  result.config.snr_step_db = c.at("snr_step_db").get<double>();
  result.config.drops = c.at("drops").get<int>();
  result.config.seed = c.at("seed").get<uint64_t>();
  for (const auto& name : c.at("schemes")) {
    result.config.schemes.push_back(
        name.get<std::string>() == "acs"
            ? ExtensionMode::acs(result.config.p)
            : ExtensionMode::time_only(result.config.p));
  }
  result.degenerate_redraws = j.value("degenerate_redraws", 0);
  for (const auto& js : j.at("schemes")) {
    SchemeResult sr;
    sr.scheme = js.at("scheme").get<std::string>();
    sr.window_lo_db = js.at("window_lo_db").get<double>();
    sr.window_hi_db = js.at("window_hi_db").get<double>();
    sr.sum_rate_slope = js.at("sum_rate_slope").get<double>();
    sr.per_user_dof = js.at("per_user_dof").get<double>();
    for (const auto& jp : js.at("points")) {
      SweepPoint pt;
      pt.snr_db = jp.at("snr_db").get<double>();
      pt.sum_rate_mean = jp.at("sum_rate_mean_bpcu").get<double>();
      pt.sum_rate_std = jp.at("sum_rate_std").get<double>();
      pt.rate_user = {jp.at("rate_u1").get<double>(),
                      jp.at("rate_u2").get<double>(),
                      jp.at("rate_u3").get<double>()};
      sr.points.push_back(pt);
    }
    result.schemes.push_back(std::move(sr));
  }
  return result;
}

void emit(const SimResult& result, SimConfig::Format format,
          const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw StructuredError("io_error", "cannot open output file for writing")
        .with("path", path);
  }
  if (format == SimConfig::Format::kCsv) {
    out << result_to_csv(result);
  } else {
    out << result_to_json(result).dump(2) << '\n';
  }
  if (!out.good()) {
    throw StructuredError("io_error", "write failed").with("path", path);
  }
}

}  // namespace iasim
