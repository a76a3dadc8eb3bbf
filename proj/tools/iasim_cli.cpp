// Command-line front end: sweep simulation, claim verification and the
// structural inspection commands (zp-trace, cb-check, elim-demo).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "iasim/alignment.hpp"
#include "iasim/harness.hpp"
#include "iasim/pipeline.hpp"
#include "iasim/verification.hpp"
#include "iasim/version.hpp"

namespace {

using namespace iasim;

ExtensionMode parse_mode(const std::string& name, int p) {
  if (name == "acs") return ExtensionMode::acs(p);
  if (name == "time-only") return ExtensionMode::time_only(p);
  throw StructuredError("bad_scheme", "scheme must be acs or time-only")
      .with("scheme", name);
}

std::vector<ExtensionMode> parse_schemes(const std::string& list, int p) {
  std::vector<ExtensionMode> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_mode(item, p));
  }
  if (out.empty()) {
    throw StructuredError("bad_scheme", "no schemes given");
  }
  return out;
}

void parse_snr(const std::string& spec, SimConfig& cfg) {
  double lo, hi, step;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3) {
    throw StructuredError("bad_snr", "snr must be start:stop:step")
        .with("snr", spec);
  }
  cfg.snr_start_db = lo;
  cfg.snr_stop_db = hi;
  cfg.snr_step_db = step;
}

std::string support_grid(const BlockSystem& sys) {
  std::string out;
  for (int r = 0; r < sys.block_rows(); ++r) {
    out += "  ";
    for (int c = 0; c < sys.block_cols(); ++c) {
      out += sys.support(r, c) ? 'X' : '.';
    }
    out += '\n';
  }
  return out;
}

int cmd_simulate(const SimConfig& cfg) {
  SimResult result = run_sweep(cfg);
  emit(result, cfg.output_format, cfg.output_path);
  for (const auto& sr : result.schemes) {
    std::printf("%-9s p=%d  slope %.4f bits/octave  per-user DoF %.4f "
                "(window %g-%g dB)\n",
                sr.scheme.c_str(), cfg.p, sr.sum_rate_slope, sr.per_user_dof,
                sr.window_lo_db, sr.window_hi_db);
  }
  std::printf("wrote %s (%s)\n", cfg.output_path.c_str(),
              format_name(cfg.output_format));
  return 0;
}

int cmd_verify(int p, int trials, uint64_t seed, const std::string& mode_name,
               const std::string& out_path) {
  ExtensionMode mode = parse_mode(mode_name, p);
  std::vector<uint64_t> failures;
  auto reports = verify_claims(p, trials, seed, mode, &failures);
  VerifySummary sum = summarize(p, mode, trials, seed, reports, failures);
  nlohmann::json j = sum.to_json();
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(out_path);
    if (!out) {
      throw StructuredError("io_error", "cannot open output file")
          .with("path", out_path);
    }
    out << j.dump(2) << '\n';
  }
  std::printf("p=%d mode=%s trials=%d  full-rank %.0f%%  dof %s  "
              "leakage %.2e  status: %s\n",
              p, mode.name(), trials, 100.0 * sum.full_rank_fraction,
              sum.achieved_dof.str().c_str(), sum.max_leakage,
              p > 6 ? "conjectured" : "proven range");
  return 0;
}

int cmd_zp_trace(int p, int k, uint64_t seed) {
  ChannelDraw draw = draw_channels(p, seed);
  BasisChange cb = build_cb(draw);
  StructuredChannels sc = apply_cb(draw, cb, ExtensionMode::acs(p));
  ChainSpec spec = chain_spec(p, k);
  BlockSystem sys = build_block_system(spec, sc);

  std::printf("chain %d: users", k);
  for (int u : spec.users) std::printf(" %d", u);
  std::printf(", receivers");
  for (int r : spec.receivers) std::printf(" %d", r);
  std::printf("\ninitial support (%d block rows x %d block cols):\n",
              sys.block_rows(), sys.block_cols());
  std::cout << support_grid(sys);

  BlockSystem reduced = zero_propagation(sys);
  BlockSystem replay = sys;
  int step = 1;
  for (auto [row, col] : reduced.zp_steps) {
    std::printf("step %d: singleton at block row %d -> zero block %d "
                "(user %d, antenna row %d)\n",
                step++, row + 1, col + 1, sys.labels[col].user,
                sys.labels[col].antenna_row);
    for (int c = 0; c < replay.block_cols(); ++c) replay.support(row, c) = false;
    for (int r = 0; r < replay.block_rows(); ++r) replay.support(r, col) = false;
    std::cout << support_grid(replay);
  }
  std::printf("zeroed blocks:");
  for (int c = 0; c < reduced.block_cols(); ++c) {
    if (reduced.zeroed[c]) std::printf(" %d", c + 1);
  }
  std::printf("\n");
  return 0;
}

int cmd_cb_check(int p, uint64_t seed) {
  ChannelDraw draw = draw_channels(p, seed);
  BasisChange cb = build_cb(draw);
  StructuredChannels sc = apply_cb(draw, cb, ExtensionMode::acs(p));
  ZeroPattern pat = target_pattern(p);
  for (int j = 1; j <= 3; ++j) {
    int prev = wrap3(j - 1);
    int next = wrap3(j + 1);
    std::printf("receiver %d  [H_%d,%d | H_%d,%d]\n", j, j, prev, j, next);
    const CMat& gl = sc.G(j, prev);
    const CMat& gr = sc.G(j, next);
    double scale = std::max(gl.norm(), gr.norm());
    for (int q = 1; q <= p + 1; ++q) {
      std::printf("  ");
      for (int r = 1; r <= p; ++r) {
        bool nz = std::abs(gl(q - 1, r - 1)) > tol::kClamp * scale;
        std::printf("%c", nz ? 'X' : (pat.allowed_left(q, r) ? 'o' : '.'));
      }
      std::printf(" | ");
      for (int r = 1; r <= p; ++r) {
        bool nz = std::abs(gr(q - 1, r - 1)) > tol::kClamp * scale;
        std::printf("%c", nz ? 'X' : (pat.allowed_right(q, r) ? 'o' : '.'));
      }
      std::printf("\n");
    }
  }
  std::printf("pattern residual %.3e (tolerance %.0e)\n", cb.pattern_residual,
              tol::kClamp);
  return 0;
}

int cmd_elim_demo(uint64_t seed) {
  ChannelDraw draw = draw_channels(2, seed);
  EliminationCheck acs = elimination_p2_acs(draw);
  EliminationCheck noacs = elimination_p2_noacs(draw);
  std::printf("ACS elimination matrix (3x2, |h| sin(phi) entries):\n");
  for (int r = 0; r < 3; ++r) {
    std::printf("  % .6f  % .6f\n", acs.m_r(r, 0), acs.m_r(r, 1));
  }
  std::printf("null dimension: %d\n\n", acs.null_dim);
  std::printf("time-only elimination matrix (3x4, complex):\n");
  for (int r = 0; r < 3; ++r) {
    std::printf(" ");
    for (int c = 0; c < 4; ++c) {
      std::printf(" (% .4f%+.4fi)", noacs.m_c(r, c).real(),
                  noacs.m_c(r, c).imag());
    }
    std::printf("\n");
  }
  std::printf("null dimension: %d\n", noacs.null_dim);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3-user (p,p+1) MIMO interference alignment simulator"};
  app.set_version_flag("--version", iasim::kVersion);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo sum-rate SNR sweep");
  int sim_p = 2;
  std::string sim_schemes = "acs";
  std::string sim_snr = "0:100:5";
  int sim_drops = 50;
  uint64_t sim_seed = 1;
  std::string sim_out = "sweep.csv";
  std::string sim_format = "csv";
  sim->add_option("--p", sim_p, "antenna parameter p (>= 2)");
  sim->add_option("--schemes", sim_schemes, "comma list: acs,time-only");
  sim->add_option("--snr", sim_snr, "grid start:stop:step in dB");
  sim->add_option("--drops", sim_drops, "Monte Carlo drops");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "output path");
  sim->add_option("--format", sim_format, "csv|json");

  // verify
  auto* ver = app.add_subcommand("verify", "DoF/rank claim verification");
  int ver_p = 2;
  int ver_trials = 100;
  uint64_t ver_seed = 1;
  std::string ver_mode = "acs";
  std::string ver_out;
  ver->add_option("--p", ver_p, "antenna parameter p (>= 2)");
  ver->add_option("--trials", ver_trials, "number of draws");
  ver->add_option("--seed", ver_seed, "RNG seed");
  ver->add_option("--mode", ver_mode, "acs|time-only");
  ver->add_option("--out", ver_out, "JSON report path (default: stdout)");

  // zp-trace
  auto* zp = app.add_subcommand("zp-trace", "zero propagation trace");
  int zp_p = 3;
  int zp_chain = 1;
  uint64_t zp_seed = 1;
  zp->add_option("--p", zp_p, "antenna parameter p (>= 2)");
  zp->add_option("--chain", zp_chain, "chain index 1|2|3")
      ->check(CLI::Range(1, 3));
  zp->add_option("--seed", zp_seed, "RNG seed");

  // cb-check
  auto* cbc = app.add_subcommand("cb-check", "achieved zero pattern");
  int cb_p = 3;
  uint64_t cb_seed = 1;
  cbc->add_option("--p", cb_p, "antenna parameter p (>= 2)");
  cbc->add_option("--seed", cb_seed, "RNG seed");

  // elim-demo
  auto* elim = app.add_subcommand("elim-demo", "p=2 elimination matrices");
  uint64_t elim_seed = 1;
  elim->add_option("--seed", elim_seed, "RNG seed");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) {
      SimConfig cfg;
      cfg.p = sim_p;
      cfg.schemes = parse_schemes(sim_schemes, sim_p);
      parse_snr(sim_snr, cfg);
      cfg.drops = sim_drops;
      cfg.seed = sim_seed;
      cfg.output_path = sim_out;
      if (sim_format == "csv") {
        cfg.output_format = SimConfig::Format::kCsv;
      } else if (sim_format == "json") {
        cfg.output_format = SimConfig::Format::kJson;
      } else {
        throw StructuredError("bad_format", "format must be csv or json")
            .with("format", sim_format);
      }
      return cmd_simulate(cfg);
    }
    if (ver->parsed()) {
      return cmd_verify(ver_p, ver_trials, ver_seed, ver_mode, ver_out);
    }
    if (zp->parsed()) return cmd_zp_trace(zp_p, zp_chain, zp_seed);
    if (cbc->parsed()) return cmd_cb_check(cb_p, cb_seed);
    if (elim->parsed()) return cmd_elim_demo(elim_seed);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help / --version
      return app.exit(e);
    }
    nlohmann::json err = {{"error", "cli"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  } catch (const StructuredError& e) {
    std::cerr << e.payload().dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", "unexpected"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
}
