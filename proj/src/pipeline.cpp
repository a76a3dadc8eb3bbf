#include "iasim/pipeline.hpp"

#include "iasim/rng.hpp"

namespace iasim {

uint64_t drop_seed(uint64_t seed, uint64_t drop_index, int attempt) {
  return substream(substream(seed, 0x64726f70ull /*"drop"*/ + drop_index),
                   static_cast<uint64_t>(attempt));
}

DropOutcome run_drop(int p, uint64_t seed, uint64_t drop_index,
                     ExtensionMode mode) {
  constexpr int kMaxAttempts = 8;
  StructuredError last("drop_failed", "drop pipeline failed");
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    uint64_t ds = drop_seed(seed, drop_index, attempt);
    try {
      DropOutcome out;
      out.draw_seed = ds;
      out.redraws = attempt;
      out.draw = draw_channels(p, ds);
      out.cb = build_cb(out.draw);
      out.sc = apply_cb(out.draw, out.cb, mode);
      out.spb = default_spb(p, mode, ds);
      out.prec = assemble_precoders(out.sc, out.spb);
      out.filt = zf_filters(out.prec, out.sc);
      out.eff = effective_filters(out.prec, out.filt, out.cb);
      return out;
    } catch (const StructuredError& e) {
      last = e;
      last.with("draw_seed", ds).with("attempt", attempt);
    }
  }
  throw StructuredError("drop_exhausted",
                        "drop failed after repeated degenerate redraws")
      .with("p", p)
      .with("seed", seed)
      .with("drop", drop_index)
      .with("last_error", last.payload());
}

}  // namespace iasim
