#pragma once

#include <cstdint>

#include "iasim/alignment.hpp"
#include "iasim/basis_change.hpp"
#include "iasim/channel.hpp"
#include "iasim/detection.hpp"

namespace iasim {

/// Everything built for one Monte Carlo drop.
struct DropOutcome {
  ChannelDraw draw;
  BasisChange cb;
  StructuredChannels sc;
  SupportBlocks spb;
  PrecoderSet prec;
  ZfFilters filt;
  EffectiveFilters eff;
  uint64_t draw_seed = 0;
  int redraws = 0;
};

/// Deterministic per-drop seed: a pure function of (seed, drop, attempt).
uint64_t drop_seed(uint64_t seed, uint64_t drop_index, int attempt);

/// Draw -> CB -> precoders -> filters for one drop. Degenerate draws are
/// redrawn with an incremented sub-seed (bounded) and counted in `redraws`.
DropOutcome run_drop(int p, uint64_t seed, uint64_t drop_index,
                     ExtensionMode mode);

}  // namespace iasim
