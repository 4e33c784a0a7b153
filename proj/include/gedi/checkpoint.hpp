#pragma once

#include <optional>
#include <string>

#include "gedi/ebm.hpp"
#include "gedi/nets.hpp"
#include "gedi/optim.hpp"

// Versioned binary checkpoint container. Sections are optional and
// independent; doubles are stored verbatim (little-endian IEEE-754), so a
// save/load round trip is bit-exact.
//
// Layout (all integers little-endian):
//   magic  "GEDICKP1"                                   8 bytes
//   u32    section count
//   per section: u32 tag, u64 payload byte length, payload
// Tags: 1 = model params, 2 = swav params, 3 = replay buffer, 4 = adam state.
// An MLP payload is: u32 layers, u32 activation, f64 leaky_slope,
// u8 standardize_layers, then per layer u32 in, u32 out, f64 weights
// (row-major), f64 bias.
namespace gedi {

struct ReplayBufferState {
  Eigen::MatrixXd entries;
  std::string rng_state;
};

struct Checkpoint {
  std::optional<ModelParams> model;
  std::optional<SwavParams> swav;
  std::optional<ReplayBufferState> buffer;
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gedi
