#pragma once

#include <cstdint>
#include <string>

#include "spinboson/ansatz.hpp"

namespace spinboson {

/// Versioned binary dump of (M, N_total, A, B, f) plus the fingerprint of the
/// model it was converged against. Round-trips bit-exactly.
struct Checkpoint {
    VariationalState state;
    std::uint64_t model_fingerprint = 0;
};

void save_checkpoint(const std::string& path, const VariationalState& state,
                     std::uint64_t model_fingerprint);

Checkpoint load_checkpoint(const std::string& path);

/// Loads and verifies the fingerprint against `params`; throws on mismatch.
VariationalState load_checkpoint_for(const std::string& path, const ModelParams& params);

}  // namespace spinboson
