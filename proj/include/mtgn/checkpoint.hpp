#pragma once

#include <string>

#include "mtgn/nn.hpp"

namespace mtgn {

/// Flat binary parameter archive: magic, metadata JSON, then one
/// (name, shape, little-endian float64 payload) record per parameter in store
/// order. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json);

/// Loads parameter values into an already-built store; every archived
/// parameter must exist with an identical shape. Returns the metadata JSON.
std::string load_checkpoint(const std::string& path, ParamStore& store);

/// Reads only the metadata JSON.
std::string read_checkpoint_meta(const std::string& path);

}  // namespace mtgn
