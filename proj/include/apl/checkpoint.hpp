// include/apl/checkpoint.hpp
//
// APLCKPT1 container: magic "APLCKPT1", u64-LE entry count, then per entry
// {u64 name length, name bytes, u64 rank, u64 extents..., row-major f32-LE
// values}. Holds parameters, batchnorm running stats and optimizer moments.

#pragma once

#include <map>
#include <string>

#include "apl/types.hpp"

namespace apl {

void write_checkpoint(const std::string& path, const std::map<std::string, Matf>& entries);
std::map<std::string, Matf> read_checkpoint(const std::string& path);

}  // namespace apl
