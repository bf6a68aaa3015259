// include/apl/matio.hpp
//
// APLMAT1 container: magic "APLMAT1", u64-LE row count, u64-LE column count,
// then row-major f32-LE values.

#pragma once

#include <string>

#include "apl/types.hpp"

namespace apl {

void write_mat(const std::string& path, const Matf& m);
Matf read_mat(const std::string& path);

}  // namespace apl
