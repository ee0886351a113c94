#pragma once

// Matrix persistence. Two formats, chosen by file extension:
//   .csv        plain text, one row per line, comma separated, full precision
//   anything else  binary: magic "MIDL", u32 version (=1), u64 rows, u64 cols,
//                  then rows*cols little-endian float64 values in row-major order
//
// Binary round-trips are bit exact. CSV round-trips are value exact for finite
// doubles (written with max_digits10).

#include <string>

#include "midlab/matrix.hpp"

namespace midl {

void save_matrix(const Matrix& m, const std::string& path);
Matrix load_matrix(const std::string& path);

} // namespace midl
