#pragma once

#include <string>

#include "trc/index_set.hpp"
#include "trc/tensor.hpp"

namespace trc {

//! Dense tensor file: ASCII header "DTF1 <N> <I_0> ... <I_{N-1}>\n" followed
//! by raw little-endian float64 payload in first-index-fastest order.
void write_dtf(const std::string& path, const DenseTensor& t);
DenseTensor read_dtf(const std::string& path);

//! Mask file: header "MSK1 <N> <I_0> ... <I_{N-1}>\n" followed by one 0/1
//! byte per entry, same ordering.
void write_msk(const std::string& path, const IndexSet& obs);
IndexSet read_msk(const std::string& path);

}  // namespace trc
