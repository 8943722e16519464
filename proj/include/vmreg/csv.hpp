#pragma once

#include <string>

#include "vmreg/synthetic.hpp"

namespace vmreg {

/// Header `f0..f{d-1},phi` (radians) or `f0..f{d-1},az,el,tilt`; UTF-8,
/// '.' decimal, 17 significant digits (lossless for doubles). Writes are
/// atomic (temp file + rename).
void write_dataset_csv(const Dataset& d, const std::string& path);

Dataset read_dataset_csv(const std::string& path);

}  // namespace vmreg
