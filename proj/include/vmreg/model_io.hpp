#pragma once

#include <string>

#include "vmreg/train.hpp"

namespace vmreg {

/// JSON model file with hexadecimal float encoding (bit-exact round trip)
/// and an FNV-1a checksum over the canonical payload. Writes are atomic.
void save_model(const TrainedModel& m, const std::string& path);

/// Throws CorruptFile on parse/checksum failures, UnsupportedVersion when the
/// format_version is not recognized.
TrainedModel load_model(const std::string& path);

/// Three-angle bundle (azimuth, elevation, tilt models) in one file.
void save_multi_model(const std::array<TrainedModel, 3>& models, const std::string& path);
std::array<TrainedModel, 3> load_multi_model(const std::string& path);

/// True when the file holds a three-angle bundle.
bool model_file_is_multi(const std::string& path);

}  // namespace vmreg
