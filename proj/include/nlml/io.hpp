// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "nlml/estimator.hpp"
#include "nlml/hosvd.hpp"
#include "nlml/posegen.hpp"
#include "nlml/sinusoid.hpp"
#include "nlml/tensor.hpp"

namespace nlml {

// Binary container: magic "NLML", format version u32, a payload kind tag,
// then dims and little-endian 64-bit floats. Used for tensors and factor
// sets; everything else is line-oriented text. All writers are byte-stable
// for identical inputs (no timestamps, fixed float formatting).

inline constexpr std::uint32_t kFormatVersion = 1;

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);
void save_factorset(const std::filesystem::path& path, const FactorSet& f);
FactorSet load_factorset(const std::filesystem::path& path);

// Structured-text twins of the binary container, for debugging.
void save_tensor_text(std::ostream& os, const Tensor& t);
Tensor load_tensor_text(std::istream& is);
void save_factorset_text(std::ostream& os, const FactorSet& f);
FactorSet load_factorset_text(std::istream& is);

/// Dataset file: a header line carrying n_landmarks, the grid spec and the
/// seed, then one record per line: id yaw pitch roll f0 f1 ...
struct DatasetFile {
    PoseDataset dataset;
    PoseGrid grid;
    std::uint64_t seed = 0;
};

void save_dataset(const std::filesystem::path& path, const PoseDataset& d, const PoseGrid& grid,
                  std::uint64_t seed);
DatasetFile load_dataset(const std::filesystem::path& path);

void save_params(const std::filesystem::path& path, const SinusoidalParams& p);
SinusoidalParams load_params(const std::filesystem::path& path);

void save_bundle(const std::filesystem::path& path, const ModelBundle& b);
ModelBundle load_bundle(const std::filesystem::path& path);

/// Round-trip-exact decimal rendering of a double.
std::string format_double(double v);

}  // namespace nlml
