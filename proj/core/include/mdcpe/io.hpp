// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mdcpe/cnn.hpp"
#include "mdcpe/cube.hpp"
#include "mdcpe/preprocess.hpp"
#include "mdcpe/rnn.hpp"

namespace mdcpe {

// Cube file: "HSIC", u16 version 1, u32 H, W, B, then H*W*B f32 values,
// band-fastest, row-major over (H, W). All little-endian; 18-byte header.
// Label file: "HSIL", u16 version 1, u32 H, W, then H*W u16 labels.
// Parsers throw FormatError naming the failing offset.

inline constexpr std::size_t kCubeHeaderBytes = 18;
inline constexpr std::size_t kLabelHeaderBytes = 14;

std::string encode_cube(const HyperCube& cube);
HyperCube decode_cube(const std::string& bytes);
std::string encode_labels(const LabelField& labels);
LabelField decode_labels(const std::string& bytes);

void save_cube(const HyperCube& cube, const std::filesystem::path& path);
HyperCube load_cube(const std::filesystem::path& path);
void save_labels(const LabelField& labels, const std::filesystem::path& path);
LabelField load_labels(const std::filesystem::path& path);

/// Both learners, the PCA front-end and co-training scalars.
struct Checkpoint {
  RnnConfig rnn;
  CnnConfig cnn;
  ParamStore spectral;
  ParamStore spatial;
  PcaModel pca;  ///< empty mean when absent
  std::map<std::string, std::string> scalars;
};

// Checkpoint file: "HSCK", u16 version 1, u32 text length + "key=value"
// lines (learner configs and scalars), u32 tensor count, then per tensor:
// u16 name length, name, u8 rank, u32 dims, u64 value count, f64 values.
std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Models rebuilt from a checkpoint (configs + parameter values).
RnnModel restore_rnn(const Checkpoint& ck);
CnnModel restore_cnn(const Checkpoint& ck);

/// Human-readable header summary of a cube, label or checkpoint file.
std::string inspect_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace mdcpe
