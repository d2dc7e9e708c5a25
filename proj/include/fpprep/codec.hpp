#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fpprep/transforms.hpp"

// Binary container for preprocessed datasets, so inversion works across
// process boundaries and metadata cost is measured on real bytes.
//
// Layout (all integers little-endian, bit-packed fields MSB-first and padded
// to a byte per field):
//
//   "FPP1" | technique u8 | n u64 | [alignment section] | technique block |
//   values n x f64
//
// The identity technique stores neither an alignment section nor a technique
// block. The alignment section is container plumbing, not technique metadata:
// metadata_size_bytes() counts the technique block alone.
namespace fpprep::codec {

std::vector<std::uint8_t> encode(const tfm::PreprocessedDataset& pd);

tfm::PreprocessedDataset decode(std::span<const std::uint8_t> bytes);

/// Byte length of the technique metadata block only (no header, alignment
/// section or values). For compact bins this equals
/// ceil((k*64 + (k-1)*ceil(log2 l)) / 8).
std::size_t metadata_size_bytes(const tfm::PreprocessedDataset& pd);

/// Byte length of the alignment section (0 for identity).
std::size_t alignment_size_bytes(const tfm::PreprocessedDataset& pd);

}  // namespace fpprep::codec
