#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "embalign/types.hpp"

namespace embalign {

enum class Dtype : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

inline constexpr std::uint8_t kModelFormatVersion = 1;

/// EMB1 binary (little-endian) or, for a ".csv" path, header-less CSV.
/// 32-bit payloads widen to 64-bit.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& x,
                      Dtype dtype = Dtype::kFloat64);

std::vector<std::uint8_t> encode_embeddings(const EmbeddingMatrix& x, Dtype dtype = Dtype::kFloat64);
EmbeddingMatrix decode_embeddings(std::span<const std::uint8_t> bytes);
EmbeddingMatrix parse_csv(std::string_view text, std::string label = {});

std::vector<std::uint8_t> encode_model(const AlignmentModel& model);
AlignmentModel decode_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const AlignmentModel& model);
AlignmentModel load_model(const std::filesystem::path& path);

}  // namespace embalign
