#pragma once

#include <filesystem>
#include <optional>
#include <cstddef>

#include "bimatch/embeddings.hpp"
#include "bimatch/model.hpp"

namespace bimatch {

inline constexpr int kModelFormatVersion = 1;

struct SavedModel {
  ModelParams params;
  NormalizationScheme normalization = NormalizationScheme::unit;
  // Vocabulary cap used at training time, reused by default when the model
  // is applied so centering sees the same words.
  std::optional<std::size_t> vocab_size;
};

// JSON container: format tag, version, dim, omega (row-major), mu,
// normalization. Doubles are written in shortest round-trip form, so a
// reload is bit-exact.
void save_model(const std::filesystem::path& path, const SavedModel& model);

// Re-checks shape and orthogonality; throws Error on any violation.
SavedModel load_model(const std::filesystem::path& path);

}  // namespace bimatch
