#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "odeen/rule_lang.hpp"
#include "odeen/semmatrix.hpp"

namespace odeen {

inline constexpr const char* kToolVersion = "1.0.0";

/// The rule catalog, its semantic matrix and the equivalence partition, built or loaded together.
struct Environment {
  RuleCatalog catalog;
  SemanticMatrix matrix;
  EquivalencePartition partition;

  const WorldConfig& config() const { return catalog.config(); }

  static Environment build(const WorldConfig& cfg = {}, unsigned threads = 1) {
    Environment env{RuleCatalog(cfg), {}, {}};
    env.matrix = build_matrix(env.catalog, threads);
    env.partition = equivalence_classes(env.matrix);
    return env;
  }

  /// Loads a matrix file; its shape must match the catalog enumerated for `cfg`.
  static Environment load(const std::filesystem::path& matrix_path, const WorldConfig& cfg = {}) {
    Environment env{RuleCatalog(cfg), SemanticMatrix::load(matrix_path), {}};
    if (env.matrix.n_rules() != env.catalog.size() || env.matrix.n_structures() != cfg.universe_size())
      throw std::runtime_error("matrix " + matrix_path.string() + " has shape " + std::to_string(env.matrix.n_rules()) +
                               "x" + std::to_string(env.matrix.n_structures()) + ", expected " +
                               std::to_string(env.catalog.size()) + "x" + std::to_string(cfg.universe_size()));
    env.partition = equivalence_classes(env.matrix);
    return env;
  }
};

}  // namespace odeen
