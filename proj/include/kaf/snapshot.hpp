#pragma once

#include <string>

#include "kaf/filters.hpp"

namespace kaf {

inline constexpr int kSnapshotFormatVersion = 1;

/// A persisted filter: full expansion plus the hyperparameters and the
/// observation model tag needed to resume or probe it.
struct ModelSnapshot {
  FilterState state;
  Likelihood likelihood = Likelihood::Gaussian;
};

/// Versioned JSON, floating point at full round-trip precision. Loading
/// reproduces predictions exactly.
std::string snapshot_to_json(const FilterState& state, Likelihood likelihood);
ModelSnapshot snapshot_from_json(const std::string& text);

void save_snapshot(const FilterState& state, Likelihood likelihood, const std::string& path);
ModelSnapshot load_snapshot(const std::string& path);

std::string to_string(Likelihood tag);
Likelihood likelihood_from_string(const std::string& name);

}  // namespace kaf
