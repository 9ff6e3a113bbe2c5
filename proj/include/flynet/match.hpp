#pragma once

#include <cstddef>
#include <limits>
#include <optional>

namespace flynet {

/// Outcome of matching one query frame: the chosen reference place (absent
/// when the filter abstains) and a confidence where higher is better.
struct PlaceMatch {
  std::optional<std::size_t> ref;
  double score = -std::numeric_limits<double>::infinity();

  static PlaceMatch unmatchable() { return {}; }

  bool operator==(const PlaceMatch&) const = default;
};

}  // namespace flynet
