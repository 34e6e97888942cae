#pragma once

// Deterministic synthetic test scene: shaded, rotated elliptical blobs over a
// gently sloped background, on the normalized [0, 1] reflectivity scale.
// Stands in for a natural grayscale photograph when none is supplied.

#include "speckle/core.hpp"

namespace speckle {

/// Rendered directly at the requested resolution; the scene is defined in
/// unit coordinates, so different sizes show the same content.
ReflectivityImage synthetic_scene(std::size_t rows, std::size_t cols);

}  // namespace speckle
