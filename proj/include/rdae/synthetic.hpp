#pragma once

#include <cstdint>
#include <filesystem>

#include "rdae/dataset.hpp"
#include "rdae/tensor.hpp"

namespace rdae {

// Procedural stand-in for stained blood-smear cell crops: a soft-edged pink
// cell on a dark background with low-frequency shading; parasitized cells
// carry one to three purple inclusions. Fully determined by (seed, index).
Tensor synthetic_cell(std::uint64_t seed, std::size_t index, CellClass label,
                      std::size_t height, std::size_t width);

// Writes `count` PNGs split evenly into Parasitized/ and Uninfected/ under
// `root`. Sizes vary around 128 unless `fixed_size` is set, so ingestion
// exercises the resize path.
void write_synthetic_dataset(const std::filesystem::path& root, std::size_t count,
                             std::uint64_t seed, bool fixed_size = false);

// In-memory set of 128x128 synthetic cells, alternating classes.
std::vector<Tensor> synthetic_images(std::size_t count, std::uint64_t seed);

}  // namespace rdae
