#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rdae/tensor.hpp"

namespace rdae {

enum class CellClass { kParasitized, kUninfected, kUnlabeled };
enum class Split { kTrain, kTest };

const char* class_name(CellClass c);

struct DatasetItem {
  std::filesystem::path path;
  CellClass label = CellClass::kUnlabeled;
  Split split = Split::kTrain;
};

struct SkippedFile {
  std::filesystem::path path;
  std::string reason;
};

struct DatasetIndex {
  std::vector<DatasetItem> items;  // sorted by path
  std::vector<SkippedFile> skipped;
  std::uint64_t seed = 0;

  std::vector<DatasetItem> split(Split which) const;
  std::size_t count(Split which) const;
};

// Train share of the split; the test share is the complement.
inline constexpr std::uint64_t kTrainWeight = 22222;
inline constexpr std::uint64_t kTestWeight = 5334;

// Largest-remainder apportionment of n items at kTrainWeight:kTestWeight.
// Returns the train count (100 -> 81).
std::size_t train_count(std::size_t n);

// Scans `root` for images. Subdirectories whose names start with "parasit"
// or "uninfect" (any case) give the class label; images anywhere else under
// the root are kept unlabeled. Files that do not decode are skipped with a
// warning and listed in `skipped`. The split is a function of the sorted
// path list and the seed only.
// Throws Errc::kIo for a missing root and Errc::kEmpty when no image decodes.
DatasetIndex ingest_dataset(const std::filesystem::path& root, std::uint64_t seed);

// Decodes every item to a 128x128x3 tensor (bilinear resize when needed).
std::vector<Tensor> load_images(const std::vector<DatasetItem>& items);

}  // namespace rdae
