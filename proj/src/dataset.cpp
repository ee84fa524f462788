#include "rdae/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "rdae/image_io.hpp"
#include "rdae/log.hpp"
#include "rdae/model.hpp"
#include "rdae/rng.hpp"

namespace rdae {
namespace {

constexpr std::uint64_t kSplitTag = 0x5b117;

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

CellClass label_for(const std::filesystem::path& relative) {
  for (const auto& part : relative.parent_path()) {
    const std::string name = lower(part.string());
    if (name.rfind("parasit", 0) == 0) return CellClass::kParasitized;
    if (name.rfind("uninfect", 0) == 0) return CellClass::kUninfected;
  }
  return CellClass::kUnlabeled;
}

}  // namespace

const char* class_name(CellClass c) {
  switch (c) {
    case CellClass::kParasitized: return "parasitized";
    case CellClass::kUninfected: return "uninfected";
    case CellClass::kUnlabeled: return "unlabeled";
  }
  return "?";
}

std::vector<DatasetItem> DatasetIndex::split(Split which) const {
  std::vector<DatasetItem> out;
  for (const auto& item : items)
    if (item.split == which) out.push_back(item);
  return out;
}

std::size_t DatasetIndex::count(Split which) const {
  return static_cast<std::size_t>(std::count_if(
      items.begin(), items.end(), [&](const DatasetItem& i) { return i.split == which; }));
}

std::size_t train_count(std::size_t n) {
  const std::uint64_t total = kTrainWeight + kTestWeight;
  const std::uint64_t train_num = n * kTrainWeight;
  const std::uint64_t test_num = n * kTestWeight;
  std::size_t train = train_num / total;
  const std::size_t test = test_num / total;
  if (train + test < n) {
    // One seat left over; it goes to the larger remainder, train on a tie.
    if (train_num % total >= test_num % total) ++train;
  }
  return train;
}

DatasetIndex ingest_dataset(const std::filesystem::path& root, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(Errc::kIo, "dataset root '" + root.string() + "' is not a directory");
  }
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (it->is_regular_file()) files.push_back(it->path());
  }
  if (ec) throw Error(Errc::kIo, "cannot scan '" + root.string() + "': " + ec.message());
  std::sort(files.begin(), files.end());

  DatasetIndex index;
  index.seed = seed;
  for (const auto& file : files) {
    try {
      read_image(file.string());
    } catch (const Error& e) {
      log_warning("skipping '" + file.string() + "': " + e.what());
      index.skipped.push_back({file, e.what()});
      continue;
    }
    index.items.push_back({file, label_for(fs::relative(file, root)), Split::kTest});
  }
  if (index.items.empty()) {
    throw Error(Errc::kEmpty, "no decodable images under '" + root.string() + "'");
  }

  std::vector<std::size_t> order(index.items.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(CounterRng::derive(seed, kSplitTag));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const std::size_t n_train = train_count(order.size());
  for (std::size_t i = 0; i < n_train; ++i) index.items[order[i]].split = Split::kTrain;
  return index;
}

std::vector<Tensor> load_images(const std::vector<DatasetItem>& items) {
  std::vector<Tensor> out;
  out.reserve(items.size());
  std::size_t resized = 0;
  std::size_t lossy = 0;
  for (const auto& item : items) {
    LoadedImage img = read_image(item.path.string());
    lossy += img.lossy() ? 1 : 0;
    if (img.pixels.shape() != image_shape()) {
      ++resized;
      out.push_back(resize_bilinear(img.pixels, kImageSize, kImageSize));
    } else {
      out.push_back(std::move(img.pixels));
    }
  }
  if (lossy > 0) {
    log_warning(std::to_string(lossy) + " of " + std::to_string(items.size()) +
                " images are lossy-compressed (JPEG); metrics include their coding artefacts");
  }
  if (resized > 0) {
    log_warning(std::to_string(resized) + " of " + std::to_string(items.size()) +
                " images resized to 128x128");
  }
  return out;
}

}  // namespace rdae
