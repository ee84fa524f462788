#pragma once

#include <cstdint>
#include <string>

#include "rdae/adam.hpp"

namespace rdae {

struct TrainConfig {
  std::string dataset_root;
  std::string model_out = "model.rdam";
  std::size_t epochs_m1 = 100;
  std::size_t epochs_m2 = 100;
  std::size_t epochs_m3 = 100;
  std::size_t batch_size = 8;
  AdamConfig adam;
  std::uint64_t seed = 1234;
  bool whitening = false;
  // Start M3 from M1's decoder with a fusion conv that passes LS1 through.
  bool m3_warm_start = true;

  // Throws Errc::kConfig for batch_size or epochs of zero and bad Adam fields.
  void validate() const;
};

// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
// Unknown keys, duplicate keys and malformed values throw Errc::kConfig with
// the line number and key in the message.
TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::string& path);

}  // namespace rdae
