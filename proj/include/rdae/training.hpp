#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rdae/config.hpp"
#include "rdae/model.hpp"

namespace rdae {

enum class Phase { kM1 = 1, kM2 = 2, kM3 = 3 };

const char* phase_name(Phase p);

struct EpochReport {
  Phase phase = Phase::kM1;
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0;
  double seconds = 0;
};

// One tab-separated log line: phase, epoch, mean loss, seconds.
std::string format_epoch_report(const EpochReport& r);

using EpochCallback = std::function<void(const EpochReport&)>;

// Hyperparameters shared by the three phases.
struct PhaseSettings {
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  AdamConfig adam;
  std::uint64_t seed = 0;
};

PhaseSettings phase_settings(const TrainConfig& cfg, Phase phase);

// Each phase touches only its own parameters; the other stacks are read
// (M2 and M3 use the frozen earlier phases) but never written. Gradients are
// averaged over the batch and the epoch order is a shuffle keyed by
// (seed, phase, epoch). A non-finite batch loss throws Errc::kNumeric naming
// phase, epoch and batch.
std::vector<EpochReport> train_m1(DualModel& model, std::span<const Tensor> images,
                                  const PhaseSettings& settings,
                                  const EpochCallback& on_epoch = {});
std::vector<EpochReport> train_m2(DualModel& model, std::span<const Tensor> images,
                                  const PhaseSettings& settings,
                                  const EpochCallback& on_epoch = {});
std::vector<EpochReport> train_m3(DualModel& model, std::span<const Tensor> images,
                                  const PhaseSettings& settings,
                                  const EpochCallback& on_epoch = {});

// Copies M1's decoder into M3's and sets the fusion conv to pass LS1 through
// unchanged with zero weight on LS2, so M3 starts from M1's reconstruction.
void warm_start_m3(DualModel& model);

// Fresh model from cfg.seed, optional whitening fit on `images`, then the
// three phases in order.
DualModel train_dual(const TrainConfig& cfg, std::span<const Tensor> images,
                     const EpochCallback& on_epoch = {});

}  // namespace rdae
