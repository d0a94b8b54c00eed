// Streaming application of the fitted network: delayed-sum early
// reflections plus the feedback loops, with exact FLOP accounting and
// tear-free parameter swaps from a non-audio thread.
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "fdnreverb/types.hpp"

namespace fdnreverb {

enum class LayoutChangePolicy {
  reset_loop_state,  // adopt new delays, zeroing the loop accumulators
  reject,            // refuse updates that change the delay layout
};

/// One audio stream's state. process_sample/process_block run on a single
/// audio thread; update_params may be called concurrently from one other
/// thread. Updates become visible at a sample boundary as a whole
/// snapshot: no sample is ever computed from a mix of old and new values.
class NetworkState {
 public:
  /// Capacity defaults cover any delay the initial parameters use plus
  /// the 50 ms early window at the given sample rate. Updates must stay
  /// within capacity (the audio path never reallocates).
  explicit NetworkState(const NetworkParams& params, int max_delay = -1,
                        int max_loops = -1);
  ~NetworkState();

  NetworkState(const NetworkState&) = delete;
  NetworkState& operator=(const NetworkState&) = delete;

  double process_sample(double x);

  /// Bit-identical to calling process_sample per element.
  void process_block(std::span<const double> input, std::span<double> output);
  std::vector<double> process_block(std::span<const double> input);

  /// Publishes a new parameter snapshot; it takes effect at the next
  /// sample boundary. Callable from one non-audio thread; never blocks
  /// the audio path. Gain/alpha changes are glitch-free; a delay-layout
  /// change resets the loop accumulators (or throws, per policy).
  void update_params(const NetworkParams& params,
                     LayoutChangePolicy policy =
                         LayoutChangePolicy::reset_loop_state);

  /// Clears all delay history and loop accumulators.
  void reset();

  std::uint64_t flop_count() const { return flop_count_; }

 private:
  struct Snapshot;

  const Snapshot* adopt();
  void prune_retired();

  // Audio-thread state.
  std::vector<double> ring_;  // shared input history, power-of-two sized
  std::size_t ring_mask_ = 0;
  std::size_t write_pos_ = 0;
  std::vector<double> loop_states_;
  std::uint64_t flop_count_ = 0;
  std::uint64_t adopted_version_ = 0;
  std::uint64_t adopted_layout_ = 0;
  long long per_sample_flops_ = 0;

  // Shared swap machinery.
  std::atomic<const Snapshot*> active_{nullptr};
  std::atomic<std::uint64_t> seen_version_{0};

  // Updater-thread state (audio never touches these).
  std::mutex update_mutex_;
  std::uint64_t version_counter_ = 0;
  std::uint64_t layout_counter_ = 0;
  std::vector<std::unique_ptr<const Snapshot>> retired_;
  int max_delay_capacity_ = 0;
  int max_loop_capacity_ = 0;
};

/// Response of a fresh network to a unit impulse.
SampledRir impulse_response(const NetworkParams& params, std::int64_t length);

}  // namespace fdnreverb
