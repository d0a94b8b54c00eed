#include "fdnreverb/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdnreverb/cost_model.hpp"
#include "fdnreverb/errors.hpp"

namespace fdnreverb {

// Immutable parameter snapshot. The audio thread only ever reads through a
// pointer obtained from active_, so a swap can never tear; old snapshots
// are retired by the updater and freed once the audio thread has been seen
// on a newer version.
struct NetworkState::Snapshot {
  double alpha = 0.0;
  std::vector<double> betas;
  std::vector<int> kappas;
  std::vector<Tap> taps;
  int sample_rate_hz = 0;
  std::uint64_t version = 0;
  std::uint64_t layout = 0;

  bool same_layout(const NetworkParams& p) const {
    if (kappas != p.fdn.kappas) return false;
    if (taps.size() != p.early.taps.size()) return false;
    for (std::size_t i = 0; i < taps.size(); ++i)
      if (taps[i].delay_samples != p.early.taps[i].delay_samples) return false;
    return true;
  }
};

namespace {

std::size_t ring_capacity_for(int max_delay) {
  std::size_t cap = 1;
  while (cap < static_cast<std::size_t>(max_delay) + 1) cap <<= 1;
  return cap;
}

int largest_delay(const NetworkParams& p) {
  int d = 0;
  for (const Tap& t : p.early.taps) d = std::max(d, t.delay_samples);
  if (!p.fdn.kappas.empty()) d = std::max(d, p.fdn.kappas.back());
  return d;
}

}  // namespace

NetworkState::NetworkState(const NetworkParams& params, int max_delay,
                           int max_loops) {
  validate(params.fdn);
  validate(params.early);
  const int needed_delay = largest_delay(params);
  // Default capacity also covers the 50 ms early window, so layout updates
  // within the usual operating range need no reallocation.
  const int window_delay = params.fdn.sample_rate_hz / 20;
  max_delay_capacity_ =
      max_delay >= 0 ? max_delay : std::max(needed_delay, window_delay);
  max_loop_capacity_ =
      max_loops >= 0 ? max_loops
                     : std::max<int>(static_cast<int>(params.fdn.betas.size()),
                                     16);
  if (needed_delay > max_delay_capacity_)
    throw_error(ErrorKind::config, "delay exceeds the configured capacity");
  if (static_cast<int>(params.fdn.betas.size()) > max_loop_capacity_)
    throw_error(ErrorKind::config, "loop count exceeds the configured capacity");

  ring_.assign(ring_capacity_for(max_delay_capacity_), 0.0);
  ring_mask_ = ring_.size() - 1;
  loop_states_.assign(static_cast<std::size_t>(max_loop_capacity_), 0.0);

  auto snap = std::make_unique<Snapshot>();
  snap->alpha = params.fdn.alpha;
  snap->betas = params.fdn.betas;
  snap->kappas = params.fdn.kappas;
  snap->taps = params.early.taps;
  snap->sample_rate_hz = params.fdn.sample_rate_hz;
  snap->version = ++version_counter_;
  snap->layout = ++layout_counter_;
  active_.store(snap.release(), std::memory_order_release);
  seen_version_.store(0, std::memory_order_relaxed);
}

NetworkState::~NetworkState() {
  delete active_.load(std::memory_order_acquire);
}

const NetworkState::Snapshot* NetworkState::adopt() {
  const Snapshot* snap = active_.load(std::memory_order_acquire);
  if (snap->version != adopted_version_) {
    if (snap->layout != adopted_layout_) {
      std::fill(loop_states_.begin(), loop_states_.end(), 0.0);
      adopted_layout_ = snap->layout;
    }
    adopted_version_ = snap->version;
    per_sample_flops_ =
        network_flops_per_sample(static_cast<int>(snap->taps.size()),
                                 static_cast<int>(snap->betas.size()));
  }
  seen_version_.store(snap->version, std::memory_order_release);
  return snap;
}

double NetworkState::process_sample(double x) {
  const Snapshot* snap = adopt();
  ring_[write_pos_] = x;

  double early = 0.0;
  for (const Tap& t : snap->taps)
    early += t.gain *
             ring_[(write_pos_ - static_cast<std::size_t>(t.delay_samples)) &
                   ring_mask_];

  double tail = 0.0;
  const double alpha = snap->alpha;
  const std::size_t n_loops = snap->betas.size();
  for (std::size_t i = 0; i < n_loops; ++i) {
    const double in =
        ring_[(write_pos_ - static_cast<std::size_t>(snap->kappas[i])) &
              ring_mask_];
    loop_states_[i] = alpha * loop_states_[i] + snap->betas[i] * in;
    tail += loop_states_[i];
  }

  write_pos_ = (write_pos_ + 1) & ring_mask_;
  flop_count_ += static_cast<std::uint64_t>(per_sample_flops_);
  return early + tail;
}

void NetworkState::process_block(std::span<const double> input,
                                 std::span<double> output) {
  if (output.size() < input.size())
    throw_error(ErrorKind::range, "output block smaller than input block");
  for (std::size_t i = 0; i < input.size(); ++i)
    output[i] = process_sample(input[i]);
}

std::vector<double> NetworkState::process_block(
    std::span<const double> input) {
  std::vector<double> out(input.size());
  process_block(input, out);
  return out;
}

void NetworkState::update_params(const NetworkParams& params,
                                 LayoutChangePolicy policy) {
  validate(params.fdn);
  validate(params.early);
  std::lock_guard<std::mutex> lock(update_mutex_);
  const Snapshot* current = active_.load(std::memory_order_acquire);
  if (params.fdn.sample_rate_hz != current->sample_rate_hz)
    throw_error(ErrorKind::config, "sample rate cannot change mid-stream");
  if (largest_delay(params) > max_delay_capacity_)
    throw_error(ErrorKind::config,
                "updated delay exceeds capacity (" +
                    std::to_string(max_delay_capacity_) + " samples)");
  if (static_cast<int>(params.fdn.betas.size()) > max_loop_capacity_)
    throw_error(ErrorKind::config, "updated loop count exceeds capacity");
  const bool layout_unchanged = current->same_layout(params);
  if (!layout_unchanged && policy == LayoutChangePolicy::reject)
    throw_error(ErrorKind::config,
                "delay layout changed while layout changes are disabled");

  auto snap = std::make_unique<Snapshot>();
  snap->alpha = params.fdn.alpha;
  snap->betas = params.fdn.betas;
  snap->kappas = params.fdn.kappas;
  snap->taps = params.early.taps;
  snap->sample_rate_hz = params.fdn.sample_rate_hz;
  snap->version = ++version_counter_;
  snap->layout = layout_unchanged ? current->layout : ++layout_counter_;

  const Snapshot* old = active_.exchange(snap.release(),
                                         std::memory_order_acq_rel);
  retired_.emplace_back(old);
  prune_retired();
}

void NetworkState::prune_retired() {
  // A retired snapshot is unreachable once the audio thread has reported a
  // strictly newer version: it can never load it again.
  const std::uint64_t seen = seen_version_.load(std::memory_order_acquire);
  std::erase_if(retired_, [seen](const std::unique_ptr<const Snapshot>& s) {
    return s->version < seen;
  });
}

void NetworkState::reset() {
  std::fill(ring_.begin(), ring_.end(), 0.0);
  std::fill(loop_states_.begin(), loop_states_.end(), 0.0);
  write_pos_ = 0;
}

SampledRir impulse_response(const NetworkParams& params, std::int64_t length) {
  if (length <= 0)
    throw_error(ErrorKind::range, "impulse response length must be positive");
  NetworkState state(params);
  SampledRir rir;
  rir.sample_rate_hz = params.fdn.sample_rate_hz;
  rir.samples.resize(static_cast<std::size_t>(length));
  for (std::int64_t n = 0; n < length; ++n)
    rir.samples[static_cast<std::size_t>(n)] =
        state.process_sample(n == 0 ? 1.0 : 0.0);
  return rir;
}

}  // namespace fdnreverb
