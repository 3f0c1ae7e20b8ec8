#pragma once

#include <string>
#include <vector>

#include "montagelab/features.hpp"
#include "montagelab/hmm.hpp"
#include "montagelab/labels.hpp"

namespace mlab {

struct EpochConfig {
  std::size_t frames_per_epoch = 10;
};

/// Cuts a channel's features into consecutive whole epochs and labels each by
/// the event class covering most of its time span. Epochs that touch no
/// labelled event, and a trailing partial epoch, are dropped.
inline std::vector<Epoch> make_epochs(const FeatureSequence& seq, const LabelSet& labels,
                                      const std::string& recording_id, const EpochConfig& cfg = {}) {
  std::vector<Epoch> out;
  const std::size_t len = cfg.frames_per_epoch;
  if (len == 0) throw Error(ErrorCode::InvalidConfig, "epoch must span at least one frame");
  for (std::size_t first = 0; first + len <= seq.num_frames(); first += len) {
    const double start = static_cast<double>(first) * seq.frame_s;
    const double stop = static_cast<double>(first + len) * seq.frame_s;
    const auto cls = labels.majority_class(start, stop);
    if (!cls) continue;
    Epoch e;
    e.recording_id = recording_id;
    e.channel_label = seq.channel_label;
    e.first_frame = first;
    e.dims = seq.dims;
    e.reference_class = *cls;
    e.frames.assign(seq.values.begin() + static_cast<std::ptrdiff_t>(first * seq.dims),
                    seq.values.begin() + static_cast<std::ptrdiff_t>((first + len) * seq.dims));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mlab
