#pragma once

#include <vector>

#include "exwarp/scheduler.hpp"
#include "helpers.hpp"

namespace testing {

/// Base-frame surfaces plus a fixed state provider for driving run_interval directly.
struct IntervalFixture {
  exwarp::Episode episode;
  std::vector<exwarp::Surface> surfaces;

  explicit IntervalFixture(const exwarp::SceneSpec& spec) : episode(exwarp::render_episode(spec)) {
    for (int k = 0; k < episode.base_frame_count(); ++k)
      surfaces.push_back(exwarp::Surface::from_rendered(episode.base_frame(k),
                                                        episode.gbuffers[static_cast<std::size_t>(k)]));
  }

  exwarp::IntervalInput input(int t) const {
    exwarp::IntervalInput in;
    in.interval_index = t;
    in.base_fps = episode.base_fps;
    in.current = &surfaces[static_cast<std::size_t>(t)];
    in.older = {&surfaces[static_cast<std::size_t>(t - 2)], &surfaces[static_cast<std::size_t>(t - 1)]};
    for (int i = 0; i < 3; ++i) in.ground_truth[static_cast<std::size_t>(i)] = &episode.quarter_frame(4 * t + 1 + i);
    in.state_for = [](exwarp::NodeId) { return exwarp::StateVector{}; };
    return in;
  }
};

}  // namespace testing
