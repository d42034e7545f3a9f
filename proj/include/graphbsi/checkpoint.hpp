#pragma once

#include <iosfwd>
#include <string>

#include "graphbsi/graph.hpp"
#include "graphbsi/model.hpp"
#include "graphbsi/schedule.hpp"

namespace graphbsi {

inline constexpr char kCheckpointMagic[8] = {'G', 'B', 'S', 'I', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to sample from a trained model.
struct Checkpoint {
  ReconNet net;
  PrecisionSchedule node_schedule;
  PrecisionSchedule edge_schedule;
  std::string family;
  NodeCountDistribution node_counts;
};

// Binary layout is documented in docs/formats.md. All integers are u32 and
// all reals f64, little-endian.
void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace graphbsi
