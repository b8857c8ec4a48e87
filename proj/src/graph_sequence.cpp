#include "bsdp/graph_sequence.hpp"

#include "bsdp/error.hpp"

namespace bsdp {

GraphSequence build_graph_sequence(
    const std::map<std::int64_t, StationGraph>& graphs_by_period,
    const std::string& region_id, Granularity granularity,
    const SequenceOptions& options) {
  if (graphs_by_period.size() < 2) {
    throw InvalidInputError(
        "insufficient history: a graph sequence needs >= 2 periods");
  }

  GraphSequence seq;
  seq.region_id = region_id;
  seq.granularity = granularity;
  seq.first_period = graphs_by_period.begin()->first;
  const std::int64_t last = graphs_by_period.rbegin()->first;

  seq.graphs.reserve(static_cast<std::size_t>(last - seq.first_period + 1));
  auto it = graphs_by_period.begin();
  for (std::int64_t p = seq.first_period; p <= last; ++p) {
    if (it != graphs_by_period.end() && it->first == p) {
      seq.graphs.push_back(it->second);
      ++it;
    } else {
      seq.graphs.emplace_back();
      seq.missing_periods.push_back(p);
    }
  }
  seq.codec = fit_grid_codec(seq.graphs, options.codec);
  return seq;
}

}  // namespace bsdp
