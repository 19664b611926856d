#include "qkd/paper_vector.hpp"

#include <algorithm>

namespace qkd::paper_vector {

PreparedSession prepared_session(bool use_published_measurement) {
  PreparedSession s;
  s.alice.bits = parse_bits(kKey);
  s.bob_bases = parse_bases(kBobBases);
  s.alice.bases.resize(s.bob_bases.size());
  for (std::size_t i = 0; i < s.bob_bases.size(); ++i) {
    const bool matched = std::find(kMatchingIndices.begin(), kMatchingIndices.end(), i) != kMatchingIndices.end();
    s.alice.bases[i] = matched ? s.bob_bases[i] : other(s.bob_bases[i]);
  }
  if (use_published_measurement) s.uncertain_fill = parse_bits(kPossibleMeasured);
  return s;
}

}  // namespace qkd::paper_vector
