#pragma once

#include <cstdint>

#include "alignet/io.hpp"
#include "alignet/triplet.hpp"
#include "alignet/types.hpp"

namespace alignet {

struct LabelingResult {
    TripletDataset dataset;   // kind == both: hard choice + soft triple per row
    AligNetMeta meta;
    std::size_t tie_count = 0;  // rows labeled by the canonical tie-break
};

// Applies the (transformed) teacher to unlabeled triplets: soft triple at
// tau, hard choice = argmax pair. Deterministic given inputs; the stored
// hard choice always equals the argmax of the stored soft triple.
LabelingResult label_triplets(const EmbeddingMatrix& teacher, const TripletDataset& triplets,
                              Temperature tau, std::uint64_t transform_hash = 0);

} // namespace alignet
