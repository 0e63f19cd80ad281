#include "alignet/labeler.hpp"

#include <string>

#include "alignet/kernels.hpp"

namespace alignet {

LabelingResult label_triplets(const EmbeddingMatrix& teacher, const TripletDataset& triplets,
                              Temperature tau, std::uint64_t transform_hash) {
    validate_pairing(teacher, triplets);
    LabelingResult result;
    result.meta.transform_hash = transform_hash;
    result.meta.tau = tau.value;
    TripletDataset& out = result.dataset;
    out.kind = LabelKind::both;
    out.triplets = triplets.triplets;
    out.source_tag = triplets.source_tag;
    out.hard.reserve(out.size());
    out.soft.reserve(out.size());

    for (const Triplet& t : out.triplets) {
        const TripletSimilarities s = pairwise_similarity(teacher, t.i, t.j, t.k);
        out.soft.push_back(triplet_probs(s, tau));
        // hard choice from the same comparisons the soft argmax uses, so the
        // stored pair is consistent with the stored probabilities bit for bit
        int best_pair = 0;
        double best = s.s_ij;
        for (int pair = 1; pair < 3; ++pair) {
            if (s[pair] > best) {
                best = s[pair];
                best_pair = pair;
            }
        }
        int at_max = 0;
        for (int pair = 0; pair < 3; ++pair)
            if (s[pair] == best) ++at_max;
        if (at_max > 1) ++result.tie_count;  // labeled by the canonical tie-break
        HardChoice c;
        switch (best_pair) {
        case 0: c = {t.i, t.j}; break;
        case 1: c = {t.i, t.k}; break;
        default: c = {t.j, t.k}; break;
        }
        out.hard.push_back(c);
    }
    out.validate();
    return result;
}

} // namespace alignet
