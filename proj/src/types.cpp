#include "alignet/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace alignet {

void EmbeddingMatrix::validate() const {
    if (rows == 0 || dims == 0) fail("EmptyMatrix", "embedding matrix must have rows > 0 and dims > 0");
    if (data.size() != rows * dims)
        fail("LengthMismatch", "data has " + std::to_string(data.size()) + " values, expected " +
                                   std::to_string(rows * dims));
    for (std::size_t idx = 0; idx < data.size(); ++idx) {
        if (!std::isfinite(data[idx]))
            fail("NonFiniteValue", "non-finite value at row " + std::to_string(idx / dims) +
                                       ", col " + std::to_string(idx % dims));
    }
    if (!item_ids.empty()) {
        if (item_ids.size() != rows)
            fail("LengthMismatch", "item_ids has " + std::to_string(item_ids.size()) +
                                       " entries, expected " + std::to_string(rows));
        std::set<std::string> seen;
        for (const auto& id : item_ids) {
            if (!seen.insert(id).second) fail("DuplicateId", "duplicate item id '" + id + "'");
        }
    }
}

void TripletDataset::validate() const {
    const std::size_t n = triplets.size();
    const bool want_hard = kind == LabelKind::hard || kind == LabelKind::both;
    const bool want_soft = kind == LabelKind::soft || kind == LabelKind::both;
    if (want_hard && hard.size() != n)
        fail("LengthMismatch", "hard labels: " + std::to_string(hard.size()) + " for " +
                                   std::to_string(n) + " triplets");
    if (want_soft && soft.size() != n)
        fail("LengthMismatch", "soft labels: " + std::to_string(soft.size()) + " for " +
                                   std::to_string(n) + " triplets");
    for (std::size_t s = 0; s < n; ++s) {
        const Triplet& t = triplets[s];
        if (t.i == t.j || t.i == t.k || t.j == t.k)
            fail("DuplicateIndexInTriple", "triplet " + std::to_string(s) + " has repeated indices");
        if (want_hard) choice_pair_index(t, hard[s]);
        if (want_soft) {
            const ProbTriple& q = soft[s];
            for (int pair = 0; pair < 3; ++pair) {
                if (!(q[pair] >= 0.0) || !std::isfinite(q[pair]))
                    fail("SoftNotNormalized",
                         "triplet " + std::to_string(s) + " has invalid probability");
            }
            if (std::abs(q.sum() - 1.0) > 1e-9)
                fail("SoftNotNormalized", "triplet " + std::to_string(s) + " probabilities sum to " +
                                              std::to_string(q.sum()));
        }
    }
}

int choice_pair_index(const Triplet& t, const HardChoice& c) {
    const auto is_pair = [&](std::uint32_t x, std::uint32_t y) {
        return (c.a == x && c.b == y) || (c.a == y && c.b == x);
    };
    if (is_pair(t.i, t.j)) return 0;
    if (is_pair(t.i, t.k)) return 1;
    if (is_pair(t.j, t.k)) return 2;
    fail("ChoiceNotInTriple", "choice {" + std::to_string(c.a) + "," + std::to_string(c.b) +
                                  "} is not a pair of triple {" + std::to_string(t.i) + "," +
                                  std::to_string(t.j) + "," + std::to_string(t.k) + "}");
}

double ResponseTimeTable::aggregated_log_rt(std::size_t triplet, double cutoff_seconds,
                                            bool use_median) const {
    if (triplet >= observations.size())
        fail("MissingRt", "no response times recorded for triplet " + std::to_string(triplet));
    std::vector<double> logs;
    for (double rt : observations[triplet]) {
        if (rt > 0.0 && rt <= cutoff_seconds) logs.push_back(std::log(rt));
    }
    if (logs.empty())
        fail("MissingRt", "triplet " + std::to_string(triplet) + " has no usable response time");
    if (use_median) {
        std::sort(logs.begin(), logs.end());
        const std::size_t mid = logs.size() / 2;
        return logs.size() % 2 == 1 ? logs[mid] : 0.5 * (logs[mid - 1] + logs[mid]);
    }
    double total = 0.0;
    for (double v : logs) total += v;
    return total / static_cast<double>(logs.size());
}

} // namespace alignet
