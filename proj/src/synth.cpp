#include "alignet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alignet/kernels.hpp"
#include "alignet/rng.hpp"

namespace alignet {

void HierarchySpec::validate() const {
    if (superordinates < 1 || basics_per_super < 1 || subs_per_basic < 1 || items_per_sub < 1)
        fail("InvalidConfig", "all hierarchy counts must be >= 1");
    if (!(disp_super > 0.0) || !(disp_basic > 0.0) || !(disp_sub > 0.0) || !(disp_item > 0.0))
        fail("InvalidConfig", "dispersions must be > 0");
    if (dim < 1) fail("InvalidConfig", "embedding width must be >= 1");
}

Hierarchy generate_hierarchy(const HierarchySpec& spec) {
    spec.validate();
    const std::size_t m = spec.total_items();
    const std::size_t p = spec.dim;
    Hierarchy h;
    h.truth = EmbeddingMatrix(m, p);
    h.labels.resize(m);

    Rng rng = derived_rng(spec.seed, 0x6E4);
    std::vector<double> super_mean(p), basic_mean(p), sub_mean(p);
    std::size_t item = 0;
    std::int64_t basic_id = 0;
    std::int64_t sub_id = 0;
    for (std::size_t sup = 0; sup < spec.superordinates; ++sup) {
        for (std::size_t c = 0; c < p; ++c) super_mean[c] = spec.disp_super * rng.normal();
        for (std::size_t bas = 0; bas < spec.basics_per_super; ++bas, ++basic_id) {
            for (std::size_t c = 0; c < p; ++c)
                basic_mean[c] = super_mean[c] + spec.disp_basic * rng.normal();
            for (std::size_t sub = 0; sub < spec.subs_per_basic; ++sub, ++sub_id) {
                for (std::size_t c = 0; c < p; ++c)
                    sub_mean[c] = basic_mean[c] + spec.disp_sub * rng.normal();
                for (std::size_t it = 0; it < spec.items_per_sub; ++it, ++item) {
                    double* row = h.truth.row(item);
                    for (std::size_t c = 0; c < p; ++c)
                        row[c] = sub_mean[c] + spec.disp_item * rng.normal();
                    h.labels.subordinate[item] = sub_id;
                    h.labels.basic[item] = basic_id;
                    h.labels.superordinate[item] = static_cast<std::int64_t>(sup);
                }
            }
        }
    }
    return h;
}

EmbeddingMatrix corrupt_teacher(const EmbeddingMatrix& truth, double severity, std::uint64_t seed,
                                double noise_strength) {
    truth.validate();
    if (severity < 0.0 || severity > 1.0) fail("InvalidConfig", "severity must be in [0, 1]");
    const std::size_t m = truth.rows;
    const std::size_t p = truth.dims;
    EmbeddingMatrix out = truth;
    if (severity == 0.0) return out;

    Rng rng = derived_rng(seed, 0xC0);

    // rotated coordinate subset, dim ~ severity * p
    const std::size_t d_rot =
        std::min(p, std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(severity * p))));
    std::vector<std::size_t> coords(p);
    for (std::size_t c = 0; c < p; ++c) coords[c] = c;
    for (std::size_t i = p; i > 1; --i) std::swap(coords[i - 1], coords[rng.below(i)]);
    std::vector<std::size_t> rot_coords(coords.begin(), coords.begin() + d_rot);
    std::sort(rot_coords.begin(), rot_coords.end());

    // Haar-orthogonal d_rot x d_rot via Gram-Schmidt on a Gaussian matrix
    std::vector<double> q(d_rot * d_rot);
    for (auto& v : q) v = rng.normal();
    for (std::size_t r = 0; r < d_rot; ++r) {
        double* qr = q.data() + r * d_rot;
        for (std::size_t prev = 0; prev < r; ++prev) {
            const double* qp = q.data() + prev * d_rot;
            kern::axpy(-kern::dot(qr, qp, d_rot), qp, qr, d_rot);
        }
        const double norm = std::sqrt(kern::dot(qr, qr, d_rot));
        kern::scale(1.0 / norm, qr, d_rot);
    }

    std::vector<double> slice(d_rot), rotated(d_rot);
    for (std::size_t r = 0; r < m; ++r) {
        double* row = out.row(r);
        for (std::size_t c = 0; c < d_rot; ++c) slice[c] = row[rot_coords[c]];
        for (std::size_t c = 0; c < d_rot; ++c)
            rotated[c] = kern::dot(q.data() + c * d_rot, slice.data(), d_rot);
        for (std::size_t c = 0; c < d_rot; ++c) row[rot_coords[c]] = rotated[c];
    }

    // additive noise confined to a random coordinate subset so that a
    // linear transform can project it out
    const std::size_t d_noise =
        std::min(p - 1, std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(severity * p / 4.0))));
    for (std::size_t i = p; i > 1; --i) std::swap(coords[i - 1], coords[rng.below(i)]);
    std::vector<std::size_t> noise_coords(coords.begin(), coords.begin() + d_noise);

    double rms = std::sqrt(kern::dot(out.data.data(), out.data.data(), out.data.size()) /
                           static_cast<double>(out.data.size()));
    if (rms == 0.0) rms = 1.0;
    const double sd = severity * noise_strength * rms;
    for (std::size_t r = 0; r < m; ++r) {
        double* row = out.row(r);
        for (std::size_t c : noise_coords) row[c] += sd * rng.normal();
    }
    return out;
}

SimulatedResponses simulate_responses(const EmbeddingMatrix& truth, std::span<const Triplet> triplets,
                                      Temperature tau_h, std::size_t n_subjects,
                                      std::uint64_t seed) {
    if (n_subjects < 1) fail("InvalidConfig", "need at least one subject");
    SimulatedResponses sim;
    sim.p_star.reserve(triplets.size());
    for (const Triplet& t : triplets) {
        if (t.i >= truth.rows || t.j >= truth.rows || t.k >= truth.rows)
            fail("IndexOutOfRange", "triplet indexes beyond m = " + std::to_string(truth.rows));
        sim.p_star.push_back(triplet_probs(pairwise_similarity(truth, t.i, t.j, t.k), tau_h));
    }
    sim.responses.assign(triplets.size(), {});
    for (std::size_t t = 0; t < triplets.size(); ++t) sim.responses[t].resize(n_subjects);
    // per-subject derived streams: adding subjects never changes earlier ones
    for (std::size_t subject = 0; subject < n_subjects; ++subject) {
        Rng rng = derived_rng(seed, 0x5B000 + subject);
        for (std::size_t t = 0; t < triplets.size(); ++t) {
            const ProbTriple& q = sim.p_star[t];
            const double u = rng.uniform();
            int pair = 2;
            if (u < q.q_ij) {
                pair = 0;
            } else if (u < q.q_ij + q.q_ik) {
                pair = 1;
            }
            sim.responses[t][subject] = static_cast<std::uint8_t>(odd_position_of_pair(pair));
        }
    }
    return sim;
}

ResponseTimeTable simulate_rts(std::span<const ProbTriple> p_star, double noise_sd,
                               std::uint64_t seed, double alpha, double beta) {
    if (noise_sd < 0.0) fail("InvalidConfig", "noise_sd must be >= 0");
    ResponseTimeTable table;
    table.observations.resize(p_star.size());
    Rng rng = derived_rng(seed, 0x47);
    for (std::size_t t = 0; t < p_star.size(); ++t) {
        const double log_rt =
            alpha + beta * triplet_entropy(p_star[t]) + (noise_sd > 0.0 ? noise_sd * rng.normal() : 0.0);
        table.observations[t].push_back(std::exp(log_rt));
    }
    return table;
}

TripletDataset responses_to_hard_dataset(std::span<const Triplet> triplets,
                                         const SimulatedResponses& sim, std::size_t subject) {
    if (sim.responses.size() != triplets.size())
        fail("LengthMismatch", "responses do not cover the triplet list");
    TripletDataset ds;
    ds.kind = LabelKind::hard;
    ds.source_tag = "simulated(subject=" + std::to_string(subject) + ")";
    ds.triplets.assign(triplets.begin(), triplets.end());
    ds.hard.reserve(triplets.size());
    for (std::size_t t = 0; t < triplets.size(); ++t) {
        if (subject >= sim.responses[t].size())
            fail("IndexOutOfRange", "subject " + std::to_string(subject) + " not simulated");
        const int odd = sim.responses[t][subject];
        const Triplet& tri = triplets[t];
        HardChoice c;
        if (odd == 0) c = {tri.j, tri.k};
        if (odd == 1) c = {tri.i, tri.k};
        if (odd == 2) c = {tri.i, tri.j};
        ds.hard.push_back(c);
    }
    return ds;
}

} // namespace alignet
