#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "alignet/types.hpp"

// On-disk formats (all fixed little-endian, payloads 32-bit floats unless
// stated otherwise):
//
//   EMB1  "EMB1" | u32 m | u32 p | m*p f32 row-major | u32 id block length
//         | id block (newline-joined UTF-8 ids; length 0 when absent)
//   AFF1  "AFF1" | u32 p | p*p f32 W row-major | p f32 b
//   STU1  "STU1" | u32 n_widths | u32 widths[] | u32 nonlinearity
//         | u64 n_params | f64 theta[] | f64 theta_init[]
//
// Text formats are UTF-8, tab-separated, '#' comment lines ignored:
//   triplets   hard  `i j k a b`; soft `i j k q_ij q_ik q_jk`;
//              unlabeled `i j k`; alignet `i j k a b q_ij q_ik q_jk`
//              preceded by `# transform=<hash> tau=<tau>`
//   labels     `item_id subordinate basic superordinate [cluster]`
//   rt         `triplet_index rt_seconds` (one observation per line)
namespace alignet {

EmbeddingMatrix load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingMatrix& mat, const std::string& path);

enum class TripletFileKind { unlabeled, hard, soft, alignet };

struct AligNetMeta {
    std::uint64_t transform_hash = 0;
    double tau = 1.0;
};

struct LoadedTriplets {
    TripletDataset dataset;
    std::optional<AligNetMeta> meta;  // present for alignet files
};

LoadedTriplets load_triplets(const std::string& path, TripletFileKind kind);
void save_triplets(const TripletDataset& ds, const std::string& path,
                   const std::optional<AligNetMeta>& meta = std::nullopt);

// All triplet indices < mat.rows; IndexOutOfRange lists offending rows.
void validate_pairing(const EmbeddingMatrix& mat, const TripletDataset& ds);

HierarchyLabels load_labels(const std::string& path);
void save_labels(const HierarchyLabels& labels, const std::string& path);

ResponseTimeTable load_rts(const std::string& path, std::size_t n_triplets);
void save_rts(const ResponseTimeTable& table, const std::string& path);

} // namespace alignet
