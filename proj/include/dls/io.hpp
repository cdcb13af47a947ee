#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dls/exact.hpp"
#include "dls/ir_metrics.hpp"
#include "dls/link_index.hpp"
#include "dls/pooling.hpp"
#include "dls/vecstore.hpp"

namespace dls {

// Malformed, truncated, or corrupted input files.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320).
std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

// ---- fvecs / ivecs --------------------------------------------------------
// Per row: little-endian i32 dimension, then dim values (f32 or i32). Every
// row must share one dimension; payloads with NaN/Inf are rejected.

VectorSet read_fvecs(const std::filesystem::path& path);
void write_fvecs(const VectorSet& vectors, const std::filesystem::path& path);

struct IntMatrix {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<std::int32_t> data;

    std::int32_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

IntMatrix read_ivecs(const std::filesystem::path& path);
void write_ivecs(const IntMatrix& matrix, const std::filesystem::path& path);

// Ground-truth neighbor ids as an ivecs matrix (one row per query).
IntMatrix ground_truth_to_ivecs(const GroundTruth& truth);

// ---- flat tensors ("DLST") ------------------------------------------------

struct Tensor {
    std::vector<std::uint64_t> dims;
    std::vector<float> data;

    std::uint64_t element_count() const;
};

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

FeatureMap tensor_to_feature_map(const Tensor& tensor);           // rank-3 [K, W, H]
LayerNormParams tensor_to_layernorm_params(const Tensor& tensor,  // rank-2 [2, K]
                                           float epsilon = 1e-6f);

// ---- index files ("DLSI") -------------------------------------------------
// Header, per-node link arrays, trailing CRC-32 over everything before it.

void write_index(const LinkIndex& index, const std::filesystem::path& path);
LinkIndex read_index(const std::filesystem::path& path);

// ---- trec-style text files ------------------------------------------------
// qrels line:  qid 0 docid judgment      (judgment > 0 means relevant)
// run line:    qid Q0 docid rank score tag

QrelSet parse_qrels(const std::filesystem::path& path);
RunRanking parse_run(const std::filesystem::path& path);
void write_run(const RunRanking& run, const std::filesystem::path& path,
               const std::string& tag = "dls");

}  // namespace dls
