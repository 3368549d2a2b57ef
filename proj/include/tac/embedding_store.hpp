#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tac {

/// N×D row-major float32 matrix of embeddings. Immutable after construction;
/// the constructor validates finiteness and, when `normalized`, unit rows.
class EmbeddingMatrix {
public:
    static constexpr double unit_tolerance = 1e-4;

    EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                    bool normalized = false);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    bool is_normalized() const noexcept { return normalized_; }

    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<const float> data() const noexcept { return data_; }

    /// Copy with every row scaled to unit norm.
    EmbeddingMatrix normalized() const;

    /// Rows selected by index, in the given order.
    EmbeddingMatrix select_rows(std::span<const std::uint32_t> indices) const;

    bool operator==(const EmbeddingMatrix&) const = default;

private:
    std::size_t rows_;
    std::size_t dim_;
    std::vector<float> data_;
    bool normalized_;
};

struct LoadOptions {
    bool normalize = false;
};

// Binary "TACE" layout, all little-endian:
//   0  char[4] "TACE"
//   4  u32     version (1)
//   8  u64     N
//  16  u32     D
//  20  u8      dtype (0 = float32)
//  21  u8[11]  reserved, zero
//  32  float32 payload[N*D], row-major
inline constexpr std::uint32_t tace_version = 1;
inline constexpr std::size_t tace_header_size = 32;

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);
void write_embeddings_tsv(const std::filesystem::path& path, const EmbeddingMatrix& m);

/// Loads TACE, or the TSV text form when the extension is .tsv/.txt.
/// Throws FormatError on bad magic, bad header or truncated payload, and
/// DataError on non-finite values.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, LoadOptions opts = {});

/// Row i is [a_i ‖ b_i]. With `normalize_halves`, each half is scaled to
/// unit norm first, so every output row has norm √2.
EmbeddingMatrix concat_features(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                bool normalize_halves = true);

/// One non-negative integer per line; blank lines are ignored. Throws
/// DataError when `expected_n` is given and the count differs.
std::vector<int> load_labels(const std::filesystem::path& path,
                             std::optional<std::size_t> expected_n = std::nullopt);

/// Newline-delimited integers, one per row.
void write_labels(const std::filesystem::path& path, std::span<const int> labels);

struct NounVocabulary {
    std::vector<std::string> nouns;
    EmbeddingMatrix embeddings;
};

/// Lowercased, trimmed, inner whitespace collapsed to single spaces.
std::string canonicalize_noun(std::string_view noun);

/// Validates pairing and uniqueness (after canonicalization).
NounVocabulary make_vocabulary(std::vector<std::string> nouns, EmbeddingMatrix embeddings);

NounVocabulary load_vocabulary(const std::filesystem::path& noun_text,
                               const std::filesystem::path& noun_embeddings);

/// Path of the TACE file paired with a noun text file: same stem, ".tace".
std::filesystem::path noun_embeddings_path(const std::filesystem::path& noun_text);

struct DatasetManifest {
    std::string name;
    std::filesystem::path images;
    std::optional<std::filesystem::path> labels;
    std::filesystem::path nouns;
    std::size_t target_k = 0;
    std::string split = "test";
};

/// `key = value` lines; `#` starts a comment. Keys: name, images, labels,
/// nouns, K, split. Relative paths resolve against the manifest's directory.
/// Throws FormatError for unknown/missing keys or missing referenced files.
DatasetManifest load_manifest(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

}  // namespace tac
