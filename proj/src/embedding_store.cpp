#include "tac/embedding_store.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "tac/core_math.hpp"
#include "tac/error.hpp"

namespace tac {
namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "TACE I/O assumes a little-endian host");

template <typename T>
void put_le(std::array<char, tace_header_size>& buf, std::size_t offset, T value) {
    std::memcpy(buf.data() + offset, &value, sizeof(T));
}

template <typename T>
T get_le(const std::array<char, tace_header_size>& buf, std::size_t offset) {
    T value;
    std::memcpy(&value, buf.data() + offset, sizeof(T));
    return value;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool has_text_extension(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".tsv" || ext == ".txt";
}

void check_finite(std::span<const float> data, const fs::path& path) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw DataError(path.string() + ": non-finite value at flat index " +
                            std::to_string(i));
        }
    }
}

EmbeddingMatrix load_tsv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<float> data;
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::istringstream fields{std::string(body)};
        std::string tok;
        std::size_t count = 0;
        while (fields >> tok) {
            float v = 0.0f;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) {
                // from_chars rejects "nan"/"inf" spellings on some libstdc++
                // builds; route them to the finiteness check instead.
                if (tok == "nan" || tok == "NaN" || tok == "inf" || tok == "-inf") {
                    v = std::numeric_limits<float>::quiet_NaN();
                } else {
                    throw FormatError(path.string() + ":" + std::to_string(line_no) +
                                      ": not a number: '" + tok + "'");
                }
            }
            data.push_back(v);
            ++count;
        }
        if (rows == 0) {
            dim = count;
        } else if (count != dim) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(dim) + " values, got " + std::to_string(count));
        }
        ++rows;
    }
    if (rows == 0 || dim == 0) throw FormatError(path.string() + ": no rows");
    check_finite(data, path);
    return EmbeddingMatrix(rows, dim, std::move(data));
}

EmbeddingMatrix load_tace(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::array<char, tace_header_size> header{};
    in.read(header.data(), header.size());
    if (in.gcount() != static_cast<std::streamsize>(header.size())) {
        throw FormatError(path.string() + ": truncated header");
    }
    if (std::memcmp(header.data(), "TACE", 4) != 0) {
        throw FormatError(path.string() + ": bad magic");
    }
    const auto version = get_le<std::uint32_t>(header, 4);
    if (version != tace_version) {
        throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
    }
    const auto rows = get_le<std::uint64_t>(header, 8);
    const auto dim = get_le<std::uint32_t>(header, 16);
    const auto dtype = static_cast<std::uint8_t>(header[20]);
    if (dtype != 0) throw FormatError(path.string() + ": unsupported dtype " + std::to_string(dtype));
    if (rows == 0 || dim == 0) throw FormatError(path.string() + ": empty matrix in header");

    const std::uint64_t count = rows * dim;
    std::vector<float> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::uint64_t>(in.gcount()) != count * sizeof(float)) {
        throw FormatError(path.string() + ": truncated payload (header declares " +
                          std::to_string(rows) + "x" + std::to_string(dim) + ")");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes after payload");
    }
    check_finite(data, path);
    return EmbeddingMatrix(rows, dim, std::move(data));
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                                 bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
    if (rows_ == 0 || dim_ == 0) throw DimensionError("EmbeddingMatrix: rows and dim must be >= 1");
    if (data_.size() != rows_ * dim_) {
        throw DimensionError("EmbeddingMatrix: " + std::to_string(data_.size()) +
                             " values for " + std::to_string(rows_) + "x" + std::to_string(dim_));
    }
    for (float v : data_) {
        if (!std::isfinite(v)) throw DataError("EmbeddingMatrix: non-finite entry");
    }
    if (normalized_) {
        for (std::size_t i = 0; i < rows_; ++i) {
            if (std::abs(l2_norm(row(i)) - 1.0) > unit_tolerance) {
                throw NormalizationError("EmbeddingMatrix: row " + std::to_string(i) +
                                         " flagged normalized but not unit norm");
            }
        }
    }
}

EmbeddingMatrix EmbeddingMatrix::normalized() const {
    std::vector<float> out;
    out.reserve(data_.size());
    for (std::size_t i = 0; i < rows_; ++i) {
        const auto unit = l2_normalize(row(i));
        out.insert(out.end(), unit.begin(), unit.end());
    }
    return EmbeddingMatrix(rows_, dim_, std::move(out), true);
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::uint32_t> indices) const {
    std::vector<float> out;
    out.reserve(indices.size() * dim_);
    for (auto idx : indices) {
        if (idx >= rows_) throw DimensionError("select_rows: index out of range");
        const auto r = row(idx);
        out.insert(out.end(), r.begin(), r.end());
    }
    return EmbeddingMatrix(indices.size(), dim_, std::move(out), normalized_);
}

void write_embeddings(const fs::path& path, const EmbeddingMatrix& m) {
    std::array<char, tace_header_size> header{};
    std::memcpy(header.data(), "TACE", 4);
    put_le<std::uint32_t>(header, 4, tace_version);
    put_le<std::uint64_t>(header, 8, m.rows());
    put_le<std::uint32_t>(header, 16, static_cast<std::uint32_t>(m.dim()));
    header[20] = 0;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(header.data(), header.size());
    const auto data = m.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out) throw FormatError("write failed: " + path.string());
}

void write_embeddings_tsv(const fs::path& path, const EmbeddingMatrix& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    char buf[32];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            // Shortest round-trip representation keeps write/load bit-exact.
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), r[j]);
            if (j) out << '\t';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

EmbeddingMatrix load_embeddings(const fs::path& path, LoadOptions opts) {
    if (!fs::exists(path)) throw FormatError("missing embedding file: " + path.string());
    EmbeddingMatrix m = has_text_extension(path) ? load_tsv(path) : load_tace(path);
    return opts.normalize ? m.normalized() : m;
}

EmbeddingMatrix concat_features(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                bool normalize_halves) {
    if (a.rows() != b.rows()) {
        throw DimensionError("concat_features: row counts " + std::to_string(a.rows()) + " vs " +
                             std::to_string(b.rows()));
    }
    const std::size_t dim = a.dim() + b.dim();
    std::vector<float> out;
    out.reserve(a.rows() * dim);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (normalize_halves) {
            const auto ua = l2_normalize(a.row(i));
            const auto ub = l2_normalize(b.row(i));
            out.insert(out.end(), ua.begin(), ua.end());
            out.insert(out.end(), ub.begin(), ub.end());
        } else {
            out.insert(out.end(), a.row(i).begin(), a.row(i).end());
            out.insert(out.end(), b.row(i).begin(), b.row(i).end());
        }
    }
    return EmbeddingMatrix(a.rows(), dim, std::move(out));
}

std::vector<int> load_labels(const fs::path& path, std::optional<std::size_t> expected_n) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open label file " + path.string());
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
        if (ec != std::errc() || ptr != body.data() + body.size()) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": not an integer: '" + std::string(body) + "'");
        }
        if (v < 0) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": negative label");
        }
        labels.push_back(v);
    }
    if (expected_n && labels.size() != *expected_n) {
        throw DataError(path.string() + ": " + std::to_string(labels.size()) +
                        " labels, expected " + std::to_string(*expected_n));
    }
    return labels;
}

void write_labels(const fs::path& path, std::span<const int> labels) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    for (int v : labels) out << v << '\n';
}

std::string canonicalize_noun(std::string_view noun) {
    std::string out;
    bool pending_space = false;
    for (char c : trim(noun)) {
        if (c == ' ' || c == '\t' || c == '_') {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

NounVocabulary make_vocabulary(std::vector<std::string> nouns, EmbeddingMatrix embeddings) {
    if (nouns.size() != embeddings.rows()) {
        throw DataError("noun vocabulary: " + std::to_string(nouns.size()) + " nouns but " +
                        std::to_string(embeddings.rows()) + " embedding rows");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : nouns) {
        auto key = canonicalize_noun(n);
        if (key.empty()) throw DataError("noun vocabulary: empty noun");
        if (!seen.insert(key).second) throw DataError("noun vocabulary: duplicate noun '" + key + "'");
    }
    return NounVocabulary{std::move(nouns), std::move(embeddings)};
}

NounVocabulary load_vocabulary(const fs::path& noun_text, const fs::path& noun_embeddings) {
    std::ifstream in(noun_text);
    if (!in) throw FormatError("cannot open noun list " + noun_text.string());
    std::vector<std::string> nouns;
    std::string line;
    while (std::getline(in, line)) {
        const auto body = trim(line);
        if (body.empty()) continue;
        nouns.emplace_back(body);
    }
    return make_vocabulary(std::move(nouns), load_embeddings(noun_embeddings, {.normalize = true}));
}

fs::path noun_embeddings_path(const fs::path& noun_text) {
    auto p = noun_text;
    p.replace_extension(".tace");
    return p;
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open manifest " + path.string());
    const fs::path base = path.parent_path();
    auto resolve = [&](std::string_view v) {
        fs::path p{std::string(v)};
        return p.is_absolute() ? p : base / p;
    };

    DatasetManifest m;
    bool has_images = false, has_nouns = false, has_k = false, has_name = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string uncommented = line.substr(0, line.find('#'));
        const auto body = trim(uncommented);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(body.substr(0, eq));
        const auto value = trim(body.substr(eq + 1));
        if (key == "name") {
            m.name = value;
            has_name = true;
        } else if (key == "images") {
            m.images = resolve(value);
            has_images = true;
        } else if (key == "labels") {
            if (!value.empty()) m.labels = resolve(value);
        } else if (key == "nouns") {
            m.nouns = resolve(value);
            has_nouns = true;
        } else if (key == "K") {
            std::size_t k = 0;
            const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), k);
            if (ec != std::errc() || ptr != value.data() + value.size()) {
                throw FormatError(path.string() + ": K is not an integer");
            }
            m.target_k = k;
            has_k = true;
        } else if (key == "split") {
            m.split = value;
        } else {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" +
                              std::string(key) + "'");
        }
    }
    if (!has_name || !has_images || !has_nouns || !has_k) {
        throw FormatError(path.string() + ": manifest requires name, images, nouns and K");
    }
    if (m.target_k < 2) throw ParameterError(path.string() + ": K must be >= 2");
    for (const auto& p : {m.images, m.nouns, noun_embeddings_path(m.nouns)}) {
        if (!fs::exists(p)) throw FormatError("manifest references missing file " + p.string());
    }
    if (m.labels && !fs::exists(*m.labels)) {
        throw FormatError("manifest references missing file " + m.labels->string());
    }
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "name = " << m.name << '\n';
    out << "images = " << m.images.string() << '\n';
    if (m.labels) out << "labels = " << m.labels->string() << '\n';
    out << "nouns = " << m.nouns.string() << '\n';
    out << "K = " << m.target_k << '\n';
    out << "split = " << m.split << '\n';
}

}  // namespace tac
