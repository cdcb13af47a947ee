#include "dls/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace dls {

namespace {

constexpr std::uint16_t kTensorVersion = 1;
constexpr std::uint16_t kIndexVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

// ---- little-endian encode/decode against a byte buffer --------------------

void put_bytes(std::vector<std::uint8_t>& out, const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    out.insert(out.end(), p, p + n);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
}

void put_f32_le(std::vector<std::uint8_t>& out, float value) {
    put_le(out, std::bit_cast<std::uint32_t>(value));
}

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string name)
        : data_(data), size_(size), name_(std::move(name)) {}

    template <typename T>
    T get_le() {
        static_assert(std::is_integral_v<T>);
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    float get_f32_le() { return std::bit_cast<float>(get_le<std::uint32_t>()); }

    void get_bytes(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return size_ - pos_; }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (size_ - pos_ < n)
            throw io_error(name_ + ": truncated (need " + std::to_string(n) + " bytes at offset " +
                           std::to_string(pos_) + ", have " + std::to_string(size_ - pos_) + ")");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_{0};
    std::string name_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string() + " for reading");
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw io_error("read failure on " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failure on " + path.string());
}

void check_finite(float v, const std::string& name, std::size_t index) {
    if (!std::isfinite(v))
        throw io_error(name + ": non-finite value at element " + std::to_string(index));
}

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int bit = 0; bit < 8; ++bit) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
    static const std::array<std::uint32_t, 256> table = make_crc_table();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

// ---- fvecs / ivecs ---------------------------------------------------------

namespace {

template <typename Element, typename Push>
std::pair<std::size_t, std::size_t> read_vecs(const std::filesystem::path& path, Push&& push) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    ByteReader r(bytes.data(), bytes.size(), path.string());

    std::size_t rows = 0, dim = 0;
    while (r.remaining() > 0) {
        const auto row_dim = r.get_le<std::int32_t>();
        if (row_dim <= 0)
            throw io_error(path.string() + ": row " + std::to_string(rows) +
                           " has non-positive dimension " + std::to_string(row_dim));
        if (rows == 0)
            dim = static_cast<std::size_t>(row_dim);
        else if (static_cast<std::size_t>(row_dim) != dim)
            throw io_error(path.string() + ": row " + std::to_string(rows) + " has dimension " +
                           std::to_string(row_dim) + ", expected " + std::to_string(dim));
        for (std::size_t i = 0; i < dim; ++i) push(r, rows * dim + i);
        ++rows;
    }
    return {rows, dim};
}

}  // namespace

VectorSet read_fvecs(const std::filesystem::path& path) {
    std::vector<float> data;
    auto [rows, dim] = read_vecs<float>(path, [&](ByteReader& r, std::size_t index) {
        const float v = r.get_f32_le();
        check_finite(v, path.string(), index);
        data.push_back(v);
    });
    if (rows == 0) return VectorSet{};
    return VectorSet(rows, dim, std::move(data));
}

void write_fvecs(const VectorSet& vectors, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(vectors.size() * (4 + 4 * vectors.dim()));
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        put_le(bytes, static_cast<std::int32_t>(vectors.dim()));
        for (float v : vectors[i]) put_f32_le(bytes, v);
    }
    write_file(path, bytes);
}

IntMatrix read_ivecs(const std::filesystem::path& path) {
    IntMatrix m;
    auto [rows, dim] = read_vecs<std::int32_t>(path, [&](ByteReader& r, std::size_t) {
        m.data.push_back(r.get_le<std::int32_t>());
    });
    m.rows = rows;
    m.cols = rows == 0 ? 0 : dim;
    return m;
}

void write_ivecs(const IntMatrix& matrix, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(matrix.rows * (4 + 4 * matrix.cols));
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        put_le(bytes, static_cast<std::int32_t>(matrix.cols));
        for (std::size_t c = 0; c < matrix.cols; ++c)
            put_le(bytes, matrix.at(r, c));
    }
    write_file(path, bytes);
}

IntMatrix ground_truth_to_ivecs(const GroundTruth& truth) {
    IntMatrix m;
    m.rows = truth.queries.size();
    m.cols = truth.k;
    m.data.assign(m.rows * m.cols, -1);
    for (std::size_t q = 0; q < m.rows; ++q) {
        const auto& ranked = truth.queries[q].ranked;
        for (std::size_t i = 0; i < std::min(m.cols, ranked.size()); ++i)
            m.data[q * m.cols + i] = static_cast<std::int32_t>(ranked[i].id);
    }
    return m;
}

// ---- flat tensors ----------------------------------------------------------

std::uint64_t Tensor::element_count() const {
    std::uint64_t n = 1;
    for (std::uint64_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

Tensor read_tensor(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    ByteReader r(bytes.data(), bytes.size(), path.string());

    char magic[4];
    r.get_bytes(magic, 4);
    if (std::memcmp(magic, "DLST", 4) != 0)
        throw io_error(path.string() + ": bad magic, not a DLST tensor file");
    const auto version = r.get_le<std::uint16_t>();
    if (version != kTensorVersion)
        throw io_error(path.string() + ": unsupported DLST version " + std::to_string(version));
    const auto rank = r.get_le<std::uint8_t>();
    if (rank == 0 || rank > 8)
        throw io_error(path.string() + ": implausible tensor rank " + std::to_string(rank));

    Tensor t;
    t.dims.resize(rank);
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        t.dims[i] = r.get_le<std::uint64_t>();
        if (t.dims[i] == 0 || t.dims[i] > (1ull << 40) || count > (1ull << 40) / t.dims[i])
            throw io_error(path.string() + ": implausible tensor dimensions");
        count *= t.dims[i];
    }
    const auto dtype = r.get_le<std::uint8_t>();
    if (dtype != kDtypeF32)
        throw io_error(path.string() + ": unsupported dtype code " + std::to_string(dtype));
    if (r.remaining() != count * 4)
        throw io_error(path.string() + ": payload size " + std::to_string(r.remaining()) +
                       " != expected " + std::to_string(count * 4));

    t.data.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        t.data[i] = r.get_f32_le();
        check_finite(t.data[i], path.string(), i);
    }
    return t;
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
    if (tensor.dims.empty() || tensor.dims.size() > 8)
        throw std::invalid_argument("write_tensor: rank must be in [1, 8]");
    if (tensor.element_count() != tensor.data.size())
        throw std::invalid_argument("write_tensor: data length does not match dims");

    std::vector<std::uint8_t> bytes;
    bytes.reserve(16 + tensor.dims.size() * 8 + tensor.data.size() * 4);
    put_bytes(bytes, "DLST", 4);
    put_le(bytes, kTensorVersion);
    put_le(bytes, static_cast<std::uint8_t>(tensor.dims.size()));
    for (std::uint64_t d : tensor.dims) put_le(bytes, d);
    put_le(bytes, kDtypeF32);
    for (float v : tensor.data) put_f32_le(bytes, v);
    write_file(path, bytes);
}

FeatureMap tensor_to_feature_map(const Tensor& tensor) {
    if (tensor.dims.size() != 3)
        throw io_error("feature map tensor must have rank 3 [K, W, H], got rank " +
                       std::to_string(tensor.dims.size()));
    return FeatureMap(static_cast<std::size_t>(tensor.dims[0]),
                      static_cast<std::size_t>(tensor.dims[1]),
                      static_cast<std::size_t>(tensor.dims[2]), tensor.data);
}

LayerNormParams tensor_to_layernorm_params(const Tensor& tensor, float epsilon) {
    if (tensor.dims.size() != 2 || tensor.dims[0] != 2)
        throw io_error("layer-norm parameter tensor must have shape [2, K]");
    const auto k = static_cast<std::size_t>(tensor.dims[1]);
    LayerNormParams params;
    params.gamma.assign(tensor.data.begin(), tensor.data.begin() + k);
    params.beta.assign(tensor.data.begin() + k, tensor.data.end());
    params.epsilon = epsilon;
    return params;
}

// ---- index files -----------------------------------------------------------

void write_index(const LinkIndex& index, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    put_bytes(bytes, "DLSI", 4);
    put_le(bytes, kIndexVersion);
    put_le(bytes, index.count);
    put_le(bytes, index.dim);
    put_le(bytes, index.root_id);
    put_le(bytes, index.k_index);
    put_le(bytes, index.seed);
    put_le(bytes, index.stats.distance_computations);
    for (const auto& links : index.links) {
        put_le(bytes, static_cast<std::uint32_t>(links.size()));
        for (const Link& l : links) {
            put_le(bytes, l.endpoint);
            put_f32_le(bytes, l.length);
        }
    }
    put_le(bytes, crc32(bytes.data(), bytes.size()));
    write_file(path, bytes);
}

LinkIndex read_index(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < 4 + 2 + 4)
        throw io_error(path.string() + ": too small to be an index file");
    if (std::memcmp(bytes.data(), "DLSI", 4) != 0)
        throw io_error(path.string() + ": bad magic, not a DLSI index file");

    // checksum first: any corruption below is caught before parsing
    ByteReader trailer(bytes.data() + bytes.size() - 4, 4, path.string());
    const auto stored_crc = trailer.get_le<std::uint32_t>();
    const std::uint32_t actual_crc = crc32(bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc)
        throw io_error(path.string() + ": CRC mismatch (file corrupted)");

    ByteReader r(bytes.data(), bytes.size() - 4, path.string());
    char magic[4];
    r.get_bytes(magic, 4);
    const auto version = r.get_le<std::uint16_t>();
    if (version != kIndexVersion)
        throw io_error(path.string() + ": unsupported DLSI version " + std::to_string(version));

    LinkIndex index;
    index.count = r.get_le<std::uint64_t>();
    index.dim = r.get_le<std::uint32_t>();
    index.root_id = r.get_le<std::uint64_t>();
    index.k_index = r.get_le<std::uint32_t>();
    index.seed = r.get_le<std::uint64_t>();
    index.stats.distance_computations = r.get_le<std::uint64_t>();

    if (index.count > (1ull << 40))
        throw io_error(path.string() + ": implausible node count");
    if (index.root_id >= index.count && index.count > 0)
        throw io_error(path.string() + ": root id out of range");

    index.links.resize(static_cast<std::size_t>(index.count));
    for (auto& links : index.links) {
        const auto n = r.get_le<std::uint32_t>();
        if (static_cast<std::size_t>(n) * 12 > r.remaining())
            throw io_error(path.string() + ": truncated link array");
        links.resize(n);
        for (Link& l : links) {
            l.endpoint = r.get_le<std::uint64_t>();
            l.length = r.get_f32_le();
            if (l.endpoint >= index.count)
                throw io_error(path.string() + ": link endpoint out of range");
            check_finite(l.length, path.string(), r.position());
        }
    }
    if (r.remaining() != 0)
        throw io_error(path.string() + ": " + std::to_string(r.remaining()) +
                       " trailing bytes after link arrays");
    return index;
}

// ---- trec-style text files ---------------------------------------------

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    return fields;
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t lineno,
                             const std::string& what) {
    throw io_error(path.string() + ":" + std::to_string(lineno) + ": " + what);
}

}  // namespace

QrelSet parse_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string() + " for reading");

    QrelSet qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 4)
            line_error(path, lineno, "expected 4 fields `qid 0 docid judgment`, got " +
                                         std::to_string(fields.size()));
        long judgment = 0;
        try {
            judgment = std::stol(fields[3]);
        } catch (const std::exception&) {
            line_error(path, lineno, "judgment `" + fields[3] + "` is not an integer");
        }
        try {
            qrels.queries[fields[0]].add(fields[2], judgment > 0);
        } catch (const std::invalid_argument& e) {
            line_error(path, lineno, e.what());
        }
    }
    return qrels;
}

RunRanking parse_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string() + " for reading");

    RunRanking run;
    std::map<std::string, std::unordered_map<std::string, bool>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 6)
            line_error(path, lineno, "expected 6 fields `qid Q0 docid rank score tag`, got " +
                                         std::to_string(fields.size()));
        double score = 0.0;
        try {
            score = std::stod(fields[4]);
        } catch (const std::exception&) {
            line_error(path, lineno, "score `" + fields[4] + "` is not a number");
        }
        if (!seen[fields[0]].emplace(fields[2], true).second)
            line_error(path, lineno,
                       "duplicate document " + fields[2] + " for query " + fields[0]);
        run.queries[fields[0]].push_back(RunEntry{fields[2], score});
    }

    // establish the non-increasing-score invariant; ties keep file order
    for (auto& [qid, entries] : run.queries)
        std::stable_sort(entries.begin(), entries.end(),
                         [](const RunEntry& a, const RunEntry& b) { return a.score > b.score; });
    return run;
}

void write_run(const RunRanking& run, const std::filesystem::path& path, const std::string& tag) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    for (const auto& [qid, entries] : run.queries) {
        for (std::size_t i = 0; i < entries.size(); ++i)
            out << qid << " Q0 " << entries[i].doc << ' ' << (i + 1) << ' ' << entries[i].score
                << ' ' << tag << '\n';
    }
    if (!out) throw io_error("write failure on " + path.string());
}

}  // namespace dls
