#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bucket_table.hpp"
#include "code.hpp"
#include "multi_index.hpp"

namespace wham {

/// n vectors of dimension d, row-major.
struct VectorSet {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<float> values;

    std::span<const float> row(std::size_t i) const { return {values.data() + i * d, d}; }
};

namespace io {

inline constexpr std::uint64_t kNoLimit = std::numeric_limits<std::uint64_t>::max();

// Little-endian primitives with byte-offset tracking for error reports.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::uint64_t offset() const noexcept { return offset_; }

    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

    void bytes(void* dst, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(std::string("truncated input while reading ") + what, offset_);
        }
        offset_ += n;
    }

    template <class T>
    T scalar(const char* what) {
        std::array<std::uint8_t, sizeof(T)> raw{};
        bytes(raw.data(), raw.size(), what);
        std::uint64_t v = 0;
        for (std::size_t k = 0; k < sizeof(T); ++k) v |= std::uint64_t{raw[k]} << (8 * k);
        if constexpr (std::is_floating_point_v<T>) {
            using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
            T out;
            const auto u = static_cast<U>(v);
            std::memcpy(&out, &u, sizeof(T));
            return out;
        } else {
            return static_cast<T>(v);
        }
    }

    void magic(std::string_view expected) {
        const std::uint64_t at = offset_;
        std::array<char, 4> got{};
        bytes(got.data(), 4, "magic");
        if (std::string_view(got.data(), 4) != expected) {
            throw FormatError("bad magic, expected \"" + std::string(expected) + "\"", at);
        }
    }

private:
    std::istream& in_;
    std::uint64_t offset_ = 0;
};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void bytes(const void* src, std::size_t n) {
        out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
    }

    template <class T>
    void scalar(T value) {
        std::uint64_t v = 0;
        if constexpr (std::is_floating_point_v<T>) {
            using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
            U u;
            std::memcpy(&u, &value, sizeof(T));
            v = u;
        } else {
            v = static_cast<std::uint64_t>(value);
        }
        std::array<std::uint8_t, sizeof(T)> raw{};
        for (std::size_t k = 0; k < sizeof(T); ++k) raw[k] = static_cast<std::uint8_t>(v >> (8 * k));
        bytes(raw.data(), raw.size());
    }

private:
    std::ostream& out_;
};

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for reading");
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace io

// ---------------------------------------------------------------------------
// fvecs / bvecs: each record is an i32 dimension followed by d values.

namespace detail {

template <class T>
VectorSet read_vecs(std::istream& in, std::uint64_t limit) {
    io::Reader r(in);
    VectorSet vs;
    std::vector<T> buf;
    while (vs.n < limit && !r.at_eof()) {
        const std::uint64_t at = r.offset();
        const auto d = r.scalar<std::int32_t>("record dimension");
        if (d <= 0) throw FormatError("record dimension must be positive, got " + std::to_string(d), at);
        if (vs.n == 0) {
            vs.d = static_cast<std::size_t>(d);
        } else if (static_cast<std::size_t>(d) != vs.d) {
            throw FormatError("record " + std::to_string(vs.n) + " declares d=" + std::to_string(d) +
                                  " but earlier records have d=" + std::to_string(vs.d),
                              at);
        }
        buf.resize(vs.d);
        if constexpr (sizeof(T) == 1) {
            r.bytes(buf.data(), vs.d, "vector components");
        } else {
            for (auto& v : buf) v = r.scalar<T>("vector components");
        }
        vs.values.insert(vs.values.end(), buf.begin(), buf.end());
        ++vs.n;
    }
    return vs;
}

template <class T>
void write_vecs(std::ostream& out, const VectorSet& vs) {
    io::Writer w(out);
    for (std::size_t i = 0; i < vs.n; ++i) {
        w.scalar(static_cast<std::int32_t>(vs.d));
        for (float v : vs.row(i)) {
            if constexpr (sizeof(T) == 1) {
                w.scalar(static_cast<std::uint8_t>(v));
            } else {
                w.scalar(static_cast<float>(v));
            }
        }
    }
}

}  // namespace detail

inline VectorSet read_fvecs(std::istream& in, std::uint64_t limit = io::kNoLimit) {
    return detail::read_vecs<float>(in, limit);
}

/// Reads at most `limit` records; memory stays proportional to what is kept.
inline VectorSet read_bvecs(std::istream& in, std::uint64_t limit = io::kNoLimit) {
    return detail::read_vecs<std::uint8_t>(in, limit);
}

inline VectorSet read_fvecs(const std::string& path, std::uint64_t limit = io::kNoLimit) {
    auto in = io::open_in(path);
    return read_fvecs(in, limit);
}

inline VectorSet read_bvecs(const std::string& path, std::uint64_t limit = io::kNoLimit) {
    auto in = io::open_in(path);
    return read_bvecs(in, limit);
}

inline void write_fvecs(std::ostream& out, const VectorSet& vs) { detail::write_vecs<float>(out, vs); }
inline void write_bvecs(std::ostream& out, const VectorSet& vs) {
    detail::write_vecs<std::uint8_t>(out, vs);
}

inline void write_fvecs(const std::string& path, const VectorSet& vs) {
    auto out = io::open_out(path);
    write_fvecs(out, vs);
    io::finish(out, path);
}

inline void write_bvecs(const std::string& path, const VectorSet& vs) {
    auto out = io::open_out(path);
    write_bvecs(out, vs);
    io::finish(out, path);
}

/// Picks the reader from the extension (.bvecs, otherwise fvecs).
inline VectorSet read_vectors(const std::string& path, std::uint64_t limit = io::kNoLimit) {
    auto ends_with = [&](std::string_view ext) {
        return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
    };
    if (ends_with(".bvecs")) return read_bvecs(path, limit);
    if (ends_with(".fvecs")) return read_fvecs(path, limit);
    throw ArgumentError("cannot tell the vector format of " + path + " (expected .fvecs or .bvecs)");
}

// ---------------------------------------------------------------------------
// Seeded fixtures.

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Random-hyperplane binarizer: bit i is set iff <x, p_i> >= t_i.
struct LshModel {
    std::uint64_t seed = 0;
    std::size_t dim = 0;
    std::size_t bits = 0;
    std::vector<double> projections;  // bits x dim, standard normal entries
    std::vector<double> thresholds;   // zero by default

    static LshModel make(std::size_t dim, std::size_t bits, std::uint64_t seed) {
        detail::check_bits(bits);
        if (dim == 0) throw ArgumentError("LSH needs a positive vector dimension");
        LshModel model{seed, dim, bits, std::vector<double>(bits * dim), std::vector<double>(bits, 0.0)};
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& p : model.projections) p = normal(rng);
        return model;
    }

    BinaryCode encode(std::span<const float> x) const {
        if (x.size() != dim) {
            throw DimensionError("vector of dimension " + std::to_string(x.size()) +
                                 " given to an LSH model of dimension " + std::to_string(dim));
        }
        BinaryCode code(bits);
        for (std::size_t i = 0; i < bits; ++i) {
            const double* p = projections.data() + i * dim;
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += p[k] * static_cast<double>(x[k]);
            code.set(i, dot >= thresholds[i]);
        }
        return code;
    }
};

inline CodeSet binarize_lsh(const VectorSet& vs, std::size_t b, std::uint64_t seed) {
    if (b < 1 || b > kMaxBits) {
        throw ArgumentError("code length " + std::to_string(b) + " outside [1, 256]");
    }
    CodeSet codes(b);
    if (vs.n == 0) return codes;
    const auto model = LshModel::make(vs.d, b, seed);
    codes.reserve(vs.n);
    for (std::size_t i = 0; i < vs.n; ++i) codes.push_back(model.encode(vs.row(i)));
    return codes;
}

enum class WeightScheme { unit, uniform_asym };

inline WeightScheme parse_weight_scheme(std::string_view name) {
    if (name == "unit") return WeightScheme::unit;
    if (name == "uniform-asym") return WeightScheme::uniform_asym;
    throw ArgumentError("unknown weight scheme '" + std::string(name) +
                        "' (expected unit or uniform-asym)");
}

/// unit: (0, 1) per bit. uniform-asym: w(0) = 0, w(1) uniform in [0.5, 1.5).
inline WeightTable synth_weights(std::size_t b, std::uint64_t seed, WeightScheme scheme) {
    detail::check_bits(b);
    if (scheme == WeightScheme::unit) return WeightTable::unit(b);
    std::mt19937_64 rng(seed);
    std::vector<WeightTable::Entry> e(b);
    for (auto& x : e) x = {0.0, 0.5 + detail::unit_uniform(rng)};
    return WeightTable(std::move(e));
}

inline WeightTable synth_weights(std::size_t b, std::uint64_t seed, std::string_view scheme) {
    return synth_weights(b, seed, parse_weight_scheme(scheme));
}

/// Uniformly random codes.
inline CodeSet random_codes(std::size_t n, std::size_t b, std::uint64_t seed) {
    CodeSet codes(b);
    codes.reserve(n);
    std::mt19937_64 rng(seed);
    BinaryCode c(b);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < b; ++j) c.set(j, (rng() >> 63) != 0);
        codes.push_back(c);
    }
    return codes;
}

/// Codes scattered around random centers: each code copies a random center
/// and flips every bit independently with probability `flip`.
struct ClusteredCodes {
    CodeSet base;
    CodeSet queries;
};

inline ClusteredCodes clustered_codes(std::size_t n, std::size_t nq, std::size_t b,
                                      std::size_t clusters, double flip, std::uint64_t seed) {
    if (clusters == 0) throw ArgumentError("clustered_codes needs at least one cluster");
    const CodeSet centers = random_codes(clusters, b, seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 rng(seed);
    auto draw = [&](std::size_t count) {
        CodeSet out(b);
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            BinaryCode c = centers.code(rng() % clusters);
            for (std::size_t j = 0; j < b; ++j) {
                if (detail::unit_uniform(rng) < flip) c.flip(j);
            }
            out.push_back(c);
        }
        return out;
    };
    ClusteredCodes cc{draw(n), {}};
    cc.queries = draw(nq);
    return cc;
}

/// Isotropic Gaussian blobs: centers ~ N(0, I), points = center + spread * N(0, I).
struct VectorSplit {
    VectorSet base;
    VectorSet queries;
};

inline VectorSplit gaussian_mixture(std::size_t n, std::size_t nq, std::size_t d,
                                    std::size_t clusters, double spread, std::uint64_t seed) {
    if (clusters == 0 || d == 0) throw ArgumentError("gaussian_mixture needs clusters >= 1 and d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> centers(clusters * d);
    for (auto& c : centers) c = normal(rng);
    auto draw = [&](std::size_t count) {
        VectorSet vs{count, d, std::vector<float>(count * d)};
        for (std::size_t i = 0; i < count; ++i) {
            const double* c = centers.data() + (rng() % clusters) * d;
            for (std::size_t k = 0; k < d; ++k) {
                vs.values[i * d + k] = static_cast<float>(c[k] + spread * normal(rng));
            }
        }
        return vs;
    };
    VectorSplit split{draw(n), {}};
    split.queries = draw(nq);
    return split;
}

// ---------------------------------------------------------------------------
// WHC1 codes: magic, u32 b, u64 n, n records of ⌈b/8⌉ bytes.

inline void write_codes(std::ostream& out, const CodeSet& codes) {
    io::Writer w(out);
    w.bytes("WHC1", 4);
    w.scalar(static_cast<std::uint32_t>(codes.bits()));
    w.scalar(static_cast<std::uint64_t>(codes.size()));
    w.bytes(codes.raw().data(), codes.raw().size());
}

namespace detail {

inline CodeSet read_codes(io::Reader& r) {
    r.magic("WHC1");
    const std::uint64_t at_b = r.offset();
    const auto b = r.scalar<std::uint32_t>("code length");
    if (b < 1 || b > kMaxBits) throw FormatError("code length " + std::to_string(b) + " out of range", at_b);
    const auto n = r.scalar<std::uint64_t>("code count");
    const std::size_t stride = bytes_for(b);
    const std::uint64_t at_data = r.offset();
    std::vector<std::uint8_t> data;
    // Grow in blocks so a corrupt count fails on truncation, not on allocation.
    constexpr std::uint64_t block = 1 << 16;
    for (std::uint64_t done = 0; done < n;) {
        const std::uint64_t take = std::min(block, n - done);
        const std::size_t old = data.size();
        data.resize(old + take * stride);
        r.bytes(data.data() + old, take * stride, "code records");
        done += take;
    }
    const auto mask = detail::padding_mask(b);
    for (std::uint64_t i = 0; i < n; ++i) {
        if ((data[i * stride + stride - 1] & mask) != 0) {
            throw FormatError("nonzero padding bits in code " + std::to_string(i),
                              at_data + i * stride + stride - 1);
        }
    }
    return CodeSet::from_raw(b, std::move(data));
}

}  // namespace detail

inline CodeSet read_codes(std::istream& in) {
    io::Reader r(in);
    return detail::read_codes(r);
}

inline void save_codes(const std::string& path, const CodeSet& codes) {
    auto out = io::open_out(path);
    write_codes(out, codes);
    io::finish(out, path);
}

inline CodeSet load_codes(const std::string& path) {
    auto in = io::open_in(path);
    return read_codes(in);
}

// WHW1 weights: magic, u32 b, b pairs of f64 (w_i(0), w_i(1)).

inline void write_weights(std::ostream& out, const WeightTable& w) {
    io::Writer wr(out);
    wr.bytes("WHW1", 4);
    wr.scalar(static_cast<std::uint32_t>(w.size()));
    for (const auto& e : w.entries()) {
        wr.scalar(e[0]);
        wr.scalar(e[1]);
    }
}

inline WeightTable read_weights(std::istream& in) {
    io::Reader r(in);
    r.magic("WHW1");
    const std::uint64_t at_b = r.offset();
    const auto b = r.scalar<std::uint32_t>("code length");
    if (b < 1 || b > kMaxBits) throw FormatError("code length " + std::to_string(b) + " out of range", at_b);
    const std::uint64_t at_w = r.offset();
    std::vector<WeightTable::Entry> e(b);
    for (auto& x : e) {
        x[0] = r.scalar<double>("weights");
        x[1] = r.scalar<double>("weights");
    }
    try {
        return WeightTable(std::move(e));
    } catch (const InvalidWeightError& err) {
        throw FormatError(err.what(), at_w);
    }
}

inline void save_weights(const std::string& path, const WeightTable& w) {
    auto out = io::open_out(path);
    write_weights(out, w);
    io::finish(out, path);
}

inline WeightTable load_weights(const std::string& path) {
    auto in = io::open_in(path);
    return read_weights(in);
}

// WHI1 index: magic, u32 b, u32 m, u64 n, m x (u32 start, u32 length), then
// per table a u64 bucket count and, per bucket in ascending key order, the key
// in ⌈length/8⌉ bytes, a u32 posting count and that many u64 ids; finally the
// stored codes as a complete WHC1 block.

inline void write_index(std::ostream& out, const MultiIndex& ix) {
    io::Writer w(out);
    w.bytes("WHI1", 4);
    w.scalar(static_cast<std::uint32_t>(ix.bits()));
    w.scalar(static_cast<std::uint32_t>(ix.m()));
    w.scalar(static_cast<std::uint64_t>(ix.size()));
    for (const Span& s : ix.spans()) {
        w.scalar(s.start);
        w.scalar(s.length);
    }
    for (std::size_t t = 0; t < ix.m(); ++t) {
        const auto& table = ix.table(t);
        const std::size_t key_bytes = bytes_for(ix.spans()[t].length);
        w.scalar(static_cast<std::uint64_t>(table.bucket_count()));
        table.for_each_bucket([&](std::uint64_t key, std::span<const Id> ids) {
            for (std::size_t k = 0; k < key_bytes; ++k) w.scalar(static_cast<std::uint8_t>(key >> (8 * k)));
            w.scalar(static_cast<std::uint32_t>(ids.size()));
            for (Id id : ids) w.scalar(static_cast<std::uint64_t>(id));
        });
    }
    write_codes(out, ix.codes());
}

inline MultiIndex read_index(std::istream& in) {
    io::Reader r(in);
    r.magic("WHI1");
    const std::uint64_t at_b = r.offset();
    const auto b = r.scalar<std::uint32_t>("code length");
    if (b < 1 || b > kMaxBits) throw FormatError("code length " + std::to_string(b) + " out of range", at_b);
    const std::uint64_t at_m = r.offset();
    const auto m = r.scalar<std::uint32_t>("table count");
    if (m < 1 || m > b) throw FormatError("table count " + std::to_string(m) + " out of range", at_m);
    const auto n = r.scalar<std::uint64_t>("code count");

    std::vector<Span> spans(m);
    std::uint32_t expect_start = 0;
    for (auto& s : spans) {
        const std::uint64_t at = r.offset();
        s.start = r.scalar<std::uint32_t>("span start");
        s.length = r.scalar<std::uint32_t>("span length");
        if (s.start != expect_start || s.length == 0 || s.length > kMaxEnumBits) {
            throw FormatError("spans must be contiguous, non-empty and at most 64 bits", at);
        }
        expect_start += s.length;
    }
    if (expect_start != b) throw FormatError("spans do not cover the code length", r.offset());

    struct RawTable {
        std::vector<std::uint64_t> keys;
        std::vector<std::size_t> starts;
        std::vector<Id> ids;
        std::uint64_t at;
    };
    std::vector<RawTable> raw(m);
    for (std::size_t t = 0; t < m; ++t) {
        RawTable& rt = raw[t];
        rt.at = r.offset();
        const std::size_t key_bytes = bytes_for(spans[t].length);
        const auto buckets = r.scalar<std::uint64_t>("bucket count");
        if (buckets > n) throw FormatError("more buckets than codes", rt.at);
        rt.starts.push_back(0);
        for (std::uint64_t k = 0; k < buckets; ++k) {
            const std::uint64_t at_key = r.offset();
            std::uint64_t key = 0;
            for (std::size_t i = 0; i < key_bytes; ++i) {
                key |= std::uint64_t{r.scalar<std::uint8_t>("bucket key")} << (8 * i);
            }
            if (spans[t].length < 64 && (key >> spans[t].length) != 0) {
                throw FormatError("bucket key has bits beyond its span", at_key);
            }
            if (!rt.keys.empty() && key <= rt.keys.back()) {
                throw FormatError("bucket keys must be strictly ascending", at_key);
            }
            const std::uint64_t at_count = r.offset();
            const auto count = r.scalar<std::uint32_t>("posting count");
            if (count == 0 || rt.ids.size() + count > n) {
                throw FormatError("invalid posting count", at_count);
            }
            for (std::uint32_t p = 0; p < count; ++p) {
                const std::uint64_t at_id = r.offset();
                const auto id = r.scalar<std::uint64_t>("posting id");
                if (id >= n) throw FormatError("posting id out of range", at_id);
                rt.ids.push_back(id);
            }
            rt.keys.push_back(key);
            rt.starts.push_back(rt.ids.size());
        }
        if (rt.ids.size() != n) throw FormatError("table does not hold every id exactly once", rt.at);
    }

    CodeSet codes = detail::read_codes(r);
    if (codes.bits() != b || codes.size() != n) {
        throw FormatError("embedded code block does not match the index header", r.offset());
    }

    std::vector<BucketTable> tables;
    tables.reserve(m);
    std::vector<char> hit(n);
    for (std::size_t t = 0; t < m; ++t) {
        RawTable& rt = raw[t];
        std::fill(hit.begin(), hit.end(), 0);
        for (std::size_t k = 0; k < rt.keys.size(); ++k) {
            for (std::size_t p = rt.starts[k]; p < rt.starts[k + 1]; ++p) {
                const Id id = rt.ids[p];
                if (hit[id]) throw FormatError("id listed twice in one table", rt.at);
                hit[id] = 1;
                if (codes.word(id, spans[t].start, spans[t].length) != rt.keys[k]) {
                    throw FormatError("posting filed under the wrong bucket", rt.at);
                }
            }
        }
        tables.push_back(BucketTable::from_buckets(spans[t].length, std::move(rt.keys),
                                                   std::move(rt.starts), std::move(rt.ids)));
    }
    return MultiIndex(std::move(codes), std::move(spans), std::move(tables));
}

inline void save_index(const std::string& path, const MultiIndex& ix) {
    auto out = io::open_out(path);
    write_index(out, ix);
    io::finish(out, path);
}

inline MultiIndex load_index(const std::string& path) {
    auto in = io::open_in(path);
    return read_index(in);
}

}  // namespace wham
