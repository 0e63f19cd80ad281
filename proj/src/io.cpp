#include "alignet/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "alignet/affine.hpp"
#include "alignet/hash.hpp"
#include "alignet/student.hpp"

namespace alignet {

namespace {

// ---- little-endian primitives --------------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFull));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

class BinaryReader {
  public:
    BinaryReader(const std::string& path, const char* expect_magic) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) fail("IoFailure", "cannot open '" + path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        bytes_ = buf.str();
        char magic[4];
        read_raw(magic, 4, "magic");
        if (std::memcmp(magic, expect_magic, 4) != 0)
            fail("BadMagic", "'" + path + "' does not start with \"" + expect_magic +
                                 "\" (byte offset 0)");
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        read_raw(reinterpret_cast<char*>(b), 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    std::uint64_t u64(const char* what) {
        const std::uint64_t lo = u32(what);
        const std::uint64_t hi = u32(what);
        return lo | (hi << 32);
    }

    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double f64(const char* what) {
        const std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string blob(std::size_t n, const char* what) {
        std::string out(n, '\0');
        read_raw(out.data(), n, what);
        return out;
    }

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return bytes_.size() - offset_; }

    void expect_end(const char* what) {
        if (remaining() != 0)
            fail("TruncatedFile", "'" + path_ + "': " + std::to_string(remaining()) +
                                      " unexpected trailing bytes after " + what + " (byte offset " +
                                      std::to_string(offset_) + ")");
    }

  private:
    void read_raw(char* dst, std::size_t n, const char* what) {
        if (offset_ + n > bytes_.size())
            fail("TruncatedFile", "'" + path_ + "' ends inside " + std::string(what) +
                                      " (byte offset " + std::to_string(bytes_.size()) + ", needed " +
                                      std::to_string(offset_ + n) + ")");
        std::memcpy(dst, bytes_.data() + offset_, n);
        offset_ += n;
    }

    std::string path_;
    std::string bytes_;
    std::size_t offset_ = 0;
};

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("IoFailure", "cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail("IoFailure", "short write to '" + path + "'");
}

// Shortest decimal round-trip formatting for doubles; keeps text outputs
// byte-stable across runs.
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == '\t' || ch == ' ') {
            if (!cur.empty()) fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) fields.push_back(std::move(cur));
    return fields;
}

std::uint32_t parse_index(const std::string& field, std::size_t line_no) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(field, &pos);
    } catch (const std::exception&) {
        fail("ParseError", "line " + std::to_string(line_no) + ": '" + field + "' is not an index");
    }
    if (pos != field.size())
        fail("ParseError", "line " + std::to_string(line_no) + ": '" + field + "' is not an index");
    if (v < 0 || v > 0xFFFFFFFFll)
        fail("IndexOutOfRange", "line " + std::to_string(line_no) + ": index " + field +
                                    " out of range");
    return static_cast<std::uint32_t>(v);
}

double parse_real(const std::string& field, std::size_t line_no) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        fail("ParseError", "line " + std::to_string(line_no) + ": '" + field + "' is not a number");
    }
    if (pos != field.size())
        fail("ParseError", "line " + std::to_string(line_no) + ": '" + field + "' is not a number");
    return v;
}

std::int64_t parse_label(const std::string& field, std::size_t line_no) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(field, &pos);
    } catch (const std::exception&) {
        fail("ParseError", "line " + std::to_string(line_no) + ": '" + field + "' is not a label id");
    }
    if (pos != field.size())
        fail("ParseError", "line " + std::to_string(line_no) + ": '" + field + "' is not a label id");
    return v;
}

ProbTriple parse_soft(const std::vector<std::string>& fields, std::size_t first,
                      std::size_t line_no) {
    ProbTriple q;
    for (int pair = 0; pair < 3; ++pair) {
        q[pair] = parse_real(fields[first + static_cast<std::size_t>(pair)], line_no);
        if (!(q[pair] >= 0.0) || !std::isfinite(q[pair]))
            fail("SoftNotNormalized",
                 "line " + std::to_string(line_no) + ": probabilities must be >= 0");
    }
    const double sum = q.sum();
    // Normalization tolerance: text rounding within 1e-6 is repaired, worse is rejected.
    if (std::abs(sum - 1.0) > 1e-6)
        fail("SoftNotNormalized",
             "line " + std::to_string(line_no) + ": probabilities sum to " + fmt_double(sum));
    q.q_ij /= sum;
    q.q_ik /= sum;
    q.q_jk /= sum;
    return q;
}

} // namespace

// ---- embeddings ------------------------------------------------------------

EmbeddingMatrix load_embeddings(const std::string& path) {
    BinaryReader reader(path, "EMB1");
    const std::uint32_t m = reader.u32("row count");
    const std::uint32_t p = reader.u32("dim count");
    if (m == 0 || p == 0) fail("EmptyMatrix", "'" + path + "' declares a zero dimension");
    EmbeddingMatrix mat(m, p);
    for (std::size_t idx = 0; idx < mat.data.size(); ++idx) {
        const std::size_t offset = reader.offset();
        const float v = reader.f32("float payload");
        if (!std::isfinite(v))
            fail("NonFiniteValue", "'" + path + "': non-finite value at byte offset " +
                                       std::to_string(offset));
        mat.data[idx] = static_cast<double>(v);
    }
    const std::uint32_t id_len = reader.u32("id block length");
    if (id_len > 0) {
        const std::string block = reader.blob(id_len, "id block");
        std::istringstream ids(block);
        std::string id;
        while (std::getline(ids, id)) mat.item_ids.push_back(id);
        if (mat.item_ids.size() != m)
            fail("LengthMismatch", "'" + path + "': id block has " +
                                       std::to_string(mat.item_ids.size()) + " ids for " +
                                       std::to_string(m) + " rows");
    }
    reader.expect_end("id block");
    mat.validate();
    return mat;
}

void save_embeddings(const EmbeddingMatrix& mat, const std::string& path) {
    mat.validate();
    std::string out;
    out.reserve(16 + mat.data.size() * 4);
    out += "EMB1";
    put_u32(out, static_cast<std::uint32_t>(mat.rows));
    put_u32(out, static_cast<std::uint32_t>(mat.dims));
    for (double v : mat.data) put_f32(out, static_cast<float>(v));
    if (mat.item_ids.empty()) {
        put_u32(out, 0);
    } else {
        std::string block;
        for (std::size_t r = 0; r < mat.item_ids.size(); ++r) {
            block += mat.item_ids[r];
            block.push_back('\n');
        }
        put_u32(out, static_cast<std::uint32_t>(block.size()));
        out += block;
    }
    write_file(path, out);
}

// ---- affine transform ------------------------------------------------------

AffineTransform load_affine(const std::string& path) {
    BinaryReader reader(path, "AFF1");
    const std::uint32_t p = reader.u32("dim");
    if (p == 0) fail("EmptyMatrix", "'" + path + "' declares p = 0");
    AffineTransform t;
    t.dim = p;
    t.weight.resize(static_cast<std::size_t>(p) * p);
    t.bias.resize(p);
    for (auto& v : t.weight) v = static_cast<double>(reader.f32("weight payload"));
    for (auto& v : t.bias) v = static_cast<double>(reader.f32("bias payload"));
    reader.expect_end("bias payload");
    t.validate();
    return t;
}

void save_affine(const AffineTransform& t, const std::string& path) {
    t.validate();
    std::string out;
    out += "AFF1";
    put_u32(out, static_cast<std::uint32_t>(t.dim));
    for (double v : t.weight) put_f32(out, static_cast<float>(v));
    for (double v : t.bias) put_f32(out, static_cast<float>(v));
    write_file(path, out);
}

// ---- student checkpoint ----------------------------------------------------

StudentParams load_student(const std::string& path) {
    BinaryReader reader(path, "STU1");
    const std::uint32_t n_widths = reader.u32("width count");
    if (n_widths < 2) fail("ParseError", "'" + path + "': architecture needs at least two widths");
    StudentParams sp;
    sp.arch.widths.resize(n_widths);
    for (auto& w : sp.arch.widths) w = reader.u32("width");
    const std::uint32_t nonlin = reader.u32("nonlinearity");
    if (nonlin > 1) fail("ParseError", "'" + path + "': unknown nonlinearity tag");
    sp.arch.nonlin = nonlin == 0 ? Nonlinearity::identity : Nonlinearity::gelu;
    sp.arch.validate();
    const std::uint64_t n_params = reader.u64("parameter count");
    if (n_params != sp.arch.param_count())
        fail("LengthMismatch", "'" + path + "': parameter count does not match architecture");
    sp.theta.resize(n_params);
    sp.theta_init.resize(n_params);
    for (auto& v : sp.theta) v = reader.f64("theta");
    for (auto& v : sp.theta_init) v = reader.f64("theta_init");
    reader.expect_end("theta_init");
    return sp;
}

void save_student(const StudentParams& sp, const std::string& path) {
    sp.arch.validate();
    std::string out;
    out += "STU1";
    put_u32(out, static_cast<std::uint32_t>(sp.arch.widths.size()));
    for (std::size_t w : sp.arch.widths) put_u32(out, static_cast<std::uint32_t>(w));
    put_u32(out, sp.arch.nonlin == Nonlinearity::identity ? 0u : 1u);
    put_u64(out, sp.theta.size());
    for (double v : sp.theta) put_f64(out, v);
    for (double v : sp.theta_init) put_f64(out, v);
    write_file(path, out);
}

// ---- triplet files ---------------------------------------------------------

LoadedTriplets load_triplets(const std::string& path, TripletFileKind kind) {
    std::ifstream in(path);
    if (!in) fail("IoFailure", "cannot open '" + path + "'");
    LoadedTriplets result;
    TripletDataset& ds = result.dataset;
    switch (kind) {
    case TripletFileKind::unlabeled: ds.kind = LabelKind::none; break;
    case TripletFileKind::hard: ds.kind = LabelKind::hard; break;
    case TripletFileKind::soft: ds.kind = LabelKind::soft; break;
    case TripletFileKind::alignet: ds.kind = LabelKind::both; break;
    }
    ds.source_tag = path;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (kind == TripletFileKind::alignet && line.rfind("# transform=", 0) == 0) {
                AligNetMeta meta;
                std::istringstream hdr(line.substr(2));
                std::string token;
                while (hdr >> token) {
                    if (token.rfind("transform=", 0) == 0) {
                        meta.transform_hash = std::stoull(token.substr(10), nullptr, 16);
                    } else if (token.rfind("tau=", 0) == 0) {
                        meta.tau = std::stod(token.substr(4));
                    }
                }
                result.meta = meta;
            }
            continue;
        }
        const auto fields = split_fields(line);
        std::size_t expected = 3;
        if (kind == TripletFileKind::hard) expected = 5;
        if (kind == TripletFileKind::soft) expected = 6;
        if (kind == TripletFileKind::alignet) expected = 8;
        if (fields.size() != expected)
            fail("ParseError", "line " + std::to_string(line_no) + ": expected " +
                                   std::to_string(expected) + " fields, got " +
                                   std::to_string(fields.size()));
        Triplet t;
        t.i = parse_index(fields[0], line_no);
        t.j = parse_index(fields[1], line_no);
        t.k = parse_index(fields[2], line_no);
        if (t.i == t.j || t.i == t.k || t.j == t.k)
            fail("DuplicateIndexInTriple", "line " + std::to_string(line_no) +
                                               ": triplet indices must be pairwise distinct");
        ds.triplets.push_back(t);
        if (kind == TripletFileKind::hard || kind == TripletFileKind::alignet) {
            HardChoice c;
            c.a = parse_index(fields[3], line_no);
            c.b = parse_index(fields[4], line_no);
            try {
                choice_pair_index(t, c);
            } catch (const Error& e) {
                fail(e.code(), "line " + std::to_string(line_no) + ": chosen pair not in triple");
            }
            ds.hard.push_back(c);
        }
        if (kind == TripletFileKind::soft) {
            ds.soft.push_back(parse_soft(fields, 3, line_no));
        } else if (kind == TripletFileKind::alignet) {
            ds.soft.push_back(parse_soft(fields, 5, line_no));
        }
    }
    ds.validate();
    return result;
}

void save_triplets(const TripletDataset& ds, const std::string& path,
                   const std::optional<AligNetMeta>& meta) {
    ds.validate();
    std::ostringstream out;
    if (meta) {
        out << "# transform=" << hex64(meta->transform_hash) << " tau=" << fmt_double(meta->tau)
            << "\n";
    }
    for (std::size_t s = 0; s < ds.size(); ++s) {
        const Triplet& t = ds.triplets[s];
        out << t.i << '\t' << t.j << '\t' << t.k;
        if (ds.has_hard()) out << '\t' << ds.hard[s].a << '\t' << ds.hard[s].b;
        if (ds.has_soft()) {
            const ProbTriple& q = ds.soft[s];
            out << '\t' << fmt_double(q.q_ij) << '\t' << fmt_double(q.q_ik) << '\t'
                << fmt_double(q.q_jk);
        }
        out << '\n';
    }
    write_file(path, out.str());
}

void validate_pairing(const EmbeddingMatrix& mat, const TripletDataset& ds) {
    std::string offenders;
    std::size_t count = 0;
    for (std::size_t s = 0; s < ds.size(); ++s) {
        const Triplet& t = ds.triplets[s];
        if (t.i >= mat.rows || t.j >= mat.rows || t.k >= mat.rows) {
            if (count < 8) {
                if (!offenders.empty()) offenders += ", ";
                offenders += std::to_string(s);
            }
            ++count;
        }
    }
    if (count > 0)
        fail("IndexOutOfRange", std::to_string(count) + " triplet rows index beyond m = " +
                                    std::to_string(mat.rows) + " (rows " + offenders +
                                    (count > 8 ? ", ..." : "") + ")");
}

// ---- labels ----------------------------------------------------------------

HierarchyLabels load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("IoFailure", "cannot open '" + path + "'");
    HierarchyLabels labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() != 4 && fields.size() != 5)
            fail("ParseError", "line " + std::to_string(line_no) +
                                   ": expected `item_id subordinate basic superordinate [cluster]`");
        labels.item_ids.push_back(fields[0]);
        labels.subordinate.push_back(parse_label(fields[1], line_no));
        labels.basic.push_back(parse_label(fields[2], line_no));
        labels.superordinate.push_back(parse_label(fields[3], line_no));
        labels.cluster.push_back(fields.size() == 5 ? parse_label(fields[4], line_no) : -1);
    }
    return labels;
}

void save_labels(const HierarchyLabels& labels, const std::string& path) {
    std::ostringstream out;
    const bool any_cluster =
        std::any_of(labels.cluster.begin(), labels.cluster.end(), [](auto c) { return c >= 0; });
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::string id =
            labels.item_ids.empty() ? "item" + std::to_string(i) : labels.item_ids[i];
        out << id << '\t' << labels.subordinate[i] << '\t' << labels.basic[i] << '\t'
            << labels.superordinate[i];
        if (any_cluster) out << '\t' << labels.cluster[i];
        out << '\n';
    }
    write_file(path, out.str());
}

// ---- response times --------------------------------------------------------

ResponseTimeTable load_rts(const std::string& path, std::size_t n_triplets) {
    std::ifstream in(path);
    if (!in) fail("IoFailure", "cannot open '" + path + "'");
    ResponseTimeTable table;
    table.observations.resize(n_triplets);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() != 2)
            fail("ParseError", "line " + std::to_string(line_no) + ": expected `triplet_index rt_seconds`");
        const std::uint32_t idx = parse_index(fields[0], line_no);
        if (idx >= n_triplets)
            fail("IndexOutOfRange", "line " + std::to_string(line_no) + ": triplet index " +
                                        std::to_string(idx) + " >= " + std::to_string(n_triplets));
        const double rt = parse_real(fields[1], line_no);
        if (!(rt > 0.0) || !std::isfinite(rt))
            fail("ParseError", "line " + std::to_string(line_no) + ": response times must be > 0");
        table.observations[idx].push_back(rt);
    }
    return table;
}

void save_rts(const ResponseTimeTable& table, const std::string& path) {
    std::ostringstream out;
    for (std::size_t t = 0; t < table.observations.size(); ++t) {
        for (double rt : table.observations[t]) {
            out << t << '\t' << fmt_double(rt) << '\n';
        }
    }
    write_file(path, out.str());
}

} // namespace alignet
